#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itf/session.hpp"

namespace itf {

enum class StartCode { KR, ES, mES, WE, ST, DI };
enum class EndCode { IM, nIM, WE, ST, DI, nCON };

inline constexpr std::array<StartCode, 6> kAllStartCodes{StartCode::KR, StartCode::ES, StartCode::mES,
                                                         StartCode::WE, StartCode::ST, StartCode::DI};
inline constexpr std::array<EndCode, 6> kAllEndCodes{EndCode::IM, EndCode::nIM, EndCode::WE,
                                                     EndCode::ST, EndCode::DI,  EndCode::nCON};

std::string_view to_string(StartCode c);
std::string_view to_string(EndCode c);
StartCode parse_start_code(std::string_view text);
EndCode parse_end_code(std::string_view text);

struct Unit {
    StartCode start = StartCode::KR;
    EndCode end = EndCode::IM;
    std::uint64_t first_seq = 0;
    std::uint64_t last_seq = 0;
    // ES issued on a log without ground truth: a misdiagnosis cannot be ruled out.
    bool mes_unknowable = false;

    bool operator==(const Unit&) const = default;
};

struct CodedLog {
    std::vector<Unit> units;
    // Units still open when the session ended, or opened units abandoned by
    // a return from a subtask.
    std::size_t dropped = 0;
    // mES units opened, dropped ones included.
    std::size_t misdiagnoses = 0;
};

// Segments a log into units of analysis. Throws InvalidInput when the log
// does not replay.
CodedLog code_log(const std::vector<Event>& log);
std::vector<Unit> code_units(const std::vector<Event>& log);

// An answer improves on the previous one for the same task when it is
// closer to the correct answer. Any answer improves on no answer; no answer
// never improves.
bool improved(std::optional<double> prev, std::optional<double> next, const TaskInstance& instance);
// Variant for a baseline on other parameters (the main task before a worked
// example): distances are taken to each instance's own correct answer.
bool improved(std::optional<double> prev, const TaskInstance& prev_instance, std::optional<double> next,
              const TaskInstance& next_instance);

struct TransitionMatrix {
    std::array<std::array<int, 6>, 6> counts{};
    std::array<int, 6> row_totals{};
    std::array<int, 6> col_totals{};
    int total = 0;

    int at(StartCode s, EndCode e) const { return counts[static_cast<int>(s)][static_cast<int>(e)]; }
    bool operator==(const TransitionMatrix&) const = default;
};

TransitionMatrix transition_matrix(const std::vector<Unit>& units);
// Rows are starting states, columns next actions, totals last.
std::string format_matrix(const TransitionMatrix& m);
nlohmann::json to_json(const TransitionMatrix& m);
nlohmann::json to_json(const Unit& u);

}  // namespace itf
