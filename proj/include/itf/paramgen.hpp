#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "itf/diagnosis.hpp"
#include "itf/rng.hpp"
#include "itf/tasks.hpp"

namespace itf {

inline constexpr double kDefaultDelta = 0.5;
inline constexpr std::size_t kDefaultBankSize = 50;
inline constexpr std::size_t kDrawBudget = 1'000'000;

// Minimum gap between trace values of different diagnosis classes. All
// rounding variants of one rule chain form one class. Infinity when the
// traces span a single class.
double separation(const std::vector<Trace>& traces);
double separation(const TaskInstance& instance);

// True when no exact trace value, nor that value rounded to 0-3 decimals,
// matches a trace of another class.
bool submissions_unambiguous(const std::vector<Trace>& traces);

struct ParamBank {
    TaskKind kind = TaskKind::LinearMain;
    std::vector<ParamSet> entries;
    std::uint64_t seed = 0;
    double delta = kDefaultDelta;
    // Smallest separation over the entries.
    double separation = 0.0;
    std::size_t draws = 0;

    double acceptance_rate() const {
        return draws == 0 ? 0.0 : static_cast<double>(entries.size()) / static_cast<double>(draws);
    }
};

// Rejection sampling: draws random valid parameter sets in seed order and
// keeps distinct ones whose separation is at least `delta` and whose
// rounded submissions are unambiguous. Throws TuningFailed when the budget
// runs out, InvalidInput when delta <= 2 * kMatchTolerance.
ParamBank tune(TaskKind kind, std::size_t count, std::uint64_t seed, double delta = kDefaultDelta,
               std::size_t budget = kDrawBudget);

// One random parameter set satisfying the constraints of `kind` (before
// any separation filtering).
ParamSet random_params(TaskKind kind, Rng& rng, std::size_t max_tries = kDrawBudget);

// Uniform bank entry, different from `exclude` unless that is the only entry.
ParamSet draw(const ParamBank& bank, const std::optional<ParamSet>& exclude, Rng& rng);

nlohmann::json to_json(const ParamBank& bank);
// Reads a bank record and checks every entry against the kind's constraints.
ParamBank bank_from_json(const nlohmann::json& j);

void save_bank(const ParamBank& bank, const std::filesystem::path& file);
ParamBank load_bank(const std::filesystem::path& file);

// Banks keyed by kind.
class BankSet {
public:
    BankSet() = default;
    void add(ParamBank bank);
    bool has(TaskKind kind) const { return banks_.count(kind) != 0; }
    const ParamBank& at(TaskKind kind) const;

    // Loads `<dir>/<Kind>.json` for all eight kinds.
    static BankSet load_dir(const std::filesystem::path& dir);
    void save_dir(const std::filesystem::path& dir) const;

private:
    std::map<TaskKind, ParamBank> banks_;
};

}  // namespace itf
