#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itf/rules.hpp"
#include "itf/tasks.hpp"

namespace itf {

enum class DiagnosisClass { Correct, Buggy, Undetectable, NoInput };

std::string_view to_string(DiagnosisClass c);
DiagnosisClass parse_diagnosis_class(std::string_view text);

struct Diagnosis {
    DiagnosisClass cls = DiagnosisClass::NoInput;
    // Full rule list of the matched buggy trace; empty unless Buggy.
    std::vector<RuleId> chain;
    std::optional<RoundingMod> rounding;
    std::optional<double> matched_value;

    bool operator==(const Diagnosis&) const = default;
};

enum class FeedbackType { KR, TA, ES, WE, DI };
enum class Specificity { Low, High };
enum class FeedbackContext { MainTask, Subtask };

std::string_view to_string(FeedbackType t);
std::string_view to_string(Specificity s);

struct FeedbackMessage {
    FeedbackType type;
    Specificity specificity;
    std::string text;

    bool operator==(const FeedbackMessage&) const = default;
};

// Absolute half-width of the window in which a submission matches a value.
inline constexpr double kMatchTolerance = 0.005;
// Relative widening for values too large for the absolute window.
inline constexpr double kRelativeFloor = 1e-12;

// |submitted - value| <= max(tolerance, floor * |value|), or submitted equals value rounded to
// 0, 1, 2 or 3 decimals.
bool answer_matches(double submitted, double value);

// Every legal rule combination of the kind times every applicable rounding,
// each with its evaluated value.
std::vector<Trace> enumerate_traces(const TaskInstance& instance);

// Classifies a final answer. Throws InvalidInput for non-finite values.
Diagnosis diagnose(const TaskInstance& instance, std::optional<double> submitted);
Diagnosis diagnose(const std::vector<Trace>& traces, std::optional<double> submitted);

// Subtask for a diagnosis on a main task. Throws InvalidInput when `kind`
// is not a main kind.
std::optional<TaskKind> route_subtask(const Diagnosis& diag, TaskKind kind);

// KR always; ES when the answer was matched to a buggy chain; TA unless the
// answer is correct.
std::vector<FeedbackMessage> feedback_for(const Diagnosis& diag, FeedbackContext context,
                                          const TaskInstance& instance,
                                          const RuleCatalog& rules = RuleCatalog::builtin());

// Replaces {name} placeholders.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars);

struct WorkedExample {
    TaskKind kind;
    std::vector<std::string> steps;
    double answer;
};

// Correct solution with every step spelled out, numbers shown to 2 decimals.
WorkedExample worked_example(const TaskInstance& instance);

nlohmann::json to_json(const Diagnosis& d);
Diagnosis diagnosis_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeedbackMessage& m);
nlohmann::json to_json(const WorkedExample& w);

}  // namespace itf
