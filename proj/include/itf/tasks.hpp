#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace itf {

enum class Topic { Linear, Exponential };

enum class TaskKind {
    LinearMain,
    LinearSimpler,
    LinearGivenSlope,
    LinearComputeSlope,
    ExpMain,
    ExpSimpler,
    ExpGivenFactor,
    ExpComputeFactor,
};

inline constexpr std::array<TaskKind, 8> kAllKinds{
    TaskKind::LinearMain,     TaskKind::LinearSimpler, TaskKind::LinearGivenSlope,
    TaskKind::LinearComputeSlope, TaskKind::ExpMain,   TaskKind::ExpSimpler,
    TaskKind::ExpGivenFactor, TaskKind::ExpComputeFactor,
};

std::string_view to_string(Topic topic);
std::string_view to_string(TaskKind kind);
Topic parse_topic(std::string_view text);
TaskKind parse_kind(std::string_view text);

Topic topic_of(TaskKind kind);
bool is_main(TaskKind kind);
bool is_simpler(TaskKind kind);
bool is_given_rate(TaskKind kind);
bool is_compute_rate(TaskKind kind);
// Main and Simpler kinds show three x-columns; the others show two.
bool has_three_columns(TaskKind kind);

TaskKind main_kind(Topic topic);
TaskKind simpler_kind(Topic topic);
TaskKind given_rate_kind(Topic topic);
TaskKind compute_rate_kind(Topic topic);

// Numeric parameters of a task. Two-column kinds leave x3 empty; the
// given-rate kinds also leave y2 empty (it is the unknown).
struct ParamSet {
    int x1 = 0;
    int x2 = 0;
    std::optional<int> x3;
    int y1 = 0;
    std::optional<int> y2;
    std::optional<double> given_rate;

    bool operator==(const ParamSet&) const = default;
};

inline constexpr int kMinValue = 10;
inline constexpr int kMaxValue = 99;

struct Constraint {
    std::string text;
    std::function<bool(const ParamSet&)> holds;
};

// Machine-checkable constraints of one task kind.
struct ConstraintSet {
    TaskKind kind;
    std::vector<Constraint> constraints;

    // Texts of the violated constraints, in declaration order.
    std::vector<std::string> violations(const ParamSet& params) const;
    bool satisfied_by(const ParamSet& params) const { return violations(params).empty(); }
    bool mentions(std::string_view text) const;
};

const ConstraintSet& parameter_constraints(TaskKind kind);

struct TaskInstance {
    TaskKind kind;
    ParamSet params;
    std::vector<std::string> x_row;
    std::vector<std::string> y_row;
    // Full rendered formulation: lead-in, table and prompt.
    std::string question;
    // Which cell is asked for: "y3", "y2" or "rate".
    std::string unknown;

    bool operator==(const TaskInstance&) const = default;
};

// Validates `params` against the constraints of `kind` and renders the task.
// Throws ConstraintViolation naming the first violated constraint.
TaskInstance instantiate(TaskKind kind, const ParamSet& params);

// Exact solution of the task, unrounded.
double correct_answer(const TaskInstance& instance);

// Correct answer computed straight from parameters (no validation).
double correct_answer(TaskKind kind, const ParamSet& params);

// Shortest decimal text for a number ("1.059", "8", "-209").
std::string format_number(double value);

nlohmann::json params_to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& j);

// Record with the fixed field names kind, x, y, givenRate, question.
nlohmann::json to_json(const TaskInstance& instance);
TaskInstance instance_from_json(const nlohmann::json& j);

}  // namespace itf
