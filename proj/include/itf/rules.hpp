#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "itf/tasks.hpp"

namespace itf {

enum class RuleId {
    CSlope,
    BInvSlope,
    CExt,
    BNoAnchor,
    BWrongGap,
    BAdd,
    BProp,
    CFactor,
    BNoRoot,
    BInvFactor,
    CExpExt,
    BSingle,
    BAddFactor,
};

enum class Stage { RateStep, ExtrapolateStep, WholeTask };
enum class Correctness { Correct, Buggy };

// How many decimals of the intermediate rate a student carries over.
// Digits beyond that are cut off, the way a rate gets copied from a
// calculator display (0.7169811321 becomes 0.71 at two decimals).
enum class RoundingMod { None, Decimals1, Decimals2, Decimals3 };

inline constexpr std::array<RoundingMod, 4> kAllRoundings{
    RoundingMod::None, RoundingMod::Decimals1, RoundingMod::Decimals2, RoundingMod::Decimals3};

std::string_view to_string(RuleId id);
RuleId parse_rule(std::string_view text);
std::string_view to_string(Stage stage);
std::string_view to_string(RoundingMod mod);
RoundingMod parse_rounding(std::string_view text);

// Applies the rounding modifier to a rate.
double apply_rounding(double rate, RoundingMod mod);

struct StepRule {
    RuleId id;
    Topic topic;
    Stage stage;
    Correctness correctness;
    std::string formula;
    // Verbal hint; placeholders in braces are filled by the feedback renderer.
    std::string feedback_low;
    // Hint that shows the presumed calculation.
    std::string feedback_high;
    std::optional<TaskKind> route_to;

    bool buggy() const { return correctness == Correctness::Buggy; }
};

// Immutable set of step rules. The default catalog is built in; feedback
// templates can be replaced from an exported document.
class RuleCatalog {
public:
    static const RuleCatalog& builtin();

    // Copy of `base` with templates (and nothing else) replaced by the
    // entries of an exported catalog document.
    static RuleCatalog with_templates(const RuleCatalog& base, const nlohmann::json& doc);

    const StepRule& rule(RuleId id) const;
    const std::vector<StepRule>& all() const { return rules_; }

    nlohmann::json to_json() const;

private:
    explicit RuleCatalog(std::vector<StepRule> rules) : rules_(std::move(rules)) {}
    std::vector<StepRule> rules_;
};

// Rule ids applicable to a task kind, in catalog order.
const std::vector<RuleId>& rule_ids(TaskKind kind);

// Applicable rules for a task kind.
std::vector<StepRule> catalog(TaskKind kind, const RuleCatalog& rules = RuleCatalog::builtin());

Stage stage_of(RuleId id);
bool is_buggy(RuleId id);

struct Trace {
    std::vector<RuleId> rules;
    RoundingMod rounding = RoundingMod::None;
    double value = 0.0;
};

// Subtask a rule chain points to: rate errors go to the compute-rate
// subtask, extrapolation errors to the given-rate subtask, whole-task
// shortcuts (and the factor-without-root-used-once combination) to the
// simpler-numbers subtask. Empty for an all-correct chain.
std::optional<TaskKind> route_for_rules(const std::vector<RuleId>& rules, Topic topic);

// True if the chain has a rate step and that step is correct.
bool rate_step_correct(const std::vector<RuleId>& rules);

// Value of the computation described by `rules` and `rounding` on the
// instance. Throws InvalidInput for incomplete or inapplicable traces.
double eval_trace(const TaskInstance& instance, const std::vector<RuleId>& rules,
                  RoundingMod rounding);
double eval_trace(const TaskInstance& instance, const Trace& trace);

// The presumed intermediate rate of a trace (after rounding), if it has one.
std::optional<double> trace_rate(const TaskInstance& instance, const std::vector<RuleId>& rules,
                                 RoundingMod rounding);

}  // namespace itf
