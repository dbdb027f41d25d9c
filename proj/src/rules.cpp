#include "itf/rules.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "itf/error.hpp"

namespace itf {

namespace {

struct RuleName {
    RuleId id;
    std::string_view name;
};

constexpr std::array<RuleName, 13> kRuleNames{{
    {RuleId::CSlope, "C-SLOPE"},
    {RuleId::BInvSlope, "B-INV-SLOPE"},
    {RuleId::CExt, "C-EXT"},
    {RuleId::BNoAnchor, "B-NOANCHOR"},
    {RuleId::BWrongGap, "B-WRONGGAP"},
    {RuleId::BAdd, "B-ADD"},
    {RuleId::BProp, "B-PROP"},
    {RuleId::CFactor, "C-FACTOR"},
    {RuleId::BNoRoot, "B-NOROOT"},
    {RuleId::BInvFactor, "B-INVFACTOR"},
    {RuleId::CExpExt, "C-EXPEXT"},
    {RuleId::BSingle, "B-SINGLE"},
    {RuleId::BAddFactor, "B-ADDFACTOR"},
}};

std::vector<StepRule> builtin_rules() {
    using enum RuleId;
    const Topic L = Topic::Linear;
    const Topic E = Topic::Exponential;
    const auto C = Correctness::Correct;
    const auto B = Correctness::Buggy;
    const auto R = Stage::RateStep;
    const auto X = Stage::ExtrapolateStep;
    const auto W = Stage::WholeTask;

    return {
        {CSlope, L, R, C, "s = (y2 - y1) / (x2 - x1)", "", "", std::nullopt},
        {BInvSlope, L, R, B, "s = (x2 - x1) / (y2 - y1)",
         "It seems you computed the slope by dividing the increase of x by the variation of y. "
         "Is this right?",
         "It seems you computed the slope as {dx} / {dy} = {rate}, dividing the increase of x by "
         "the variation of y. Is this right?",
         TaskKind::LinearComputeSlope},
        {CExt, L, X, C, "? = ya + s * (xt - xa)", "", "", std::nullopt},
        {BNoAnchor, L, X, B, "? = ya + s * xt",
         "It seems you multiplied the slope by the x-value of the question mark instead of by the "
         "number of steps from the last known point. Is this right?",
         "It seems you computed {anchor_y} + {rate} * {target_x} = {value}. How many steps of x lie "
         "between {anchor_x} and {target_x}?",
         TaskKind::LinearGivenSlope},
        {BWrongGap, L, X, B, "? = ya + s * (xt - x1), or ya + s * (xt - xa + 1) with one known point",
         "It seems you counted the steps of x from the wrong point. Is this right?",
         "It seems you computed {anchor_y} + {rate} * {wrong_gap} = {value}. How many steps of x lie "
         "between {anchor_x} and {target_x}?",
         TaskKind::LinearGivenSlope},
        {BAdd, L, W, B, "? = y2 + (y2 - y1)",
         "It seems you added the change of y to the last value without taking the steps of x into "
         "account. Is this right?",
         "It seems you computed {y2} + ({y2} - {y1}) = {value}. The change of y of {dy} belongs to "
         "{dx} steps of x, while the question mark lies {gap} steps further. Is this right?",
         TaskKind::LinearSimpler},
        {BProp, L, W, B, "? = y2 * (x3 / x2)",
         "It seems you assumed that y is proportional to x. Is this right?",
         "It seems you computed {y2} * {target_x} / {anchor_x} = {value}. A linear relation does not "
         "have to pass through the origin. Is this right?",
         TaskKind::LinearSimpler},
        {CFactor, E, R, C, "g = (y2 / y1)^(1 / (x2 - x1))", "", "", std::nullopt},
        {BNoRoot, E, R, B, "g = y2 / y1",
         "It seems you divided the two values of y without taking the number of steps of x into "
         "account. Is this right?",
         "It seems you used {y2} / {y1} = {rate} as the growth factor. That is the factor for {dx} "
         "steps of x, not for a single step. Is this right?",
         TaskKind::ExpComputeFactor},
        {BInvFactor, E, R, B, "g = (y1 / y2)^(1 / (x2 - x1))",
         "It seems you divided the earlier value of y by the later one. Is this right?",
         "It seems you computed the growth factor from {y1} / {y2}, which gives {rate}. Which value "
         "of y comes first? Is this right?",
         TaskKind::ExpComputeFactor},
        {CExpExt, E, X, C, "? = ya * g^(xt - xa)", "", "", std::nullopt},
        {BSingle, E, X, B, "? = ya * g",
         "It seems you applied the growth factor only once. Is this right?",
         "It seems you computed {anchor_y} * {rate} = {value}. The growth factor applies once for "
         "every step of x, here {gap} times. Is this right?",
         TaskKind::ExpGivenFactor},
        {BAddFactor, E, X, B, "? = ya + g * (xt - xa)",
         "It seems you added the growth factor instead of multiplying by it. Is this right?",
         "It seems you computed {anchor_y} + {rate} * {gap} = {value}. With exponential growth you "
         "multiply by the growth factor for every step of x. Is this right?",
         TaskKind::ExpGivenFactor},
    };
}

std::vector<RuleId> build_rule_ids(TaskKind kind) {
    using enum RuleId;
    const bool linear = topic_of(kind) == Topic::Linear;
    const std::vector<RuleId> rate = linear ? std::vector{CSlope, BInvSlope}
                                            : std::vector{CFactor, BNoRoot, BInvFactor};
    const std::vector<RuleId> ext = linear ? std::vector{CExt, BNoAnchor, BWrongGap}
                                           : std::vector{CExpExt, BSingle, BAddFactor};
    const std::vector<RuleId> whole = linear ? std::vector{BAdd, BProp} : std::vector<RuleId>{};

    std::vector<RuleId> out;
    if (is_compute_rate(kind)) return rate;
    if (is_given_rate(kind)) return ext;
    out = rate;
    // With consecutive x-coordinates the root is a no-op, so the missing
    // root cannot be told apart from the correct factor.
    if (kind == TaskKind::ExpSimpler) std::erase(out, BNoRoot);
    out.insert(out.end(), ext.begin(), ext.end());
    out.insert(out.end(), whole.begin(), whole.end());
    return out;
}

struct Geometry {
    double x1, x2, y1;
    double y2;       // only meaningful with a rate step
    double anchor_x, anchor_y, target_x;
    bool one_point;  // given-rate kinds: the anchor is the only known point
};

Geometry geometry(const TaskInstance& inst) {
    const auto& p = inst.params;
    Geometry g{};
    g.x1 = p.x1;
    g.x2 = p.x2;
    g.y1 = p.y1;
    g.y2 = p.y2.value_or(0);
    if (is_given_rate(inst.kind)) {
        g.anchor_x = p.x1;
        g.anchor_y = p.y1;
        g.target_x = p.x2;
        g.one_point = true;
    } else {
        g.anchor_x = p.x2;
        g.anchor_y = g.y2;
        g.target_x = p.x3.value_or(0);
        g.one_point = false;
    }
    return g;
}

double rate_value(RuleId id, const Geometry& g) {
    const double dx = g.x2 - g.x1;
    const double dy = g.y2 - g.y1;
    switch (id) {
    case RuleId::CSlope: return dy / dx;
    case RuleId::BInvSlope: return dx / dy;
    case RuleId::CFactor: return std::pow(g.y2 / g.y1, 1.0 / dx);
    case RuleId::BNoRoot: return g.y2 / g.y1;
    case RuleId::BInvFactor: return std::pow(g.y1 / g.y2, 1.0 / dx);
    default: throw InvalidInput("not a rate rule: " + std::string(to_string(id)));
    }
}

double extrapolate(RuleId id, const Geometry& g, double rate) {
    const double gap = g.target_x - g.anchor_x;
    switch (id) {
    case RuleId::CExt: return g.anchor_y + rate * gap;
    case RuleId::BNoAnchor: return g.anchor_y + rate * g.target_x;
    case RuleId::BWrongGap:
        return g.one_point ? g.anchor_y + rate * (gap + 1) : g.anchor_y + rate * (g.target_x - g.x1);
    case RuleId::CExpExt: return g.anchor_y * std::pow(rate, gap);
    case RuleId::BSingle: return g.anchor_y * rate;
    case RuleId::BAddFactor: return g.anchor_y + rate * gap;
    default: throw InvalidInput("not an extrapolation rule: " + std::string(to_string(id)));
    }
}

double whole_task(RuleId id, const Geometry& g) {
    switch (id) {
    case RuleId::BAdd: return g.y2 + (g.y2 - g.y1);
    case RuleId::BProp: return g.y2 * (g.target_x / g.anchor_x);
    default: throw InvalidInput("not a whole-task rule: " + std::string(to_string(id)));
    }
}

void check_applicable(const TaskInstance& inst, const std::vector<RuleId>& rules,
                      RoundingMod rounding) {
    const auto& ids = rule_ids(inst.kind);
    for (RuleId r : rules)
        if (std::find(ids.begin(), ids.end(), r) == ids.end())
            throw InvalidInput("rule " + std::string(to_string(r)) + " does not apply to " +
                               std::string(to_string(inst.kind)));

    auto fail = [&](const char* why) {
        throw InvalidInput(std::string("malformed trace for ") + std::string(to_string(inst.kind)) +
                           ": " + why);
    };
    if (rules.empty()) fail("no rules");
    if (rules.size() == 1 && stage_of(rules[0]) == Stage::WholeTask) {
        if (rounding != RoundingMod::None) fail("whole-task rules take no rounding");
        return;
    }
    if (is_compute_rate(inst.kind)) {
        if (rules.size() != 1 || stage_of(rules[0]) != Stage::RateStep) fail("expected one rate step");
        return;
    }
    if (is_given_rate(inst.kind)) {
        if (rules.size() != 1 || stage_of(rules[0]) != Stage::ExtrapolateStep)
            fail("expected one extrapolation step");
        if (rounding != RoundingMod::None) fail("a given rate is not rounded");
        return;
    }
    if (rules.size() != 2 || stage_of(rules[0]) != Stage::RateStep ||
        stage_of(rules[1]) != Stage::ExtrapolateStep)
        fail("expected a rate step followed by an extrapolation step");
}

}  // namespace

std::string_view to_string(RuleId id) {
    for (const auto& r : kRuleNames)
        if (r.id == id) return r.name;
    return "?";
}

RuleId parse_rule(std::string_view text) {
    for (const auto& r : kRuleNames)
        if (r.name == text) return r.id;
    throw InvalidInput("unknown rule id: " + std::string(text));
}

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::RateStep: return "RateStep";
    case Stage::ExtrapolateStep: return "ExtrapolateStep";
    case Stage::WholeTask: return "WholeTask";
    }
    return "?";
}

std::string_view to_string(RoundingMod mod) {
    switch (mod) {
    case RoundingMod::None: return "none";
    case RoundingMod::Decimals1: return "round-1";
    case RoundingMod::Decimals2: return "round-2";
    case RoundingMod::Decimals3: return "round-3";
    }
    return "?";
}

RoundingMod parse_rounding(std::string_view text) {
    for (RoundingMod m : kAllRoundings)
        if (to_string(m) == text) return m;
    throw InvalidInput("unknown rounding: " + std::string(text));
}

double apply_rounding(double rate, RoundingMod mod) {
    if (mod == RoundingMod::None) return rate;
    const double scale = std::pow(10.0, static_cast<int>(mod));
    // The nudge keeps 0.29 (stored as 0.28999...) at 0.29.
    return std::trunc(rate * scale + std::copysign(1e-9, rate)) / scale;
}

const RuleCatalog& RuleCatalog::builtin() {
    static const RuleCatalog cat{builtin_rules()};
    return cat;
}

RuleCatalog RuleCatalog::with_templates(const RuleCatalog& base, const nlohmann::json& doc) {
    std::vector<StepRule> rules = base.rules_;
    const auto& entries = doc.is_object() && doc.contains("rules") ? doc["rules"] : doc;
    if (!entries.is_array()) throw InvalidInput("rule catalog document must hold a rules array");
    for (const auto& e : entries) {
        if (!e.contains("id")) throw InvalidInput("rule entry lacks id");
        const RuleId id = parse_rule(e["id"].get<std::string>());
        auto it = std::find_if(rules.begin(), rules.end(), [id](const StepRule& r) { return r.id == id; });
        if (e.contains("feedbackLow")) it->feedback_low = e["feedbackLow"].get<std::string>();
        if (e.contains("feedbackHigh")) it->feedback_high = e["feedbackHigh"].get<std::string>();
    }
    return RuleCatalog{std::move(rules)};
}

const StepRule& RuleCatalog::rule(RuleId id) const {
    for (const auto& r : rules_)
        if (r.id == id) return r;
    throw InvalidInput("rule not in catalog");
}

nlohmann::json RuleCatalog::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rules_) {
        arr.push_back({
            {"id", to_string(r.id)},
            {"topic", to_string(r.topic)},
            {"stage", to_string(r.stage)},
            {"correctness", r.buggy() ? "Buggy" : "Correct"},
            {"formula", r.formula},
            {"feedbackLow", r.feedback_low},
            {"feedbackHigh", r.feedback_high},
            {"routeTo", r.route_to ? nlohmann::json(to_string(*r.route_to)) : nlohmann::json(nullptr)},
        });
    }
    return {{"rules", arr}};
}

const std::vector<RuleId>& rule_ids(TaskKind kind) {
    static const std::map<TaskKind, std::vector<RuleId>> ids = [] {
        std::map<TaskKind, std::vector<RuleId>> m;
        for (TaskKind k : kAllKinds) m.emplace(k, build_rule_ids(k));
        return m;
    }();
    return ids.at(kind);
}

std::vector<StepRule> catalog(TaskKind kind, const RuleCatalog& rules) {
    std::vector<StepRule> out;
    for (RuleId id : rule_ids(kind)) out.push_back(rules.rule(id));
    return out;
}

Stage stage_of(RuleId id) {
    switch (id) {
    case RuleId::CSlope:
    case RuleId::BInvSlope:
    case RuleId::CFactor:
    case RuleId::BNoRoot:
    case RuleId::BInvFactor: return Stage::RateStep;
    case RuleId::BAdd:
    case RuleId::BProp: return Stage::WholeTask;
    default: return Stage::ExtrapolateStep;
    }
}

bool is_buggy(RuleId id) {
    return id != RuleId::CSlope && id != RuleId::CExt && id != RuleId::CFactor &&
           id != RuleId::CExpExt;
}

bool rate_step_correct(const std::vector<RuleId>& rules) {
    for (RuleId r : rules)
        if (stage_of(r) == Stage::RateStep) return !is_buggy(r);
    return false;
}

std::optional<TaskKind> route_for_rules(const std::vector<RuleId>& rules, Topic topic) {
    if (rules == std::vector{RuleId::BNoRoot, RuleId::BSingle}) return simpler_kind(topic);
    for (RuleId r : rules)
        if (stage_of(r) == Stage::WholeTask) return RuleCatalog::builtin().rule(r).route_to;
    for (RuleId r : rules)
        if (stage_of(r) == Stage::RateStep && is_buggy(r)) return compute_rate_kind(topic);
    for (RuleId r : rules)
        if (stage_of(r) == Stage::ExtrapolateStep && is_buggy(r)) return given_rate_kind(topic);
    return std::nullopt;
}

std::optional<double> trace_rate(const TaskInstance& instance, const std::vector<RuleId>& rules,
                                 RoundingMod rounding) {
    if (is_given_rate(instance.kind)) return instance.params.given_rate;
    const Geometry g = geometry(instance);
    for (RuleId r : rules)
        if (stage_of(r) == Stage::RateStep) return apply_rounding(rate_value(r, g), rounding);
    return std::nullopt;
}

double eval_trace(const TaskInstance& instance, const std::vector<RuleId>& rules,
                  RoundingMod rounding) {
    check_applicable(instance, rules, rounding);
    const Geometry g = geometry(instance);
    if (rules.size() == 1 && stage_of(rules[0]) == Stage::WholeTask) return whole_task(rules[0], g);
    if (is_compute_rate(instance.kind)) return apply_rounding(rate_value(rules[0], g), rounding);
    if (is_given_rate(instance.kind)) return extrapolate(rules[0], g, *instance.params.given_rate);
    return extrapolate(rules[1], g, apply_rounding(rate_value(rules[0], g), rounding));
}

double eval_trace(const TaskInstance& instance, const Trace& trace) {
    return eval_trace(instance, trace.rules, trace.rounding);
}

}  // namespace itf
