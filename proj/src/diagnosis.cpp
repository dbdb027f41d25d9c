#include "itf/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "itf/error.hpp"

namespace itf {

namespace {

std::size_t buggy_count(const std::vector<RuleId>& rules) {
    return static_cast<std::size_t>(std::count_if(rules.begin(), rules.end(), is_buggy));
}

std::vector<std::string_view> rule_names(const std::vector<RuleId>& rules) {
    std::vector<std::string_view> names;
    for (RuleId r : rules) names.push_back(to_string(r));
    return names;
}

// Ordering among matching buggy traces: fewest buggy rules, unrounded
// first, then rule ids.
auto priority(const Trace& t) {
    return std::tuple(buggy_count(t.rules), t.rounding != RoundingMod::None, rule_names(t.rules),
                      static_cast<int>(t.rounding));
}

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

std::string shown(double v) {
    // three decimals at most, trailing zeros dropped
    const double r = round_to(v, 3);
    return format_number(r == 0.0 ? 0.0 : r);
}

std::string two_decimals(double v) { return fmt::format("{:.2f}", v); }

std::map<std::string, std::string> template_vars(const Diagnosis& diag, const TaskInstance& inst) {
    const auto& p = inst.params;
    std::map<std::string, std::string> vars;
    vars["x1"] = std::to_string(p.x1);
    vars["x2"] = std::to_string(p.x2);
    vars["y1"] = std::to_string(p.y1);
    vars["dx"] = std::to_string(p.x2 - p.x1);
    if (p.x3) vars["x3"] = std::to_string(*p.x3);
    if (p.y2) {
        vars["y2"] = std::to_string(*p.y2);
        vars["dy"] = std::to_string(*p.y2 - p.y1);
    }
    int anchor_x = p.x2, anchor_y = p.y2.value_or(0), target_x = p.x3.value_or(0);
    int wrong_gap = target_x - p.x1;
    if (is_given_rate(inst.kind)) {
        anchor_x = p.x1;
        anchor_y = p.y1;
        target_x = p.x2;
        wrong_gap = target_x - anchor_x + 1;
    }
    vars["anchor_x"] = std::to_string(anchor_x);
    vars["anchor_y"] = std::to_string(anchor_y);
    vars["target_x"] = std::to_string(target_x);
    vars["gap"] = std::to_string(target_x - anchor_x);
    vars["wrong_gap"] = std::to_string(wrong_gap);
    if (auto r = trace_rate(inst, diag.chain, diag.rounding.value_or(RoundingMod::None)))
        vars["rate"] = shown(*r);
    if (diag.matched_value) vars["value"] = shown(*diag.matched_value);
    return vars;
}

}  // namespace

std::string_view to_string(DiagnosisClass c) {
    switch (c) {
    case DiagnosisClass::Correct: return "Correct";
    case DiagnosisClass::Buggy: return "Buggy";
    case DiagnosisClass::Undetectable: return "Undetectable";
    case DiagnosisClass::NoInput: return "NoInput";
    }
    return "?";
}

DiagnosisClass parse_diagnosis_class(std::string_view text) {
    for (auto c : {DiagnosisClass::Correct, DiagnosisClass::Buggy, DiagnosisClass::Undetectable,
                   DiagnosisClass::NoInput})
        if (to_string(c) == text) return c;
    throw InvalidInput("unknown diagnosis class: " + std::string(text));
}

std::string_view to_string(FeedbackType t) {
    switch (t) {
    case FeedbackType::KR: return "KR";
    case FeedbackType::TA: return "TA";
    case FeedbackType::ES: return "ES";
    case FeedbackType::WE: return "WE";
    case FeedbackType::DI: return "DI";
    }
    return "?";
}

std::string_view to_string(Specificity s) { return s == Specificity::Low ? "Low" : "High"; }

bool answer_matches(double submitted, double value) {
    constexpr double eps = 1e-9;
    // beyond ~5e9 the absolute tolerance is finer than double arithmetic
    const double tol = std::max(kMatchTolerance, kRelativeFloor * std::abs(value));
    if (std::abs(submitted - value) <= tol + eps) return true;
    for (int d = 0; d <= 3; ++d)
        if (std::abs(submitted - round_to(value, d)) <= eps) return true;
    return false;
}

std::vector<Trace> enumerate_traces(const TaskInstance& instance) {
    const auto& ids = rule_ids(instance.kind);
    std::vector<RuleId> rate, ext, whole;
    for (RuleId r : ids) {
        switch (stage_of(r)) {
        case Stage::RateStep: rate.push_back(r); break;
        case Stage::ExtrapolateStep: ext.push_back(r); break;
        case Stage::WholeTask: whole.push_back(r); break;
        }
    }

    std::vector<Trace> out;
    auto add = [&](std::vector<RuleId> rules, RoundingMod mod) {
        const double v = eval_trace(instance, rules, mod);
        out.push_back({std::move(rules), mod, v});
    };
    if (is_compute_rate(instance.kind)) {
        for (RuleId r : rate)
            for (RoundingMod m : kAllRoundings) add({r}, m);
    } else if (is_given_rate(instance.kind)) {
        for (RuleId e : ext) add({e}, RoundingMod::None);
    } else {
        for (RuleId r : rate)
            for (RuleId e : ext)
                for (RoundingMod m : kAllRoundings) add({r, e}, m);
        for (RuleId w : whole) add({w}, RoundingMod::None);
    }
    return out;
}

Diagnosis diagnose(const std::vector<Trace>& traces, std::optional<double> submitted) {
    if (!submitted) return {DiagnosisClass::NoInput, {}, std::nullopt, std::nullopt};
    if (!std::isfinite(*submitted)) throw InvalidInput("submitted answer is not a finite number");

    const Trace* correct = nullptr;
    const Trace* best = nullptr;
    for (const auto& t : traces) {
        if (!answer_matches(*submitted, t.value)) continue;
        if (buggy_count(t.rules) == 0) {
            if (!correct || (correct->rounding != RoundingMod::None && t.rounding == RoundingMod::None))
                correct = &t;
        } else if (!best || priority(t) < priority(*best)) {
            best = &t;
        }
    }
    if (correct) return {DiagnosisClass::Correct, {}, correct->rounding, correct->value};
    if (best) return {DiagnosisClass::Buggy, best->rules, best->rounding, best->value};
    return {DiagnosisClass::Undetectable, {}, std::nullopt, std::nullopt};
}

Diagnosis diagnose(const TaskInstance& instance, std::optional<double> submitted) {
    if (submitted && !std::isfinite(*submitted))
        throw InvalidInput("submitted answer is not a finite number");
    return diagnose(enumerate_traces(instance), submitted);
}

std::optional<TaskKind> route_subtask(const Diagnosis& diag, TaskKind kind) {
    if (!is_main(kind))
        throw InvalidInput("subtasks are routed from main tasks only, not from " +
                           std::string(to_string(kind)));
    const Topic topic = topic_of(kind);
    switch (diag.cls) {
    case DiagnosisClass::Correct: return std::nullopt;
    case DiagnosisClass::NoInput:
    case DiagnosisClass::Undetectable: return simpler_kind(topic);
    case DiagnosisClass::Buggy: return route_for_rules(diag.chain, topic);
    }
    return std::nullopt;
}

std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '{') {
            const auto close = text.find('}', i);
            if (close != std::string::npos) {
                const auto it = vars.find(text.substr(i + 1, close - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

std::vector<FeedbackMessage> feedback_for(const Diagnosis& diag, FeedbackContext context,
                                          const TaskInstance& instance, const RuleCatalog& rules) {
    const Specificity spec =
        context == FeedbackContext::MainTask ? Specificity::Low : Specificity::High;
    std::vector<FeedbackMessage> out;

    std::string kr;
    switch (diag.cls) {
    case DiagnosisClass::Correct: kr = "Your answer is correct."; break;
    case DiagnosisClass::NoInput: kr = "You did not enter an answer."; break;
    default: kr = "Your answer is incorrect."; break;
    }
    out.push_back({FeedbackType::KR, spec, kr});

    if (diag.cls == DiagnosisClass::Buggy) {
        const auto first = std::find_if(diag.chain.begin(), diag.chain.end(), is_buggy);
        if (first != diag.chain.end()) {
            const StepRule& rule = rules.rule(*first);
            const auto& tmpl = spec == Specificity::Low ? rule.feedback_low : rule.feedback_high;
            out.push_back({FeedbackType::ES, spec, render_template(tmpl, template_vars(diag, instance))});
        }
    }
    if (diag.cls != DiagnosisClass::Correct)
        out.push_back({FeedbackType::TA, spec, "You can try again."});
    return out;
}

WorkedExample worked_example(const TaskInstance& inst) {
    const auto& p = inst.params;
    const bool linear = topic_of(inst.kind) == Topic::Linear;
    const double answer = correct_answer(inst);
    WorkedExample we{inst.kind, {}, answer};

    double rate = 0;
    if (is_given_rate(inst.kind)) {
        rate = *p.given_rate;
        we.steps.push_back(fmt::format("The {} is given: {}.", linear ? "slope" : "growth factor",
                                       format_number(rate)));
    } else {
        const int dx = p.x2 - p.x1;
        if (linear) {
            rate = static_cast<double>(*p.y2 - p.y1) / dx;
            we.steps.push_back(fmt::format("Change of x: {} - {} = {}.", p.x2, p.x1, dx));
            we.steps.push_back(fmt::format("Change of y: {} - {} = {}.", *p.y2, p.y1, *p.y2 - p.y1));
            we.steps.push_back(fmt::format("Slope: {} / {} = {}.", *p.y2 - p.y1, dx, two_decimals(rate)));
        } else {
            rate = std::pow(static_cast<double>(*p.y2) / p.y1, 1.0 / dx);
            we.steps.push_back(fmt::format("Growth factor for {} steps of x: {} / {} = {}.", dx, *p.y2,
                                           p.y1, two_decimals(static_cast<double>(*p.y2) / p.y1)));
            we.steps.push_back(fmt::format("Growth factor for a single step: ({} / {})^(1/{}) = {}.",
                                           *p.y2, p.y1, dx, two_decimals(rate)));
        }
    }
    if (is_compute_rate(inst.kind)) {
        we.steps.push_back(fmt::format("Answer: {}.", two_decimals(answer)));
        return we;
    }

    const int anchor_x = is_given_rate(inst.kind) ? p.x1 : p.x2;
    const int anchor_y = is_given_rate(inst.kind) ? p.y1 : *p.y2;
    const int target_x = is_given_rate(inst.kind) ? p.x2 : *p.x3;
    const int gap = target_x - anchor_x;
    we.steps.push_back(fmt::format("Steps of x from {} to {}: {} - {} = {}.", anchor_x, target_x,
                                   target_x, anchor_x, gap));
    if (linear)
        we.steps.push_back(fmt::format("? = {} + {} * {} = {}.", anchor_y, two_decimals(rate), gap,
                                       two_decimals(answer)));
    else
        we.steps.push_back(fmt::format("? = {} * {}^{} = {}.", anchor_y, two_decimals(rate), gap,
                                       two_decimals(answer)));
    return we;
}

nlohmann::json to_json(const Diagnosis& d) {
    nlohmann::json j;
    j["class"] = to_string(d.cls);
    j["chain"] = rule_names(d.chain);
    j["rounding"] = d.rounding ? nlohmann::json(to_string(*d.rounding)) : nlohmann::json(nullptr);
    j["matchedValue"] = d.matched_value ? nlohmann::json(*d.matched_value) : nlohmann::json(nullptr);
    return j;
}

Diagnosis diagnosis_from_json(const nlohmann::json& j) {
    try {
        Diagnosis d;
        d.cls = parse_diagnosis_class(j.at("class").get<std::string>());
        for (const auto& r : j.at("chain")) d.chain.push_back(parse_rule(r.get<std::string>()));
        if (j.contains("rounding") && !j["rounding"].is_null())
            d.rounding = parse_rounding(j["rounding"].get<std::string>());
        if (j.contains("matchedValue") && !j["matchedValue"].is_null())
            d.matched_value = j["matchedValue"].get<double>();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed diagnosis record: ") + e.what());
    }
}

nlohmann::json to_json(const FeedbackMessage& m) {
    return {{"type", to_string(m.type)}, {"specificity", to_string(m.specificity)}, {"text", m.text}};
}

nlohmann::json to_json(const WorkedExample& w) {
    return {{"kind", to_string(w.kind)}, {"steps", w.steps}, {"answer", w.answer}};
}

}  // namespace itf
