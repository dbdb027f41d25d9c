#include "itf/tasks.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "itf/error.hpp"

namespace itf {

namespace {

struct KindName {
    TaskKind kind;
    std::string_view name;
};

constexpr std::array<KindName, 8> kKindNames{{
    {TaskKind::LinearMain, "LinearMain"},
    {TaskKind::LinearSimpler, "LinearSimpler"},
    {TaskKind::LinearGivenSlope, "LinearGivenSlope"},
    {TaskKind::LinearComputeSlope, "LinearComputeSlope"},
    {TaskKind::ExpMain, "ExpMain"},
    {TaskKind::ExpSimpler, "ExpSimpler"},
    {TaskKind::ExpGivenFactor, "ExpGivenFactor"},
    {TaskKind::ExpComputeFactor, "ExpComputeFactor"},
}};

bool in_range(int v) { return v >= kMinValue && v <= kMaxValue; }

bool has_three_decimals(double rate) {
    const double scaled = rate * 1000.0;
    return std::abs(scaled - std::round(scaled)) < 1e-6;
}

// Growth factor per unit step, or the slope, from the two given points.
double true_rate(Topic topic, const ParamSet& p) {
    const double dx = p.x2 - p.x1;
    if (topic == Topic::Linear) return (*p.y2 - p.y1) / dx;
    return std::pow(static_cast<double>(*p.y2) / p.y1, 1.0 / dx);
}

ConstraintSet build_constraints(TaskKind kind) {
    ConstraintSet set{kind, {}};
    auto add = [&](std::string text, std::function<bool(const ParamSet&)> f) {
        set.constraints.push_back({std::move(text), std::move(f)});
    };

    const bool three = has_three_columns(kind);
    const bool given = is_given_rate(kind);
    const bool exp = topic_of(kind) == Topic::Exponential;

    if (three)
        add("x3 present", [](const ParamSet& p) { return p.x3.has_value(); });
    else
        add("x3 absent", [](const ParamSet& p) { return !p.x3.has_value(); });
    if (given) {
        add("y2 absent", [](const ParamSet& p) { return !p.y2.has_value(); });
        add("givenRate present", [](const ParamSet& p) { return p.given_rate.has_value(); });
    } else {
        add("y2 present", [](const ParamSet& p) { return p.y2.has_value(); });
        add("givenRate absent", [](const ParamSet& p) { return !p.given_rate.has_value(); });
    }

    add("all coordinates and values in [10, 99]", [](const ParamSet& p) {
        return in_range(p.x1) && in_range(p.x2) && (!p.x3 || in_range(*p.x3)) &&
               in_range(p.y1) && (!p.y2 || in_range(*p.y2));
    });
    if (three)
        add("x1 < x2 < x3", [](const ParamSet& p) { return p.x1 < p.x2 && (!p.x3 || p.x2 < *p.x3); });
    else
        add("x1 < x2", [](const ParamSet& p) { return p.x1 < p.x2; });
    if (is_simpler(kind))
        add("x2 = x1 + 1", [](const ParamSet& p) { return p.x2 == p.x1 + 1; });
    if (!given)
        add("y1 != y2", [](const ParamSet& p) { return !p.y2 || p.y1 != *p.y2; });
    if (exp && !given)
        add("y1, y2 > 0", [](const ParamSet& p) { return p.y1 > 0 && (!p.y2 || *p.y2 > 0); });
    if (exp && given)
        add("y1 > 0", [](const ParamSet& p) { return p.y1 > 0; });

    if (kind == TaskKind::LinearGivenSlope)
        add("givenRate integer in [2, 12]", [](const ParamSet& p) {
            if (!p.given_rate) return true;
            const double r = *p.given_rate;
            return r == std::floor(r) && r >= 2 && r <= 12;
        });
    if (kind == TaskKind::ExpGivenFactor)
        add("givenRate with 3 decimals in [0.850, 1.250]", [](const ParamSet& p) {
            if (!p.given_rate) return true;
            const double r = *p.given_rate;
            return has_three_decimals(r) && r >= 0.85 - 1e-9 && r <= 1.25 + 1e-9;
        });

    // Remaining checks need a well-formed shape; shape violations are
    // reported by the constraints above.
    auto shape_ok = [three, given](const ParamSet& p) {
        return p.x3.has_value() == three && p.y2.has_value() == !given &&
               p.given_rate.has_value() == given && p.x1 < p.x2 && p.y1 > 0 &&
               (!p.y2 || *p.y2 > 0);
    };
    if (exp && (kind == TaskKind::ExpMain || kind == TaskKind::ExpSimpler)) {
        add("growth factor in [0.5, 2]", [shape_ok](const ParamSet& p) {
            if (!shape_ok(p)) return true;
            const double g = true_rate(Topic::Exponential, p);
            return g >= 0.5 && g <= 2.0;
        });
    }
    if (kind == TaskKind::ExpMain || kind == TaskKind::ExpSimpler ||
        kind == TaskKind::ExpGivenFactor) {
        add("correct answer in [1, 500]", [kind, shape_ok](const ParamSet& p) {
            if (!shape_ok(p) || (p.x3 && *p.x3 <= p.x2)) return true;
            const double v = correct_answer(kind, p);
            return v >= 1.0 && v <= 500.0;
        });
    }
    return set;
}

std::string rate_text(TaskKind kind, double rate) {
    if (topic_of(kind) == Topic::Exponential) return fmt::format("{:.3f}", rate);
    return format_number(rate);
}

}  // namespace

std::string_view to_string(Topic topic) {
    return topic == Topic::Linear ? "Linear" : "Exponential";
}

std::string_view to_string(TaskKind kind) {
    for (const auto& k : kKindNames)
        if (k.kind == kind) return k.name;
    return "Unknown";
}

Topic parse_topic(std::string_view text) {
    if (text == "Linear" || text == "linear") return Topic::Linear;
    if (text == "Exponential" || text == "exponential") return Topic::Exponential;
    throw InvalidInput("unknown topic: " + std::string(text));
}

TaskKind parse_kind(std::string_view text) {
    for (const auto& k : kKindNames)
        if (k.name == text) return k.kind;
    throw InvalidInput("unknown task kind: " + std::string(text));
}

Topic topic_of(TaskKind kind) {
    switch (kind) {
    case TaskKind::LinearMain:
    case TaskKind::LinearSimpler:
    case TaskKind::LinearGivenSlope:
    case TaskKind::LinearComputeSlope: return Topic::Linear;
    default: return Topic::Exponential;
    }
}

bool is_main(TaskKind kind) { return kind == TaskKind::LinearMain || kind == TaskKind::ExpMain; }
bool is_simpler(TaskKind kind) {
    return kind == TaskKind::LinearSimpler || kind == TaskKind::ExpSimpler;
}
bool is_given_rate(TaskKind kind) {
    return kind == TaskKind::LinearGivenSlope || kind == TaskKind::ExpGivenFactor;
}
bool is_compute_rate(TaskKind kind) {
    return kind == TaskKind::LinearComputeSlope || kind == TaskKind::ExpComputeFactor;
}
bool has_three_columns(TaskKind kind) { return is_main(kind) || is_simpler(kind); }

TaskKind main_kind(Topic t) { return t == Topic::Linear ? TaskKind::LinearMain : TaskKind::ExpMain; }
TaskKind simpler_kind(Topic t) {
    return t == Topic::Linear ? TaskKind::LinearSimpler : TaskKind::ExpSimpler;
}
TaskKind given_rate_kind(Topic t) {
    return t == Topic::Linear ? TaskKind::LinearGivenSlope : TaskKind::ExpGivenFactor;
}
TaskKind compute_rate_kind(Topic t) {
    return t == Topic::Linear ? TaskKind::LinearComputeSlope : TaskKind::ExpComputeFactor;
}

std::vector<std::string> ConstraintSet::violations(const ParamSet& params) const {
    std::vector<std::string> out;
    for (const auto& c : constraints)
        if (!c.holds(params)) out.push_back(c.text);
    return out;
}

bool ConstraintSet::mentions(std::string_view text) const {
    for (const auto& c : constraints)
        if (c.text.find(text) != std::string::npos) return true;
    return false;
}

const ConstraintSet& parameter_constraints(TaskKind kind) {
    static const std::map<TaskKind, ConstraintSet> sets = [] {
        std::map<TaskKind, ConstraintSet> m;
        for (TaskKind k : kAllKinds) m.emplace(k, build_constraints(k));
        return m;
    }();
    return sets.at(kind);
}

TaskInstance instantiate(TaskKind kind, const ParamSet& params) {
    const auto violated = parameter_constraints(kind).violations(params);
    if (!violated.empty()) throw ConstraintViolation(violated.front(), std::string(to_string(kind)));

    TaskInstance inst{kind, params, {}, {}, {}, {}};
    inst.x_row = {std::to_string(params.x1), std::to_string(params.x2)};
    if (params.x3) inst.x_row.push_back(std::to_string(*params.x3));
    inst.y_row = {std::to_string(params.y1)};
    if (params.y2) inst.y_row.push_back(std::to_string(*params.y2));

    if (is_compute_rate(kind)) {
        inst.unknown = "rate";
    } else {
        inst.y_row.push_back("?");
        inst.unknown = has_three_columns(kind) ? "y3" : "y2";
    }

    const bool linear = topic_of(kind) == Topic::Linear;
    std::string lead;
    if (kind == TaskKind::LinearGivenSlope)
        lead = fmt::format("Given that the slope (rate of change) is equal to {} for the following table:",
                           rate_text(kind, *params.given_rate));
    else if (kind == TaskKind::ExpGivenFactor)
        lead = fmt::format("Given that the growth factor is equal to {} for the following table:",
                           rate_text(kind, *params.given_rate));
    else
        lead = "Given the table:";

    std::string prompt;
    if (kind == TaskKind::LinearComputeSlope) {
        prompt = "Compute the slope (the average rate of change).";
    } else if (kind == TaskKind::ExpComputeFactor) {
        prompt = "Compute the growth factor for a single step of x.";
    } else {
        prompt = fmt::format("Use {} extrapolation to compute the value of the question mark.",
                             linear ? "linear" : "exponential");
        if (kind == TaskKind::LinearSimpler)
            prompt += " To do so, first compute the change of y in a single step of x.";
        if (kind == TaskKind::ExpSimpler)
            prompt += " To do so, first compute the growth factor for a single step of x.";
    }

    inst.question = fmt::format("{}\nx: {}\ny: {}\n{}", lead, fmt::join(inst.x_row, " "),
                                fmt::join(inst.y_row, " "), prompt);
    return inst;
}

double correct_answer(TaskKind kind, const ParamSet& p) {
    const Topic topic = topic_of(kind);
    if (is_given_rate(kind)) {
        const double gap = p.x2 - p.x1;
        if (topic == Topic::Linear) return p.y1 + *p.given_rate * gap;
        return p.y1 * std::pow(*p.given_rate, gap);
    }
    const double rate = true_rate(topic, p);
    if (is_compute_rate(kind)) return rate;
    const double gap = *p.x3 - p.x2;
    if (topic == Topic::Linear) return *p.y2 + rate * gap;
    return *p.y2 * std::pow(rate, gap);
}

double correct_answer(const TaskInstance& instance) {
    return correct_answer(instance.kind, instance.params);
}

std::string format_number(double value) { return fmt::format("{}", value); }

nlohmann::json params_to_json(const ParamSet& p) {
    nlohmann::json j;
    j["x"] = nlohmann::json::array({p.x1, p.x2});
    if (p.x3) j["x"].push_back(*p.x3);
    j["y"] = nlohmann::json::array({p.y1});
    if (p.y2) j["y"].push_back(*p.y2);
    j["givenRate"] = p.given_rate ? nlohmann::json(*p.given_rate) : nlohmann::json(nullptr);
    return j;
}

ParamSet params_from_json(const nlohmann::json& j) {
    try {
        const auto& xs = j.at("x");
        const auto& ys = j.at("y");
        if (!xs.is_array() || xs.size() < 2 || xs.size() > 3)
            throw InvalidInput("field x must hold 2 or 3 integers");
        if (!ys.is_array() || ys.empty() || ys.size() > 2)
            throw InvalidInput("field y must hold 1 or 2 integers");
        ParamSet p;
        p.x1 = xs[0].get<int>();
        p.x2 = xs[1].get<int>();
        if (xs.size() == 3) p.x3 = xs[2].get<int>();
        p.y1 = ys[0].get<int>();
        if (ys.size() == 2) p.y2 = ys[1].get<int>();
        if (j.contains("givenRate") && !j["givenRate"].is_null())
            p.given_rate = j["givenRate"].get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed parameter record: ") + e.what());
    }
}

nlohmann::json to_json(const TaskInstance& instance) {
    nlohmann::json j = params_to_json(instance.params);
    j["kind"] = to_string(instance.kind);
    j["question"] = instance.question;
    return j;
}

TaskInstance instance_from_json(const nlohmann::json& j) {
    if (!j.contains("kind") || !j["kind"].is_string()) throw InvalidInput("task record lacks kind");
    return instantiate(parse_kind(j["kind"].get<std::string>()), params_from_json(j));
}

}  // namespace itf
