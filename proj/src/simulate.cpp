#include "itf/simulate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "itf/rng.hpp"

namespace itf {

namespace {

constexpr std::pair<StudentAction, std::string_view> kActionNames[] = {
    {StudentAction::TryAgain, "tryAgain"},   {StudentAction::Subtask, "subtask"},
    {StudentAction::WorkedExample, "workedExample"}, {StudentAction::Instruction, "instruction"},
    {StudentAction::Stuck, "stuck"},
};

StudentAction parse_action(std::string_view text) {
    for (const auto& [a, name] : kActionNames)
        if (name == text) return a;
    throw InvalidInput(fmt::format("unknown student action '{}'", text));
}

std::string_view action_name(StudentAction a) {
    for (const auto& [b, name] : kActionNames)
        if (a == b) return name;
    return "?";
}

void check_probability(double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(fmt::format("{} must lie in [0, 1], got {}", what, p));
}

template <class T>
T pick_weighted(const std::vector<std::pair<T, double>>& items, Rng& rng) {
    double total = 0;
    for (const auto& it : items) total += it.second;
    double u = uniform_real(rng) * total;
    for (const auto& it : items) {
        if (u < it.second) return it.first;
        u -= it.second;
    }
    // rounding leftovers land on the last positive weight
    for (auto it = items.rbegin(); it != items.rend(); ++it)
        if (it->second > 0) return it->first;
    return items.back().first;
}

struct Answer {
    std::optional<double> value;
    std::optional<GroundTruth> truth;
};

Answer produce_answer(const StudentProfile& p, const TaskInstance& task, Rng& rng) {
    const double u = uniform_real(rng);
    if (u < p.no_input) return {};
    if (u < p.no_input + p.off_model) {
        const double v = std::round(uniform_real(rng) * 70000.0 - 10000.0) / 100.0;
        return {v, GroundTruth{}};
    }

    auto prop = [&](RuleId r) {
        const auto it = p.propensities.find(r);
        return it == p.propensities.end() ? 0.0 : it->second;
    };
    std::map<Stage, double> buggy_mass;
    for (RuleId r : rule_ids(task.kind))
        if (is_buggy(r)) buggy_mass[stage_of(r)] += prop(r);

    std::vector<std::pair<std::vector<RuleId>, double>> chains;
    for (const auto& t : enumerate_traces(task)) {
        if (t.rounding != RoundingMod::None) continue;
        double w = 1.0;
        if (t.rules.size() == 1 && stage_of(t.rules[0]) == Stage::WholeTask) {
            w = prop(t.rules[0]);
        } else {
            w = 1.0 - buggy_mass[Stage::WholeTask];
            for (RuleId r : t.rules) w *= is_buggy(r) ? prop(r) : 1.0 - buggy_mass[stage_of(r)];
        }
        chains.emplace_back(t.rules, std::max(w, 0.0));
    }
    GroundTruth truth;
    truth.rules = pick_weighted(chains, rng);
    const bool has_rate = std::any_of(truth.rules.begin(), truth.rules.end(),
                                      [](RuleId r) { return stage_of(r) == Stage::RateStep; });
    if (has_rate) {
        std::vector<std::pair<RoundingMod, double>> mods(p.rounding.begin(), p.rounding.end());
        truth.rounding = pick_weighted(mods, rng);
    }
    return {eval_trace(task, truth.rules, truth.rounding), truth};
}

StudentAction choose_action(const StudentProfile& p, DiagnosisClass cls, Rng& rng) {
    const auto it = p.policy.find(cls);
    if (it == p.policy.end() || it->second.weights.empty()) return StudentAction::TryAgain;
    std::vector<std::pair<StudentAction, double>> w(it->second.weights.begin(), it->second.weights.end());
    return pick_weighted(w, rng);
}

std::vector<Event> run_one(const StudentProfile& p, Topic topic, const std::shared_ptr<const BankSet>& banks,
                           std::uint64_t seed, std::size_t index) {
    Rng rng(mix_seed(seed, index));
    const std::int64_t t0 = 1'700'000'000'000 + static_cast<std::int64_t>(index) * 10'000'000;
    WallClock clock = [t = t0]() mutable { return t += 1500; };
    auto s = Session::start(fmt::format("sim-{}-{}", seed, index), topic, banks, rng(), clock);

    for (int step = 0; step < p.max_steps; ++step) {
        const Answer a = produce_answer(p, s.current_task(), rng);
        const auto r = s.submit(a.value, a.truth);
        const bool main = s.state().context == Context::Main;
        if (r.diagnosis.cls == DiagnosisClass::Correct) {
            if (main) break;
            s.return_to_main();
            continue;
        }
        switch (choose_action(p, r.diagnosis.cls, rng)) {
            case StudentAction::TryAgain:
                break;
            case StudentAction::Subtask:
                if (main) s.choose_subtask();
                else s.return_to_main();
                break;
            case StudentAction::WorkedExample:
                if (s.actions().can_view_we) s.view_worked_example();
                break;
            case StudentAction::Instruction:
                if (s.actions().can_view_di) s.view_instruction();
                break;
            case StudentAction::Stuck:
                s.declare_stuck();
                s.close();
                return s.log();
        }
    }
    s.close();
    return s.log();
}

}  // namespace

StudentProfile profile_from_json(const nlohmann::json& j) {
    try {
        StudentProfile p;
        const nlohmann::json props = j.value("propensities", nlohmann::json::object());
        for (const auto& [name, v] : props.items()) {
            const RuleId r = parse_rule(name);
            if (!is_buggy(r)) throw InvalidInput(fmt::format("propensity given for correct rule {}", name));
            const double prob = v.get<double>();
            check_probability(prob, "propensity of " + name);
            p.propensities[r] = prob;
        }
        if (j.contains("rounding")) {
            p.rounding.clear();
            for (const auto& [name, v] : j["rounding"].items()) {
                const double w = v.get<double>();
                check_probability(w, "rounding weight " + name);
                p.rounding[parse_rounding(name)] = w;
            }
            double sum = 0;
            for (const auto& [m, w] : p.rounding) sum += w;
            if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("rounding weights must sum to 1");
        }
        p.off_model = j.value("offModel", 0.0);
        p.no_input = j.value("noInput", 0.0);
        check_probability(p.off_model, "offModel");
        check_probability(p.no_input, "noInput");
        if (p.off_model + p.no_input > 1.0) throw InvalidInput("offModel + noInput exceeds 1");
        p.max_steps = j.value("maxSteps", 40);
        if (p.max_steps < 1) throw InvalidInput("maxSteps must be positive");

        const nlohmann::json policies = j.value("policy", nlohmann::json::object());
        for (const auto& [cls, row] : policies.items()) {
            const DiagnosisClass c = parse_diagnosis_class(cls);
            if (c == DiagnosisClass::Correct) throw InvalidInput("no policy applies after a correct answer");
            ActionPolicy policy;
            double sum = 0;
            for (const auto& [name, v] : row.items()) {
                const double w = v.get<double>();
                check_probability(w, fmt::format("policy {} {}", cls, name));
                policy.weights[parse_action(name)] = w;
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput(fmt::format("policy for {} must sum to 1", cls));
            p.policy[c] = std::move(policy);
        }

        // a student picks at most one buggy rule per stage
        std::map<std::pair<Topic, Stage>, double> mass;
        for (const auto& [r, prob] : p.propensities)
            mass[{RuleCatalog::builtin().rule(r).topic, stage_of(r)}] += prob;
        for (const auto& [key, m] : mass)
            if (m > 1.0 + 1e-9)
                throw InvalidInput(fmt::format("{} {} propensities sum to {}", to_string(key.first),
                                               to_string(key.second), m));
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed profile: ") + e.what());
    }
}

nlohmann::json to_json(const StudentProfile& p) {
    nlohmann::json props = nlohmann::json::object();
    for (const auto& [r, v] : p.propensities) props[std::string(to_string(r))] = v;
    nlohmann::json rounding = nlohmann::json::object();
    for (const auto& [m, v] : p.rounding) rounding[std::string(to_string(m))] = v;
    nlohmann::json policy = nlohmann::json::object();
    for (const auto& [c, row] : p.policy) {
        nlohmann::json r = nlohmann::json::object();
        for (const auto& [a, w] : row.weights) r[std::string(action_name(a))] = w;
        policy[std::string(to_string(c))] = r;
    }
    return {{"propensities", props}, {"rounding", rounding}, {"offModel", p.off_model},
            {"noInput", p.no_input},  {"policy", policy},     {"maxSteps", p.max_steps}};
}

std::vector<std::vector<Event>> simulate(const StudentProfile& profile, Topic topic,
                                         std::shared_ptr<const BankSet> banks, std::size_t n,
                                         std::uint64_t seed) {
    std::vector<std::vector<Event>> logs;
    logs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) logs.push_back(run_one(profile, topic, banks, seed, i));
    return logs;
}

}  // namespace itf
