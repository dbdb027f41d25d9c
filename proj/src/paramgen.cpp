#include "itf/paramgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "itf/error.hpp"

namespace itf {

namespace {

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

ParamSet candidate(TaskKind kind, Rng& rng) {
    ParamSet p;
    if (is_simpler(kind)) {
        p.x1 = static_cast<int>(uniform_int(rng, kMinValue, kMaxValue - 2));
        p.x2 = p.x1 + 1;
        p.x3 = static_cast<int>(uniform_int(rng, p.x1 + 2, kMaxValue));
    } else {
        const int n = has_three_columns(kind) ? 3 : 2;
        std::vector<int> xs;
        while (static_cast<int>(xs.size()) < n) {
            const int v = static_cast<int>(uniform_int(rng, kMinValue, kMaxValue));
            if (std::find(xs.begin(), xs.end(), v) == xs.end()) xs.push_back(v);
        }
        std::sort(xs.begin(), xs.end());
        p.x1 = xs[0];
        p.x2 = xs[1];
        if (n == 3) p.x3 = xs[2];
    }
    p.y1 = static_cast<int>(uniform_int(rng, kMinValue, kMaxValue));
    if (is_given_rate(kind)) {
        if (topic_of(kind) == Topic::Linear)
            p.given_rate = static_cast<double>(uniform_int(rng, 2, 12));
        else
            p.given_rate = static_cast<double>(uniform_int(rng, 850, 1250)) / 1000.0;
    } else {
        int y2;
        do {
            y2 = static_cast<int>(uniform_int(rng, kMinValue, kMaxValue));
        } while (y2 == p.y1);
        p.y2 = y2;
    }
    return p;
}

bool separated_by(const std::vector<Trace>& traces, double delta) {
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t j = i + 1; j < traces.size(); ++j)
            if (traces[i].rules != traces[j].rules && std::abs(traces[i].value - traces[j].value) < delta)
                return false;
    return true;
}

}  // namespace

double separation(const std::vector<Trace>& traces) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t j = i + 1; j < traces.size(); ++j)
            if (traces[i].rules != traces[j].rules)
                best = std::min(best, std::abs(traces[i].value - traces[j].value));
    return best;
}

double separation(const TaskInstance& instance) { return separation(enumerate_traces(instance)); }

bool submissions_unambiguous(const std::vector<Trace>& traces) {
    for (const auto& t : traces) {
        const double candidates[] = {t.value, round_to(t.value, 0), round_to(t.value, 1),
                                     round_to(t.value, 2), round_to(t.value, 3)};
        for (const auto& u : traces) {
            if (u.rules == t.rules) continue;
            for (double s : candidates)
                if (answer_matches(s, u.value)) return false;
        }
    }
    return true;
}

ParamSet random_params(TaskKind kind, Rng& rng, std::size_t max_tries) {
    const auto& constraints = parameter_constraints(kind);
    for (std::size_t i = 0; i < max_tries; ++i) {
        ParamSet p = candidate(kind, rng);
        if (constraints.satisfied_by(p)) return p;
    }
    throw TuningFailed(fmt::format("no valid parameters for {} within {} draws", to_string(kind), max_tries));
}

ParamBank tune(TaskKind kind, std::size_t count, std::uint64_t seed, double delta, std::size_t budget) {
    if (!(delta > 2 * kMatchTolerance))
        throw InvalidInput(fmt::format("delta must exceed {}, got {}", 2 * kMatchTolerance, delta));

    ParamBank bank;
    bank.kind = kind;
    bank.seed = seed;
    bank.delta = delta;
    bank.separation = std::numeric_limits<double>::infinity();

    Rng rng(seed);
    const auto& constraints = parameter_constraints(kind);
    while (bank.entries.size() < count) {
        if (bank.draws >= budget)
            throw TuningFailed(fmt::format("tuning {} with delta {} found only {} of {} entries in {} draws",
                                           to_string(kind), delta, bank.entries.size(), count, budget));
        ++bank.draws;
        const ParamSet p = candidate(kind, rng);
        if (!constraints.satisfied_by(p)) continue;
        if (std::find(bank.entries.begin(), bank.entries.end(), p) != bank.entries.end()) continue;
        const auto traces = enumerate_traces(instantiate(kind, p));
        if (!separated_by(traces, delta) || !submissions_unambiguous(traces)) continue;
        const double sep = separation(traces);
        bank.entries.push_back(p);
        bank.separation = std::min(bank.separation, sep);
    }
    return bank;
}

ParamSet draw(const ParamBank& bank, const std::optional<ParamSet>& exclude, Rng& rng) {
    if (bank.entries.empty()) throw InvalidInput("cannot draw from an empty parameter bank");
    const auto n = static_cast<std::int64_t>(bank.entries.size());
    if (n == 1) return bank.entries.front();
    if (exclude) {
        const auto it = std::find(bank.entries.begin(), bank.entries.end(), *exclude);
        if (it != bank.entries.end()) {
            const auto skip = it - bank.entries.begin();
            auto idx = uniform_int(rng, 0, n - 2);
            if (idx >= skip) ++idx;
            return bank.entries[static_cast<std::size_t>(idx)];
        }
    }
    return bank.entries[static_cast<std::size_t>(uniform_int(rng, 0, n - 1))];
}

nlohmann::json to_json(const ParamBank& bank) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& p : bank.entries) entries.push_back(params_to_json(p));
    return {
        {"kind", to_string(bank.kind)},
        {"seed", bank.seed},
        {"delta", bank.delta},
        {"separation", std::isfinite(bank.separation) ? nlohmann::json(bank.separation) : nlohmann::json(nullptr)},
        {"draws", bank.draws},
        {"acceptanceRate", bank.acceptance_rate()},
        {"entries", entries},
    };
}

ParamBank bank_from_json(const nlohmann::json& j) {
    try {
        ParamBank bank;
        bank.kind = parse_kind(j.at("kind").get<std::string>());
        bank.seed = j.at("seed").get<std::uint64_t>();
        bank.delta = j.at("delta").get<double>();
        bank.draws = j.value("draws", std::size_t{0});
        bank.separation = std::numeric_limits<double>::infinity();
        if (j.contains("separation") && !j["separation"].is_null())
            bank.separation = j["separation"].get<double>();
        for (const auto& e : j.at("entries")) {
            ParamSet p = params_from_json(e);
            instantiate(bank.kind, p);
            bank.entries.push_back(std::move(p));
        }
        return bank;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed parameter bank: ") + e.what());
    }
}

void save_bank(const ParamBank& bank, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << to_json(bank).dump(2) << '\n';
    if (!out) throw Error("failed writing " + file.string());
}

ParamBank load_bank(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw NotFound("no parameter bank at " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("unreadable parameter bank " + file.string() + ": " + e.what());
    }
    return bank_from_json(j);
}

void BankSet::add(ParamBank bank) {
    const TaskKind kind = bank.kind;
    banks_.insert_or_assign(kind, std::move(bank));
}

const ParamBank& BankSet::at(TaskKind kind) const {
    const auto it = banks_.find(kind);
    if (it == banks_.end()) throw NotFound("no parameter bank for " + std::string(to_string(kind)));
    return it->second;
}

BankSet BankSet::load_dir(const std::filesystem::path& dir) {
    BankSet set;
    for (TaskKind k : kAllKinds) {
        ParamBank bank = load_bank(dir / (std::string(to_string(k)) + ".json"));
        if (bank.kind != k) throw InvalidInput("bank file for " + std::string(to_string(k)) + " holds another kind");
        set.add(std::move(bank));
    }
    return set;
}

void BankSet::save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [kind, bank] : banks_) save_bank(bank, dir / (std::string(to_string(kind)) + ".json"));
}

}  // namespace itf
