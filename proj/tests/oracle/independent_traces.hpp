#pragma once

// Brute-force trace enumeration written directly from the rule formulas,
// sharing no code with the library's evaluator. Tests use it to check trace
// values, separation and routing.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "itf/tasks.hpp"

namespace oracle {

struct OracleTrace {
    std::string chain;  // rule names joined by '+'
    int decimals;       // -1 for unrounded
    bool correct;
    long double value;
    std::string route;  // expected subtask kind name, empty when correct
};

inline long double cut(long double r, int d) {
    if (d < 0) return r;
    long double s = std::pow(10.0L, d);
    long double v = r * s;
    v = v >= 0 ? std::floor(v + 1e-9L) : std::ceil(v - 1e-9L);
    return v / s;
}

inline std::vector<OracleTrace> traces(itf::TaskKind kind, const itf::ParamSet& p) {
    using K = itf::TaskKind;
    std::vector<OracleTrace> out;
    const bool lin = kind == K::LinearMain || kind == K::LinearSimpler || kind == K::LinearGivenSlope ||
                     kind == K::LinearComputeSlope;
    const long double x1 = p.x1, x2 = p.x2, y1 = p.y1;
    const long double y2 = p.y2 ? *p.y2 : 0;
    const long double x3 = p.x3 ? *p.x3 : 0;
    const long double dx = x2 - x1;
    const int roundings[] = {-1, 1, 2, 3};

    struct Rate {
        std::string name;
        long double v;
        bool ok;
    };
    std::vector<Rate> rates;
    if (lin) {
        rates = {{"C-SLOPE", (y2 - y1) / dx, true}, {"B-INV-SLOPE", dx / (y2 - y1), false}};
    } else {
        rates.push_back({"C-FACTOR", std::pow(y2 / y1, 1.0L / dx), true});
        if (kind != K::ExpSimpler) rates.push_back({"B-NOROOT", y2 / y1, false});
        rates.push_back({"B-INVFACTOR", std::pow(y1 / y2, 1.0L / dx), false});
    }

    const std::string simpler = lin ? "LinearSimpler" : "ExpSimpler";
    const std::string given = lin ? "LinearGivenSlope" : "ExpGivenFactor";
    const std::string compute = lin ? "LinearComputeSlope" : "ExpComputeFactor";

    if (kind == K::LinearComputeSlope || kind == K::ExpComputeFactor) {
        for (const auto& r : rates)
            for (int d : roundings) out.push_back({r.name, d, r.ok, cut(r.v, d), r.ok ? "" : compute});
        return out;
    }

    // anchor, target and the first known x
    long double ax, ay, tx;
    bool one_point = kind == K::LinearGivenSlope || kind == K::ExpGivenFactor;
    if (one_point) {
        ax = x1;
        ay = y1;
        tx = x2;
    } else {
        ax = x2;
        ay = y2;
        tx = x3;
    }
    const long double gap = tx - ax;

    struct Ext {
        std::string name;
        bool ok;
    };
    const std::vector<Ext> exts = lin ? std::vector<Ext>{{"C-EXT", true}, {"B-NOANCHOR", false}, {"B-WRONGGAP", false}}
                                      : std::vector<Ext>{{"C-EXPEXT", true}, {"B-SINGLE", false}, {"B-ADDFACTOR", false}};
    auto apply = [&](const std::string& e, long double s) -> long double {
        if (e == "C-EXT") return ay + s * gap;
        if (e == "B-NOANCHOR") return ay + s * tx;
        if (e == "B-WRONGGAP") return one_point ? ay + s * (gap + 1) : ay + s * (tx - x1);
        if (e == "C-EXPEXT") return ay * std::pow(s, gap);
        if (e == "B-SINGLE") return ay * s;
        return ay + s * gap;  // B-ADDFACTOR
    };

    if (one_point) {
        for (const auto& e : exts)
            out.push_back({e.name, -1, e.ok, apply(e.name, static_cast<long double>(*p.given_rate)),
                           e.ok ? "" : given});
        return out;
    }

    for (const auto& r : rates) {
        for (const auto& e : exts) {
            const std::string chain = r.name + "+" + e.name;
            std::string route;
            if (chain == "B-NOROOT+B-SINGLE") route = simpler;
            else if (!r.ok) route = compute;
            else if (!e.ok) route = given;
            for (int d : roundings) out.push_back({chain, d, r.ok && e.ok, apply(e.name, cut(r.v, d)), route});
        }
    }
    if (lin) {
        out.push_back({"B-ADD", -1, false, y2 + (y2 - y1), simpler});
        out.push_back({"B-PROP", -1, false, y2 * (x3 / x2), simpler});
    }
    return out;
}

inline long double separation(const std::vector<OracleTrace>& ts) {
    long double best = INFINITY;
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = i + 1; j < ts.size(); ++j)
            if (ts[i].chain != ts[j].chain) best = std::min(best, std::fabs(ts[i].value - ts[j].value));
    return best;
}

}  // namespace oracle
