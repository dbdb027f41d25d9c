#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "itf/diagnosis.hpp"
#include "itf/error.hpp"

using namespace itf;
using enum RuleId;

namespace {

TaskInstance lin(int x1, int x2, int x3, int y1, int y2) {
    return instantiate(TaskKind::LinearMain, {x1, x2, x3, y1, y2, std::nullopt});
}

const Trace* find(const std::vector<Trace>& ts, std::vector<RuleId> rules, RoundingMod m) {
    for (const auto& t : ts)
        if (t.rules == rules && t.rounding == m) return &t;
    return nullptr;
}

}  // namespace

TEST_CASE("trace counts follow the catalog") {
    CHECK(enumerate_traces(lin(23, 85, 97, 15, 41)).size() == 26);
    const auto given = instantiate(TaskKind::LinearGivenSlope, {30, 87, std::nullopt, 91, std::nullopt, 8.0});
    const auto gt = enumerate_traces(given);
    CHECK(gt.size() == 3);
    for (const auto& t : gt) CHECK(t.rounding == RoundingMod::None);
    CHECK(enumerate_traces(instantiate(TaskKind::ExpMain, {77, 80, 85, 58, 55, std::nullopt})).size() == 36);
    CHECK(enumerate_traces(instantiate(TaskKind::ExpSimpler, {72, 73, 80, 28, 30, std::nullopt})).size() == 24);
    CHECK(enumerate_traces(instantiate(TaskKind::LinearComputeSlope, {35, 62, std::nullopt, 47, 68, std::nullopt}))
              .size() == 8);
}

TEST_CASE("trace values match the high-precision oracle") {
    // Frozen from tests/oracles/trace_oracle.py (40-digit arithmetic).
    struct Row {
        std::vector<RuleId> rules;
        RoundingMod mod;
        double value;
    };
    using M = RoundingMod;
    const std::vector<Row> example{
        {{CSlope, CExt}, M::None, 117.52631578947368},  {{CSlope, CExt}, M::Decimals1, 116.2},
        {{CSlope, CExt}, M::Decimals2, 117.46},         {{CSlope, CExt}, M::Decimals3, 117.516},
        {{CSlope, BNoAnchor}, M::None, 236.07894736842105}, {{CSlope, BNoAnchor}, M::Decimals1, 226.7},
        {{CSlope, BWrongGap}, M::None, 170.52631578947368}, {{CSlope, BWrongGap}, M::Decimals3, 170.488},
        {{BInvSlope, CExt}, M::None, 108.0377358490566},    {{BInvSlope, CExt}, M::Decimals1, 107.8},
        {{BInvSlope, CExt}, M::Decimals2, 107.94},          {{BInvSlope, CExt}, M::Decimals3, 108.024},
        {{BInvSlope, BNoAnchor}, M::Decimals2, 168.29},     {{BInvSlope, BWrongGap}, M::None, 135.28301886792453},
        {{BAdd}, M::None, 151.0},                           {{BProp}, M::None, 114.14117647058824},
    };
    const auto traces = enumerate_traces(lin(47, 85, 99, 45, 98));
    for (const auto& row : example) {
        const Trace* t = find(traces, row.rules, row.mod);
        REQUIRE(t != nullptr);
        CHECK(t->value == doctest::Approx(row.value).epsilon(1e-12));
    }

    const auto exp = enumerate_traces(instantiate(TaskKind::ExpMain, {77, 80, 85, 58, 55, std::nullopt}));
    CHECK(find(exp, {CFactor, CExpExt}, M::Decimals2)->value == doctest::Approx(49.715643824).epsilon(1e-12));
    CHECK(find(exp, {BNoRoot, BSingle}, M::Decimals3)->value == doctest::Approx(52.14).epsilon(1e-12));
    CHECK(find(exp, {BInvFactor, CExpExt}, M::None)->value == doctest::Approx(60.090367896735998).epsilon(1e-12));
}

TEST_CASE("match predicate") {
    CHECK(answer_matches(107.94, 107.94));
    CHECK(answer_matches(52.155, 52.155172413793103));
    CHECK(answer_matches(52.16, 52.155172413793103));
    CHECK(answer_matches(52.2, 52.155172413793103));
    CHECK(answer_matches(52, 52.155172413793103));
    CHECK_FALSE(answer_matches(52.15, 52.155172413793103 + 0.001));
    CHECK_FALSE(answer_matches(53, 52.155172413793103));
    CHECK(answer_matches(10.004, 10.0));
    CHECK_FALSE(answer_matches(10.006, 10.0));
    // huge values match within double resolution
    CHECK(answer_matches(658342425356933.5, 658342425356933.0));
    CHECK_FALSE(answer_matches(658342425358000.0, 658342425356933.0));
}

TEST_CASE("diagnosis of the reference answers") {
    const auto example = lin(47, 85, 99, 45, 98);
    const auto d = diagnose(example, 107.94);
    CHECK(d.cls == DiagnosisClass::Buggy);
    CHECK(d.chain == std::vector{BInvSlope, CExt});
    CHECK(d.rounding == RoundingMod::Decimals2);

    const auto t3 = lin(23, 85, 97, 15, 41);
    const auto add = diagnose(t3, 67.0);
    CHECK(add.cls == DiagnosisClass::Buggy);
    CHECK(add.chain == std::vector{BAdd});

    const auto exp = instantiate(TaskKind::ExpMain, {77, 80, 85, 58, 55, std::nullopt});
    for (double v : {52.155, 52.16}) {
        const auto e = diagnose(exp, v);
        CHECK(e.cls == DiagnosisClass::Buggy);
        CHECK(e.chain == std::vector{BNoRoot, BSingle});
    }

    CHECK(diagnose(t3, 12345.0).cls == DiagnosisClass::Undetectable);
    CHECK(diagnose(t3, 12345.0).chain.empty());
    CHECK(diagnose(t3, std::nullopt).cls == DiagnosisClass::NoInput);
    CHECK(diagnose(t3, 46.03).cls == DiagnosisClass::Correct);
    CHECK(diagnose(t3, 46.03).chain.empty());
    CHECK_THROWS_AS(diagnose(t3, std::nan("")), InvalidInput);
    CHECK_THROWS_AS(diagnose(t3, INFINITY), InvalidInput);
}

TEST_CASE("correct wins over a colliding buggy trace") {
    // Equal x-steps make "add the change of y once more" coincide with the answer.
    const auto inst = lin(20, 40, 60, 15, 41);
    REQUIRE(correct_answer(inst) == doctest::Approx(67.0));
    CHECK(diagnose(inst, 67.0).cls == DiagnosisClass::Correct);
}

TEST_CASE("tie-break prefers fewer buggy rules, then unrounded") {
    // Hand-built trace list with two buggy matches for 100.
    std::vector<Trace> ts{
        {{CSlope, CExt}, RoundingMod::None, 50.0},
        {{BInvSlope, BNoAnchor}, RoundingMod::None, 100.0},
        {{CSlope, BWrongGap}, RoundingMod::Decimals2, 100.0},
        {{CSlope, BNoAnchor}, RoundingMod::None, 100.001},
    };
    const auto d = diagnose(ts, 100.0);
    CHECK(d.chain == std::vector{CSlope, BNoAnchor});
    CHECK(d.rounding == RoundingMod::None);
    ts.pop_back();
    CHECK(diagnose(ts, 100.0).chain == std::vector{CSlope, BWrongGap});
}

TEST_CASE("subtask routing from main tasks") {
    const auto t3 = lin(23, 85, 97, 15, 41);
    CHECK(route_subtask(diagnose(t3, 67.0), TaskKind::LinearMain) == TaskKind::LinearSimpler);
    CHECK(route_subtask(diagnose(lin(47, 85, 99, 45, 98), 107.94), TaskKind::LinearMain) ==
          TaskKind::LinearComputeSlope);
    CHECK(route_subtask(diagnose(t3, 81.68), TaskKind::LinearMain) == TaskKind::LinearGivenSlope);
    CHECK(route_subtask(diagnose(t3, std::nullopt), TaskKind::LinearMain) == TaskKind::LinearSimpler);
    CHECK(route_subtask(diagnose(t3, 12345.0), TaskKind::LinearMain) == TaskKind::LinearSimpler);
    const Diagnosis correct{DiagnosisClass::Correct, {}, RoundingMod::None, 50.34};
    CHECK_FALSE(route_subtask(correct, TaskKind::ExpMain).has_value());
    const auto exp = instantiate(TaskKind::ExpMain, {77, 80, 85, 58, 55, std::nullopt});
    CHECK(route_subtask(diagnose(exp, 52.155), TaskKind::ExpMain) == TaskKind::ExpSimpler);
    CHECK_THROWS_AS(route_subtask(correct, TaskKind::LinearSimpler), InvalidInput);
}

TEST_CASE("feedback messages") {
    const auto example = lin(47, 85, 99, 45, 98);
    const auto d = diagnose(example, 107.94);
    const auto main = feedback_for(d, FeedbackContext::MainTask, example);
    REQUIRE(main.size() == 3);
    CHECK(main[0].type == FeedbackType::KR);
    CHECK(main[1].type == FeedbackType::ES);
    CHECK(main[1].specificity == Specificity::Low);
    CHECK(main[1].text ==
          "It seems you computed the slope by dividing the increase of x by the variation of y. Is this right?");
    CHECK(main[2].type == FeedbackType::TA);

    const auto sub = feedback_for(d, FeedbackContext::Subtask, example);
    CHECK(sub[1].specificity == Specificity::High);
    CHECK(sub[1].text.find("38 / 53 = 0.71") != std::string::npos);

    const Diagnosis ok{DiagnosisClass::Correct, {}, RoundingMod::None, 117.53};
    const auto c = feedback_for(ok, FeedbackContext::MainTask, example);
    REQUIRE(c.size() == 1);
    CHECK(c[0].type == FeedbackType::KR);

    const auto u = feedback_for(diagnose(example, 1.0), FeedbackContext::MainTask, example);
    REQUIRE(u.size() == 2);
    CHECK(u[0].type == FeedbackType::KR);
    CHECK(u[1].type == FeedbackType::TA);

    for (const auto& m : feedback_for(diagnose(example, 151.0), FeedbackContext::Subtask, example))
        CHECK(m.text.find('{') == std::string::npos);
}

TEST_CASE("high-specificity text has every placeholder filled for every buggy trace") {
    const std::vector<TaskInstance> insts{
        lin(23, 85, 97, 15, 41),
        instantiate(TaskKind::LinearSimpler, {54, 55, 93, 64, 57, std::nullopt}),
        instantiate(TaskKind::LinearGivenSlope, {30, 87, std::nullopt, 91, std::nullopt, 8.0}),
        instantiate(TaskKind::LinearComputeSlope, {35, 62, std::nullopt, 47, 68, std::nullopt}),
        instantiate(TaskKind::ExpMain, {77, 80, 85, 58, 55, std::nullopt}),
        instantiate(TaskKind::ExpGivenFactor, {45, 52, std::nullopt, 36, std::nullopt, 1.059}),
        instantiate(TaskKind::ExpComputeFactor, {28, 40, std::nullopt, 72, 34, std::nullopt}),
    };
    for (const auto& inst : insts) {
        for (const auto& t : enumerate_traces(inst)) {
            const Diagnosis d{DiagnosisClass::Buggy, t.rules, t.rounding, t.value};
            if (std::none_of(t.rules.begin(), t.rules.end(), is_buggy)) continue;
            for (auto ctx : {FeedbackContext::MainTask, FeedbackContext::Subtask})
                for (const auto& m : feedback_for(d, ctx, inst))
                    CHECK_MESSAGE(m.text.find('{') == std::string::npos, m.text);
        }
    }
}

TEST_CASE("worked example spells out the solution") {
    const auto we = worked_example(lin(23, 85, 97, 15, 41));
    CHECK(we.answer == doctest::Approx(46.032258064516129));
    CHECK(we.steps.back().find("46.03") != std::string::npos);
    const auto rate = worked_example(instantiate(TaskKind::ExpComputeFactor, {28, 40, std::nullopt, 72, 34, std::nullopt}));
    CHECK(rate.steps.back().find("0.94") != std::string::npos);
}

TEST_CASE("diagnosis record round-trips") {
    const auto d = diagnose(lin(47, 85, 99, 45, 98), 107.94);
    const auto j = to_json(d);
    CHECK(j["class"] == "Buggy");
    CHECK(j["chain"] == nlohmann::json::array({"B-INV-SLOPE", "C-EXT"}));
    CHECK(j["rounding"] == "round-2");
    CHECK(diagnosis_from_json(j) == d);
}

TEST_CASE("diagnosis is fast enough for interactive use") {
    const auto example = lin(47, 85, 99, 45, 98);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 1000; ++i) (void)diagnose(example, 107.94);
    const auto per_call = (std::chrono::steady_clock::now() - start) / 1000;
    CHECK(per_call < std::chrono::milliseconds(1));
}
