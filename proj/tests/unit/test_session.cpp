#include <doctest.h>

#include <algorithm>
#include <random>

#include "itf/session.hpp"
#include "support/banks.hpp"
#include "support/walk.hpp"

using namespace itf;

namespace {

Session fresh(Topic topic = Topic::Linear, std::uint64_t seed = 7) {
    return Session::start("s-1", topic, support::banks(), seed, support::fixed_clock());
}

double buggy_value(const TaskInstance& t, RuleId rule) {
    for (const auto& tr : enumerate_traces(t))
        if (tr.rounding == RoundingMod::None && std::find(tr.rules.begin(), tr.rules.end(), rule) != tr.rules.end())
            return tr.value;
    FAIL("no trace with the rule");
    return 0;
}

std::vector<EventKind> kinds(const std::vector<Event>& log, std::size_t from = 0) {
    std::vector<EventKind> out;
    for (std::size_t i = from; i < log.size(); ++i) out.push_back(log[i].kind);
    return out;
}

template <class F>
void check_rejected(Session& s, F&& op) {
    const auto before = s.state();
    CHECK_THROWS_AS(op(), ActionRejected);
    CHECK(s.state() == before);
}

}  // namespace

TEST_CASE("a session starts on a main task with instruction and subtask offered") {
    auto s = fresh();
    CHECK(kinds(s.log()) == std::vector{EventKind::SessionStart, EventKind::TaskShown});
    CHECK(s.state().context == Context::Main);
    CHECK(s.current_task().kind == TaskKind::LinearMain);
    const auto a = s.actions();
    CHECK(a.can_submit);
    CHECK(a.can_subtask);
    CHECK(a.can_view_di);
    CHECK_FALSE(a.can_try_again);
    CHECK_FALSE(a.can_view_we);
    CHECK_FALSE(a.can_return_to_main);
    CHECK_FALSE(a.can_new_task);
    CHECK(check_invariants(s.state()).empty());
    CHECK(s.log()[0].payload.contains("introVideo"));
}

TEST_CASE("a buggy main answer gets feedback and routes to the compute-rate subtask") {
    auto s = fresh();
    const TaskInstance main = s.current_task();
    CHECK(s.submit(1.0).diagnosis.cls == DiagnosisClass::Undetectable);
    // trying again keeps the task
    CHECK(s.current_task() == main);
    const auto r = s.submit(buggy_value(main, RuleId::BInvSlope));
    CHECK(r.diagnosis.cls == DiagnosisClass::Buggy);
    CHECK(r.feedback.size() == 3);
    CHECK(r.actions.can_try_again);
    CHECK(r.actions.can_subtask);
    CHECK(kinds(s.log(), 4) == std::vector{EventKind::AnswerSubmitted, EventKind::FeedbackGiven});

    const auto sub = s.choose_subtask();
    CHECK(sub.kind == TaskKind::LinearComputeSlope);
    CHECK(s.state().context == Context::Subtask);
    CHECK(s.state().subtask_visited);
    const auto a = s.actions();
    CHECK(a.can_view_we);
    CHECK(a.can_return_to_main);
    CHECK_FALSE(a.can_subtask);
    CHECK_FALSE(a.can_view_di);
    CHECK_FALSE(a.can_try_again);
}

TEST_CASE("choosing a subtask without an answer routes to the simpler task") {
    auto s = fresh(Topic::Exponential);
    CHECK(s.choose_subtask().kind == TaskKind::ExpSimpler);
    CHECK(s.state().last_main_diagnosis == std::nullopt);
}

TEST_CASE("the main worked example unlocks on return and redraws the task") {
    auto s = fresh();
    check_rejected(s, [&] { s.view_worked_example(); });
    const TaskInstance original = s.current_task();
    s.choose_subtask();
    CHECK_FALSE(s.state().we_main_unlocked);

    const auto we_sub = s.view_worked_example();
    CHECK_FALSE(we_sub.next_task.has_value());
    CHECK(we_sub.example.kind == s.current_task().kind);

    CHECK(s.return_to_main() == original);
    CHECK(s.state().we_main_unlocked);
    CHECK(s.state().subtask == std::nullopt);

    const auto we_main = s.view_worked_example();
    REQUIRE(we_main.next_task.has_value());
    CHECK(we_main.example.kind == TaskKind::LinearMain);
    CHECK(we_main.next_task->params != original.params);
    CHECK(s.current_task() == *we_main.next_task);
    CHECK(kinds(s.log(), s.log().size() - 3) ==
          std::vector{EventKind::WEViewed, EventKind::NewParamsDrawn, EventKind::TaskShown});
    CHECK(s.state().last_main_diagnosis == std::nullopt);
    CHECK(s.actions().can_view_we);
}

TEST_CASE("direct instruction is offered once and only on the main task") {
    auto s = fresh();
    const auto asset = s.view_instruction();
    CHECK_FALSE(asset.uri.empty());
    CHECK(s.state().di_used);
    CHECK_FALSE(s.actions().can_view_di);
    check_rejected(s, [&] { s.view_instruction(); });

    auto t = fresh();
    t.choose_subtask();
    check_rejected(t, [&] { t.view_instruction(); });
    t.return_to_main();
    CHECK(t.actions().can_view_di);
}

TEST_CASE("a solved main task offers a fresh task and no subtask") {
    auto s = fresh();
    const TaskInstance main = s.current_task();
    const auto r = s.submit(correct_answer(main));
    CHECK(r.diagnosis.cls == DiagnosisClass::Correct);
    CHECK(r.feedback.size() == 1);
    CHECK_FALSE(r.actions.can_subtask);
    CHECK_FALSE(r.actions.can_try_again);
    CHECK(r.actions.can_new_task);
    check_rejected(s, [&] { s.choose_subtask(); });

    const auto next = s.new_task();
    CHECK(next.params != main.params);
    CHECK_FALSE(s.state().main_solved);
    CHECK_FALSE(s.actions().can_new_task);
    CHECK(s.actions().can_subtask);
}

TEST_CASE("rejected and invalid commands leave the log untouched") {
    auto s = fresh();
    check_rejected(s, [&] { s.return_to_main(); });
    check_rejected(s, [&] { s.new_task(); });
    const auto before = s.state();
    CHECK_THROWS_AS(s.submit(std::nan("")), InvalidInput);
    CHECK(s.state() == before);

    s.close();
    CHECK(s.actions() == ActionSet{});
    check_rejected(s, [&] { s.submit(3.0); });
    check_rejected(s, [&] { s.declare_stuck(); });
    check_rejected(s, [&] { s.close(); });
    check_rejected(s, [&] { s.choose_subtask(); });
    try {
        s.submit(3.0);
    } catch (const ActionRejected& e) {
        CHECK(e.allowed() == ActionSet{});
    }
}

TEST_CASE("same seed and commands give the same log") {
    auto run = [](std::uint64_t seed) {
        auto s = fresh(Topic::Exponential, seed);
        s.submit(12.5);
        s.choose_subtask();
        s.submit(std::nullopt);
        s.return_to_main();
        s.view_worked_example();
        s.declare_stuck();
        return s.log();
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("replay rebuilds the state and rejects corrupt logs") {
    auto s = fresh();
    s.submit(4.0, GroundTruth{{RuleId::CSlope, RuleId::BNoAnchor}, RoundingMod::Decimals1});
    s.view_instruction();
    s.choose_subtask();
    s.submit(std::nullopt);
    s.view_worked_example();
    s.return_to_main();

    std::vector<Event> log;
    for (const auto& e : s.log()) log.push_back(event_from_line(to_line(e)));
    const auto r = Session::replay(log, support::banks());
    CHECK(r.state() == s.state());
    CHECK(r.actions() == s.actions());
    CHECK(ground_truth_from_json(log[2].payload["truth"]).rules.size() == 2);

    auto twice = log;
    Event di = *std::find_if(twice.begin(), twice.end(), [](const Event& e) { return e.kind == EventKind::DIViewed; });
    di.seq = twice.size() + 1;
    twice.push_back(di);
    CHECK_THROWS_AS(Session::replay(twice, support::banks()), InvalidInput);

    auto gap = log;
    gap.erase(gap.begin() + 3);
    CHECK_THROWS_AS(Session::replay(gap, support::banks()), InvalidInput);

    auto headless = log;
    headless.erase(headless.begin());
    for (auto& e : headless) --e.seq;
    CHECK_THROWS_AS(Session::replay(headless, support::banks()), InvalidInput);

    auto truncated = log;
    truncated.resize(truncated.size() - 1);  // ends between ReturnedToMain and its TaskShown
    CHECK_THROWS_AS(Session::replay(truncated, support::banks()), InvalidInput);

    CHECK_THROWS_AS(Session::replay({}, support::banks()), InvalidInput);
    CHECK_THROWS_AS(event_from_line("{not json"), InvalidInput);
}

TEST_CASE("random walks never break the invariants or the gating") {
    const auto rep = support::random_walks(10000, 2024, support::banks());
    CHECK(rep.walks == 10000);
    CHECK(rep.rejected > 0);
    CHECK_MESSAGE(rep.violations == 0, rep.first_violation);
}
