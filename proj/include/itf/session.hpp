#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itf/diagnosis.hpp"
#include "itf/error.hpp"
#include "itf/paramgen.hpp"

namespace itf {

enum class Context { Main, Subtask };

std::string_view to_string(Context c);
Context parse_context(std::string_view text);

enum class EventKind {
    SessionStart,
    TaskShown,
    AnswerSubmitted,
    FeedbackGiven,
    SubtaskEntered,
    ReturnedToMain,
    WEViewed,
    DIViewed,
    NewParamsDrawn,
    CannotContinue,
    SessionEnd,
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view text);

// One log record. Payload fields depend on the kind; tasks appear in their
// serialized form, diagnoses as diagnosis records.
struct Event {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::SessionStart;
    nlohmann::json payload;
    // Milliseconds since the Unix epoch.
    std::int64_t timestamp = 0;

    bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
// One event per line.
std::string to_line(const Event& e);
Event event_from_line(const std::string& line);

struct ActionSet {
    bool can_submit = false;
    bool can_try_again = false;
    bool can_subtask = false;
    bool can_view_di = false;
    bool can_view_we = false;
    bool can_return_to_main = false;
    // After solving the main task: continue with fresh parameters.
    bool can_new_task = false;

    bool operator==(const ActionSet&) const = default;
};

nlohmann::json to_json(const ActionSet& a);

// The computation a simulated student actually performed; recorded with the
// answer so analysis can detect misdiagnoses.
struct GroundTruth {
    // Empty for an answer produced off the rule catalog.
    std::vector<RuleId> rules;
    RoundingMod rounding = RoundingMod::None;
};

nlohmann::json to_json(const GroundTruth& t);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

struct SessionState {
    std::string session_id;
    Topic topic = Topic::Linear;
    std::uint64_t seed = 0;
    // Bank draws so far; draw k uses a generator seeded from (seed, k).
    std::uint64_t draws = 0;
    std::optional<TaskInstance> main_instance;
    Context context = Context::Main;
    std::optional<TaskInstance> subtask;
    bool di_used = false;
    bool subtask_visited = false;
    bool we_main_unlocked = false;
    bool main_solved = false;
    bool closed = false;
    std::optional<double> last_main_input;
    std::optional<double> last_subtask_input;
    std::optional<Diagnosis> last_main_diagnosis;
    std::optional<Diagnosis> last_subtask_diagnosis;
    std::vector<Event> log;

    std::uint64_t clock() const { return log.size(); }
    bool operator==(const SessionState&) const = default;
};

// Evaluates the state-machine invariants; returns a description of the first
// violation, or an empty string.
std::string check_invariants(const SessionState& s);

// Action refused in the current state. Carries the actions that are legal.
class ActionRejected : public Error {
public:
    ActionRejected(const std::string& what, ActionSet allowed) : Error(what), allowed_(allowed) {}
    const ActionSet& allowed() const noexcept { return allowed_; }

private:
    ActionSet allowed_;
};

struct SubmitResult {
    Diagnosis diagnosis;
    std::vector<FeedbackMessage> feedback;
    ActionSet actions;
};

struct InstructionAsset {
    std::string uri;
};

struct WorkedExampleResult {
    WorkedExample example;
    // Fresh main task drawn after a main-task worked example.
    std::optional<TaskInstance> next_task;
};

using WallClock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

// The tutoring state machine for one student. Not thread-safe: callers
// serialize commands per session.
class Session {
public:
    static Session start(std::string session_id, Topic topic, std::shared_ptr<const BankSet> banks,
                         std::uint64_t seed, WallClock clock = system_clock_ms,
                         const RuleCatalog* rules = &RuleCatalog::builtin());

    // Rebuilds a session from its log. Throws InvalidInput on a corrupt or
    // illegal log.
    static Session replay(const std::vector<Event>& log, std::shared_ptr<const BankSet> banks,
                          WallClock clock = system_clock_ms,
                          const RuleCatalog* rules = &RuleCatalog::builtin());

    const SessionState& state() const { return state_; }
    const std::vector<Event>& log() const { return state_.log; }
    ActionSet actions() const { return actions_for(state_); }
    const TaskInstance& current_task() const;

    SubmitResult submit(std::optional<double> value, std::optional<GroundTruth> truth = std::nullopt);
    TaskInstance choose_subtask();
    TaskInstance return_to_main();
    InstructionAsset view_instruction();
    WorkedExampleResult view_worked_example();
    void declare_stuck();
    TaskInstance new_task();
    void close();

    static ActionSet actions_for(const SessionState& s);
    // Folds one event into a state. Throws InvalidInput when the event is
    // not legal in that state.
    static void apply(SessionState& s, const Event& e);

private:
    Session(std::shared_ptr<const BankSet> banks, WallClock clock, const RuleCatalog* rules)
        : banks_(std::move(banks)), clock_(std::move(clock)), rules_(rules) {}

    void emit(EventKind kind, nlohmann::json payload);
    TaskInstance draw_task(TaskKind kind, const std::optional<ParamSet>& exclude) const;
    [[noreturn]] void reject(const std::string& what) const;

    SessionState state_;
    std::shared_ptr<const BankSet> banks_;
    WallClock clock_;
    const RuleCatalog* rules_;
};

}  // namespace itf
