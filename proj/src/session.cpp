#include "itf/session.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace itf {

namespace {

constexpr std::string_view kEventNames[] = {
    "SessionStart",   "TaskShown", "AnswerSubmitted", "FeedbackGiven",  "SubtaskEntered", "ReturnedToMain",
    "WEViewed",       "DIViewed",  "NewParamsDrawn",  "CannotContinue", "SessionEnd",
};

std::string intro_video(Topic t) { return fmt::format("video://intro/{}", to_string(t)); }
std::string instruction_video(Topic t) { return fmt::format("video://direct-instruction/{}", to_string(t)); }

FeedbackContext feedback_context(Context c) {
    return c == Context::Main ? FeedbackContext::MainTask : FeedbackContext::Subtask;
}

[[noreturn]] void bad_event(const Event& e, const std::string& why) {
    throw InvalidInput(fmt::format("event {} ({}): {}", e.seq, to_string(e.kind), why));
}

Context payload_context(const Event& e) {
    try {
        return parse_context(e.payload.at("context").get<std::string>());
    } catch (const nlohmann::json::exception&) {
        bad_event(e, "missing context");
    }
}

std::optional<double> payload_value(const Event& e) {
    const auto it = e.payload.find("value");
    if (it == e.payload.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) bad_event(e, "value is not a number");
    return it->get<double>();
}

}  // namespace

std::string_view to_string(Context c) { return c == Context::Main ? "Main" : "Subtask"; }

Context parse_context(std::string_view text) {
    if (text == "Main") return Context::Main;
    if (text == "Subtask") return Context::Subtask;
    throw InvalidInput(fmt::format("unknown context '{}'", text));
}

std::string_view to_string(EventKind k) { return kEventNames[static_cast<int>(k)]; }

EventKind parse_event_kind(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kEventNames); ++i)
        if (kEventNames[i] == text) return static_cast<EventKind>(i);
    throw InvalidInput(fmt::format("unknown event kind '{}'", text));
}

nlohmann::json to_json(const Event& e) {
    return {{"seq", e.seq}, {"kind", to_string(e.kind)}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

Event event_from_json(const nlohmann::json& j) {
    try {
        Event e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.timestamp = j.at("timestamp").get<std::int64_t>();
        e.payload = j.at("payload");
        if (!e.payload.is_object()) throw InvalidInput("event payload must be an object");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw InvalidInput(std::string("malformed event: ") + ex.what());
    }
}

std::string to_line(const Event& e) { return to_json(e).dump(); }

Event event_from_line(const std::string& line) {
    try {
        return event_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& ex) {
        throw InvalidInput(std::string("unparsable event line: ") + ex.what());
    }
}

nlohmann::json to_json(const ActionSet& a) {
    return {
        {"canSubmit", a.can_submit},         {"canTryAgain", a.can_try_again},
        {"canSubtask", a.can_subtask},       {"canViewDI", a.can_view_di},
        {"canViewWE", a.can_view_we},        {"canReturnToMain", a.can_return_to_main},
        {"canNewTask", a.can_new_task},
    };
}

nlohmann::json to_json(const GroundTruth& t) {
    nlohmann::json rules = nlohmann::json::array();
    for (RuleId r : t.rules) rules.push_back(to_string(r));
    return {{"rules", rules}, {"rounding", to_string(t.rounding)}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    try {
        GroundTruth t;
        for (const auto& r : j.at("rules")) t.rules.push_back(parse_rule(r.get<std::string>()));
        t.rounding = parse_rounding(j.value("rounding", std::string("none")));
        return t;
    } catch (const nlohmann::json::exception& ex) {
        throw InvalidInput(std::string("malformed ground truth: ") + ex.what());
    }
}

std::int64_t system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string check_invariants(const SessionState& s) {
    if (s.log.empty()) return {};
    if (!s.main_instance) return "no main task";
    if (s.main_instance->kind != main_kind(s.topic)) return "main task of the wrong kind";
    if (s.subtask.has_value() != (s.context == Context::Subtask)) return "subtask present outside subtask context";
    if (s.subtask && (is_main(s.subtask->kind) || topic_of(s.subtask->kind) != s.topic))
        return "subtask of the wrong kind";
    if (s.we_main_unlocked && !s.subtask_visited) return "worked example unlocked before any subtask";
    if (s.main_solved && !s.last_main_diagnosis) return "solved without a diagnosis";
    for (std::size_t i = 0; i < s.log.size(); ++i)
        if (s.log[i].seq != i + 1) return "log sequence has a gap";
    return {};
}

ActionSet Session::actions_for(const SessionState& s) {
    ActionSet a;
    if (s.log.empty() || s.closed) return a;
    const bool main = s.context == Context::Main;
    const auto& diag = main ? s.last_main_diagnosis : s.last_subtask_diagnosis;
    a.can_submit = true;
    a.can_try_again = diag && diag->cls != DiagnosisClass::Correct;
    a.can_subtask = main && !(s.last_main_diagnosis && s.last_main_diagnosis->cls == DiagnosisClass::Correct);
    a.can_view_di = main && !s.di_used;
    a.can_view_we = !main || s.we_main_unlocked;
    a.can_return_to_main = !main;
    a.can_new_task = main && s.main_solved;
    return a;
}

void Session::apply(SessionState& s, const Event& e) {
    if (e.seq != s.log.size() + 1) bad_event(e, fmt::format("expected sequence number {}", s.log.size() + 1));
    if (!e.payload.is_object()) bad_event(e, "payload must be an object");
    const EventKind prev = s.log.empty() ? EventKind::SessionEnd : s.log.back().kind;
    if (e.kind == EventKind::SessionStart) {
        if (!s.log.empty()) bad_event(e, "session already started");
    } else {
        if (s.log.empty()) bad_event(e, "log must begin with SessionStart");
        if (s.closed) bad_event(e, "session is closed");
    }
    const ActionSet allowed = actions_for(s);

    try {
        switch (e.kind) {
            case EventKind::SessionStart:
                s.session_id = e.payload.at("sessionId").get<std::string>();
                s.topic = parse_topic(e.payload.at("topic").get<std::string>());
                s.seed = e.payload.at("seed").get<std::uint64_t>();
                break;
            case EventKind::TaskShown: {
                const Context c = payload_context(e);
                if (c != s.context) bad_event(e, "task shown in another context");
                const bool drawn = e.payload.at("drawn").get<bool>();
                const bool expects_draw = prev == EventKind::SessionStart || prev == EventKind::SubtaskEntered ||
                                          prev == EventKind::NewParamsDrawn;
                if (drawn != expects_draw) bad_event(e, drawn ? "unexpected draw" : "missing draw");
                TaskInstance task = instance_from_json(e.payload.at("task"));
                if (c == Context::Main) {
                    if (task.kind != main_kind(s.topic)) bad_event(e, "main task of the wrong kind");
                    if (!drawn && task != s.main_instance) bad_event(e, "redisplayed task differs from the main task");
                    s.main_instance = std::move(task);
                } else {
                    if (!drawn) bad_event(e, "subtasks are always drawn");
                    s.subtask = std::move(task);
                }
                if (drawn) ++s.draws;
                break;
            }
            case EventKind::AnswerSubmitted: {
                if (!allowed.can_submit) bad_event(e, "submission not allowed");
                if (payload_context(e) != s.context) bad_event(e, "answer submitted in another context");
                const auto v = payload_value(e);
                if (v && !std::isfinite(*v)) bad_event(e, "non-finite answer");
                if (e.payload.contains("truth")) (void)ground_truth_from_json(e.payload["truth"]);
                (s.context == Context::Main ? s.last_main_input : s.last_subtask_input) = v;
                break;
            }
            case EventKind::FeedbackGiven: {
                if (prev != EventKind::AnswerSubmitted) bad_event(e, "feedback without an answer");
                if (payload_context(e) != s.context) bad_event(e, "feedback in another context");
                Diagnosis d = diagnosis_from_json(e.payload.at("diagnosis"));
                if (s.context == Context::Main) {
                    if (d.cls == DiagnosisClass::Correct) s.main_solved = true;
                    s.last_main_diagnosis = std::move(d);
                } else {
                    s.last_subtask_diagnosis = std::move(d);
                }
                break;
            }
            case EventKind::SubtaskEntered:
                if (!allowed.can_subtask) bad_event(e, "subtask not allowed");
                s.context = Context::Subtask;
                s.subtask_visited = true;
                s.last_subtask_input.reset();
                s.last_subtask_diagnosis.reset();
                break;
            case EventKind::ReturnedToMain:
                if (!allowed.can_return_to_main) bad_event(e, "not in a subtask");
                s.context = Context::Main;
                s.subtask.reset();
                s.last_subtask_input.reset();
                s.last_subtask_diagnosis.reset();
                s.we_main_unlocked = true;
                break;
            case EventKind::WEViewed:
                if (!allowed.can_view_we) bad_event(e, "worked example not available");
                if (payload_context(e) != s.context) bad_event(e, "worked example in another context");
                break;
            case EventKind::DIViewed:
                if (!allowed.can_view_di) bad_event(e, "instruction not available");
                s.di_used = true;
                break;
            case EventKind::NewParamsDrawn: {
                if (s.context != Context::Main) bad_event(e, "new parameters outside the main task");
                const bool after_we = prev == EventKind::WEViewed;
                if (!after_we && !allowed.can_new_task) bad_event(e, "new task not allowed");
                s.last_main_input.reset();
                s.last_main_diagnosis.reset();
                s.main_solved = false;
                break;
            }
            case EventKind::CannotContinue:
                if (payload_context(e) != s.context) bad_event(e, "stuck in another context");
                break;
            case EventKind::SessionEnd:
                s.closed = true;
                break;
        }
    } catch (const nlohmann::json::exception& ex) {
        bad_event(e, std::string("malformed payload: ") + ex.what());
    }
    s.log.push_back(e);
}

const TaskInstance& Session::current_task() const {
    if (state_.context == Context::Subtask && state_.subtask) return *state_.subtask;
    return *state_.main_instance;
}

TaskInstance Session::draw_task(TaskKind kind, const std::optional<ParamSet>& exclude) const {
    if (!banks_) throw Error("session was replayed without parameter banks");
    Rng rng(mix_seed(state_.seed, state_.draws));
    return instantiate(kind, draw(banks_->at(kind), exclude, rng));
}

void Session::reject(const std::string& what) const { throw ActionRejected(what, actions()); }

void Session::emit(EventKind kind, nlohmann::json payload) {
    Event e;
    e.seq = state_.log.size() + 1;
    e.kind = kind;
    e.payload = std::move(payload);
    e.timestamp = clock_();
    apply(state_, e);
}

Session Session::start(std::string session_id, Topic topic, std::shared_ptr<const BankSet> banks,
                       std::uint64_t seed, WallClock clock, const RuleCatalog* rules) {
    if (!banks) throw InvalidInput("session needs parameter banks");
    Session s(std::move(banks), std::move(clock), rules);
    s.emit(EventKind::SessionStart,
           {{"sessionId", std::move(session_id)}, {"topic", to_string(topic)}, {"seed", seed},
            {"introVideo", intro_video(topic)}});
    const TaskInstance first = s.draw_task(main_kind(topic), std::nullopt);
    s.emit(EventKind::TaskShown, {{"context", "Main"}, {"task", to_json(first)}, {"drawn", true}});
    return s;
}

Session Session::replay(const std::vector<Event>& log, std::shared_ptr<const BankSet> banks, WallClock clock,
                        const RuleCatalog* rules) {
    if (log.empty()) throw InvalidInput("empty session log");
    Session s(std::move(banks), std::move(clock), rules);
    for (const auto& e : log) apply(s.state_, e);
    switch (log.back().kind) {
        case EventKind::SessionStart:
        case EventKind::AnswerSubmitted:
        case EventKind::SubtaskEntered:
        case EventKind::ReturnedToMain:
        case EventKind::NewParamsDrawn:
            throw InvalidInput("log ends inside a command at event " + std::to_string(log.back().seq));
        default:
            break;
    }
    if (const auto broken = check_invariants(s.state_); !broken.empty())
        throw InvalidInput("log ends in an inconsistent state: " + broken);
    return s;
}

SubmitResult Session::submit(std::optional<double> value, std::optional<GroundTruth> truth) {
    if (!actions().can_submit) reject("session is closed");
    if (value && !std::isfinite(*value)) throw InvalidInput("answer must be a finite number");
    const TaskInstance& task = current_task();
    SubmitResult r;
    r.diagnosis = diagnose(task, value);
    r.feedback = feedback_for(r.diagnosis, feedback_context(state_.context), task, *rules_);

    nlohmann::json answer = {{"context", to_string(state_.context)},
                             {"value", value ? nlohmann::json(*value) : nlohmann::json(nullptr)}};
    if (truth) answer["truth"] = to_json(*truth);
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : r.feedback) messages.push_back(to_json(m));

    const SessionState before = state_;
    try {
        emit(EventKind::AnswerSubmitted, std::move(answer));
        emit(EventKind::FeedbackGiven, {{"context", to_string(state_.context)},
                                        {"diagnosis", to_json(r.diagnosis)},
                                        {"feedback", messages}});
    } catch (...) {
        state_ = before;
        throw;
    }
    r.actions = actions();
    return r;
}

TaskInstance Session::choose_subtask() {
    if (!actions().can_subtask) reject("subtasks are offered only on an unsolved main task");
    const Diagnosis diag = state_.last_main_diagnosis.value_or(Diagnosis{});
    const auto kind = route_subtask(diag, state_.main_instance->kind);
    // unreachable while the main task is unsolved; kept as a guard
    if (!kind) reject("no subtask for a correct answer");
    const TaskInstance task = draw_task(*kind, std::nullopt);
    const SessionState before = state_;
    try {
        emit(EventKind::SubtaskEntered, {{"kind", to_string(*kind)}, {"basis", to_string(diag.cls)}});
        emit(EventKind::TaskShown, {{"context", "Subtask"}, {"task", to_json(task)}, {"drawn", true}});
    } catch (...) {
        state_ = before;
        throw;
    }
    return task;
}

TaskInstance Session::return_to_main() {
    if (!actions().can_return_to_main) reject("not in a subtask");
    const SessionState before = state_;
    try {
        emit(EventKind::ReturnedToMain, nlohmann::json::object());
        emit(EventKind::TaskShown, {{"context", "Main"}, {"task", to_json(*state_.main_instance)}, {"drawn", false}});
    } catch (...) {
        state_ = before;
        throw;
    }
    return *state_.main_instance;
}

InstructionAsset Session::view_instruction() {
    const ActionSet a = actions();
    if (!a.can_view_di) {
        if (state_.di_used) reject("direct instruction was already viewed");
        reject("direct instruction is available only on the main task");
    }
    InstructionAsset asset{instruction_video(state_.topic)};
    emit(EventKind::DIViewed, {{"asset", asset.uri}});
    return asset;
}

WorkedExampleResult Session::view_worked_example() {
    if (!actions().can_view_we) reject("worked example on the main task unlocks after a subtask");
    const TaskInstance& task = current_task();
    WorkedExampleResult r{worked_example(task), std::nullopt};
    const bool main = state_.context == Context::Main;
    if (main) r.next_task = draw_task(task.kind, task.params);

    const SessionState before = state_;
    try {
        emit(EventKind::WEViewed, {{"context", to_string(state_.context)}, {"example", to_json(r.example)}});
        if (main) {
            emit(EventKind::NewParamsDrawn, {{"reason", "worked-example"}});
            emit(EventKind::TaskShown, {{"context", "Main"}, {"task", to_json(*r.next_task)}, {"drawn", true}});
        }
    } catch (...) {
        state_ = before;
        throw;
    }
    return r;
}

void Session::declare_stuck() {
    if (state_.closed) reject("session is closed");
    emit(EventKind::CannotContinue, {{"context", to_string(state_.context)}});
}

TaskInstance Session::new_task() {
    if (!actions().can_new_task) reject("a new task is offered after the main task is solved");
    const TaskInstance task = draw_task(state_.main_instance->kind, state_.main_instance->params);
    const SessionState before = state_;
    try {
        emit(EventKind::NewParamsDrawn, {{"reason", "new-task"}});
        emit(EventKind::TaskShown, {{"context", "Main"}, {"task", to_json(task)}, {"drawn", true}});
    } catch (...) {
        state_ = before;
        throw;
    }
    return task;
}

void Session::close() {
    if (state_.closed) reject("session is closed");
    emit(EventKind::SessionEnd, nlohmann::json::object());
}

}  // namespace itf
