#include "itf/analytics.hpp"

#include <cmath>

#include <fmt/format.h>

namespace itf {

namespace {

constexpr std::string_view kStartNames[] = {"KR", "ES", "mES", "WE", "ST", "DI"};
constexpr std::string_view kEndNames[] = {"IM", "nIM", "WE", "ST", "DI", "nCON"};

// row and column headings of the printed matrix
constexpr std::string_view kStartLabels[] = {
    "Only knowledge of results", "Error-specific feedback", "Misdiagnosis",
    "Worked example",            "Subtask",                 "Direct instruction",
};
constexpr std::string_view kEndLabels[] = {"Improvement", "Non-improvement", "Worked example",
                                           "Subtask",     "Direct instruction", "Unable to continue"};

struct OpenUnit {
    StartCode code;
    std::uint64_t first_seq;
    bool unknowable;
    std::optional<double> base_input;
    TaskInstance base_instance;
};

class Coder {
public:
    CodedLog run(const std::vector<Event>& log) {
        for (const auto& e : log) step(e);
        if (open_) drop();
        return std::move(out_);
    }

private:
    std::optional<double>& last_input() { return context_ == Context::Main ? main_input_ : subtask_input_; }
    const TaskInstance& current() const { return context_ == Context::Main ? *main_ : *subtask_; }

    void open(StartCode code, std::uint64_t seq, std::optional<double> base, const TaskInstance& inst,
              bool unknowable = false) {
        open_ = OpenUnit{code, seq, unknowable, base, inst};
    }

    void close(EndCode end, std::uint64_t seq) {
        if (!open_) return;
        out_.units.push_back({open_->code, end, open_->first_seq, seq, open_->unknowable});
        open_.reset();
    }

    void drop() {
        open_.reset();
        ++out_.dropped;
    }

    void step(const Event& e) {
        switch (e.kind) {
            case EventKind::TaskShown: {
                TaskInstance t = instance_from_json(e.payload.at("task"));
                const bool drawn = e.payload.at("drawn").get<bool>();
                if (context_ == Context::Main) {
                    if (drawn) main_input_.reset();
                    main_ = std::move(t);
                } else {
                    subtask_input_.reset();
                    subtask_ = std::move(t);
                }
                break;
            }
            case EventKind::AnswerSubmitted: {
                std::optional<double> v;
                if (!e.payload["value"].is_null()) v = e.payload["value"].get<double>();
                if (open_)
                    close(improved(open_->base_input, open_->base_instance, v, current()) ? EndCode::IM
                                                                                          : EndCode::nIM,
                          e.seq);
                if (v) last_input() = v;
                truth_.reset();
                if (e.payload.contains("truth")) truth_ = ground_truth_from_json(e.payload["truth"]);
                break;
            }
            case EventKind::FeedbackGiven: {
                const Diagnosis d = diagnosis_from_json(e.payload.at("diagnosis"));
                switch (d.cls) {
                    case DiagnosisClass::Correct:
                        break;
                    case DiagnosisClass::Buggy:
                        if (truth_ && truth_->rules != d.chain) {
                            open(StartCode::mES, e.seq, last_input(), current());
                            ++out_.misdiagnoses;
                        } else {
                            open(StartCode::ES, e.seq, last_input(), current(), !truth_);
                        }
                        break;
                    case DiagnosisClass::Undetectable:
                    case DiagnosisClass::NoInput:
                        open(StartCode::KR, e.seq, last_input(), current());
                        break;
                }
                break;
            }
            case EventKind::SubtaskEntered:
                close(EndCode::ST, e.seq);
                context_ = Context::Subtask;
                break;
            case EventKind::ReturnedToMain:
                if (open_) drop();
                context_ = Context::Main;
                subtask_.reset();
                open(StartCode::ST, e.seq, main_input_, *main_);
                break;
            case EventKind::WEViewed:
                close(EndCode::WE, e.seq);
                open(StartCode::WE, e.seq, last_input(), current());
                break;
            case EventKind::DIViewed:
                close(EndCode::DI, e.seq);
                open(StartCode::DI, e.seq, main_input_, *main_);
                break;
            case EventKind::CannotContinue:
                close(EndCode::nCON, e.seq);
                break;
            case EventKind::SessionStart:
            case EventKind::NewParamsDrawn:
            case EventKind::SessionEnd:
                break;
        }
    }

    CodedLog out_;
    Context context_ = Context::Main;
    std::optional<TaskInstance> main_;
    std::optional<TaskInstance> subtask_;
    std::optional<double> main_input_;
    std::optional<double> subtask_input_;
    std::optional<GroundTruth> truth_;
    std::optional<OpenUnit> open_;
};

}  // namespace

std::string_view to_string(StartCode c) { return kStartNames[static_cast<int>(c)]; }
std::string_view to_string(EndCode c) { return kEndNames[static_cast<int>(c)]; }

StartCode parse_start_code(std::string_view text) {
    for (StartCode c : kAllStartCodes)
        if (to_string(c) == text) return c;
    throw InvalidInput(fmt::format("unknown start code '{}'", text));
}

EndCode parse_end_code(std::string_view text) {
    for (EndCode c : kAllEndCodes)
        if (to_string(c) == text) return c;
    throw InvalidInput(fmt::format("unknown end code '{}'", text));
}

bool improved(std::optional<double> prev, const TaskInstance& prev_instance, std::optional<double> next,
              const TaskInstance& next_instance) {
    if (!next) return false;
    if (!prev) return true;
    return std::abs(*next - correct_answer(next_instance)) < std::abs(*prev - correct_answer(prev_instance));
}

bool improved(std::optional<double> prev, std::optional<double> next, const TaskInstance& instance) {
    return improved(prev, instance, next, instance);
}

CodedLog code_log(const std::vector<Event>& log) {
    (void)Session::replay(log, nullptr);
    try {
        return Coder().run(log);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed event payload: ") + e.what());
    }
}

std::vector<Unit> code_units(const std::vector<Event>& log) { return code_log(log).units; }

TransitionMatrix transition_matrix(const std::vector<Unit>& units) {
    TransitionMatrix m;
    for (const auto& u : units) {
        const int r = static_cast<int>(u.start);
        const int c = static_cast<int>(u.end);
        ++m.counts[r][c];
        ++m.row_totals[r];
        ++m.col_totals[c];
        ++m.total;
    }
    return m;
}

std::string format_matrix(const TransitionMatrix& m) {
    constexpr int label = 28;
    constexpr int cell = 20;
    std::string out = fmt::format("{:<{}}", "Current feedback \\ Next action", label);
    for (auto l : kEndLabels) out += fmt::format("{:>{}}", l, cell);
    out += fmt::format("{:>{}}\n", "Total", 8);
    for (int r = 0; r < 6; ++r) {
        out += fmt::format("{:<{}}", kStartLabels[r], label);
        for (int c = 0; c < 6; ++c) out += fmt::format("{:>{}}", m.counts[r][c], cell);
        out += fmt::format("{:>{}}\n", m.row_totals[r], 8);
    }
    out += fmt::format("{:<{}}", "Total", label);
    for (int c = 0; c < 6; ++c) out += fmt::format("{:>{}}", m.col_totals[c], cell);
    out += fmt::format("{:>{}}\n", m.total, 8);
    return out;
}

nlohmann::json to_json(const TransitionMatrix& m) {
    nlohmann::json rows = nlohmann::json::object();
    for (StartCode s : kAllStartCodes) {
        nlohmann::json row = nlohmann::json::object();
        for (EndCode e : kAllEndCodes) row[std::string(to_string(e))] = m.at(s, e);
        row["total"] = m.row_totals[static_cast<int>(s)];
        rows[std::string(to_string(s))] = row;
    }
    nlohmann::json cols = nlohmann::json::object();
    for (EndCode e : kAllEndCodes) cols[std::string(to_string(e))] = m.col_totals[static_cast<int>(e)];
    return {{"counts", rows}, {"columnTotals", cols}, {"total", m.total}};
}

nlohmann::json to_json(const Unit& u) {
    nlohmann::json j = {{"start", to_string(u.start)},
                        {"end", to_string(u.end)},
                        {"firstSeq", u.first_seq},
                        {"lastSeq", u.last_seq}};
    if (u.mes_unknowable) j["mesUnknowable"] = true;
    return j;
}

}  // namespace itf
