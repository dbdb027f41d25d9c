#include "itf/service.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <httplib.h>

#include "itf/analytics.hpp"

namespace itf {

namespace {

nlohmann::json error_body(std::string_view code, const std::string& message) {
    return {{"code", code}, {"message", message}};
}

nlohmann::json envelope(std::string_view kind, const std::string& id, const nlohmann::json& payload) {
    return {
        {"sessionId", id.empty() ? nlohmann::json(nullptr) : nlohmann::json(id)},
        {"requestKind", kind},
        {"payload", payload},
        {"task", nullptr},
        {"context", nullptr},
        {"feedback", nlohmann::json::array()},
        {"actions", to_json(ActionSet{})},
        {"error", nullptr},
    };
}

void describe(nlohmann::json& body, const Session& s) {
    body["task"] = to_json(s.current_task());
    body["context"] = to_string(s.state().context);
    body["actions"] = to_json(s.actions());
    if (s.state().closed) body["task"] = nullptr;
}

std::uint64_t id_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 's') return 0;
    std::uint64_t n = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return 0;
        n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
    }
    return n;
}

std::optional<double> parse_value(const nlohmann::json& payload) {
    if (!payload.is_object()) throw InvalidInput("submit payload must be an object");
    const auto it = payload.find("value");
    if (it == payload.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw InvalidInput("value must be a number or null");
    return it->get<double>();
}

}  // namespace

Service::Service(std::shared_ptr<const BankSet> banks, std::optional<std::filesystem::path> logs_dir,
                 std::uint64_t seed, WallClock clock)
    : banks_(std::move(banks)), seed_(seed), clock_(std::move(clock)) {
    if (!banks_) throw InvalidInput("service needs parameter banks");
    for (TaskKind k : kAllKinds)
        if (!banks_->has(k)) throw NotFound("no parameter bank for " + std::string(to_string(k)));
    if (logs_dir) {
        store_.emplace(*logs_dir);
        std::uint64_t last = 0;
        for (const auto& id : store_->list()) last = std::max(last, id_number(id));
        next_id_ = last + 1;
    }
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) {
    {
        std::shared_lock lk(map_mu_);
        const auto it = sessions_.find(id);
        if (it != sessions_.end()) return it->second;
    }
    if (!store_ || !store_->exists(id)) throw NotFound("unknown session '" + id + "'");
    std::unique_lock lk(map_mu_);
    auto& slot = sessions_[id];
    if (!slot) {
        auto entry = std::make_shared<Entry>();
        entry->session.emplace(Session::replay(store_->load(id), banks_, clock_));
        slot = entry;
    }
    return slot;
}

template <class F>
Response Service::command(const std::string& id, std::string_view kind, const nlohmann::json& payload, F&& op) {
    Response r{200, envelope(kind, id, payload)};
    try {
        const auto entry = find(id);
        std::lock_guard lk(entry->mu);
        Session& s = *entry->session;
        const Session backup = s;
        try {
            op(s, r.body);
        } catch (const ActionRejected& e) {
            describe(r.body, s);
            r.body["actions"] = to_json(e.allowed());
            r.body["error"] = error_body("conflict", e.what());
            r.status = 409;
            return r;
        }
        if (store_) {
            try {
                store_->append(id, {s.log().begin() + static_cast<std::ptrdiff_t>(backup.log().size()),
                                    s.log().end()});
            } catch (...) {
                s = backup;
                throw;
            }
        }
        describe(r.body, s);
    } catch (const NotFound& e) {
        r.status = 404;
        r.body["error"] = error_body("not-found", e.what());
    } catch (const InvalidInput& e) {
        r.status = 400;
        r.body["error"] = error_body("bad-request", e.what());
    } catch (const std::exception& e) {
        r.status = 500;
        r.body["error"] = error_body("internal", e.what());
    }
    return r;
}

Response Service::create_session(const nlohmann::json& payload) {
    Response r{200, envelope("create-session", "", payload)};
    try {
        if (!payload.is_object() || !payload.contains("topic") || !payload["topic"].is_string())
            throw InvalidInput("create-session needs a topic");
        const Topic topic = parse_topic(payload["topic"].get<std::string>());
        const std::uint64_t n = next_id_++;
        const std::string id = fmt::format("s{:06}", n);
        auto entry = std::make_shared<Entry>();
        entry->session.emplace(Session::start(id, topic, banks_, mix_seed(seed_, n), clock_));
        if (store_) store_->append(id, entry->session->log());
        {
            std::unique_lock lk(map_mu_);
            sessions_[id] = entry;
        }
        r.body["sessionId"] = id;
        describe(r.body, *entry->session);
        r.body["introVideo"] = entry->session->log().front().payload["introVideo"];
    } catch (const InvalidInput& e) {
        r.status = 400;
        r.body["error"] = error_body("bad-request", e.what());
    } catch (const std::exception& e) {
        r.status = 500;
        r.body["error"] = error_body("internal", e.what());
    }
    return r;
}

Response Service::submit(const std::string& id, const nlohmann::json& payload) {
    return command(id, "submit-answer", payload, [&](Session& s, nlohmann::json& body) {
        const auto value = parse_value(payload);
        const auto result = s.submit(value);
        for (const auto& m : result.feedback) body["feedback"].push_back(to_json(m));
        body["diagnosis"] = to_json(result.diagnosis);
    });
}

Response Service::choose_subtask(const std::string& id) {
    return command(id, "choose-subtask", nlohmann::json::object(),
                   [](Session& s, nlohmann::json&) { s.choose_subtask(); });
}

Response Service::return_to_main(const std::string& id) {
    return command(id, "return-to-main", nlohmann::json::object(),
                   [](Session& s, nlohmann::json&) { s.return_to_main(); });
}

Response Service::view_instruction(const std::string& id) {
    return command(id, "view-instruction", nlohmann::json::object(), [](Session& s, nlohmann::json& body) {
        body["asset"] = s.view_instruction().uri;
        body["feedback"].push_back({{"type", "DI"}, {"specificity", "Low"}, {"text", "Watch the instruction video."}});
    });
}

Response Service::view_worked_example(const std::string& id) {
    return command(id, "view-worked-example", nlohmann::json::object(), [](Session& s, nlohmann::json& body) {
        const auto r = s.view_worked_example();
        body["workedExample"] = to_json(r.example);
        body["feedback"].push_back({{"type", "WE"}, {"specificity", "High"},
                                    {"text", fmt::format("{}", fmt::join(r.example.steps, "\n"))}});
    });
}

Response Service::declare_stuck(const std::string& id) {
    return command(id, "declare-stuck", nlohmann::json::object(),
                   [](Session& s, nlohmann::json&) { s.declare_stuck(); });
}

Response Service::new_task(const std::string& id) {
    return command(id, "new-task", nlohmann::json::object(), [](Session& s, nlohmann::json&) { s.new_task(); });
}

Response Service::close_session(const std::string& id) {
    return command(id, "close-session", nlohmann::json::object(), [](Session& s, nlohmann::json&) { s.close(); });
}

Response Service::get_session(const std::string& id) {
    return command(id, "get-session", nlohmann::json::object(), [](Session&, nlohmann::json&) {});
}

Response Service::get_log(const std::string& id) {
    return command(id, "get-log", nlohmann::json::object(), [](Session& s, nlohmann::json& body) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : s.log()) events.push_back(to_json(e));
        body["events"] = std::move(events);
    });
}

Response Service::get_units(const std::string& id) {
    return command(id, "get-units", nlohmann::json::object(), [](Session& s, nlohmann::json& body) {
        const auto coded = code_log(s.log());
        nlohmann::json units = nlohmann::json::array();
        for (const auto& u : coded.units) units.push_back(to_json(u));
        body["units"] = std::move(units);
        body["dropped"] = coded.dropped;
        body["matrix"] = to_json(transition_matrix(coded.units));
    });
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    nlohmann::json payload = nlohmann::json::object();
    if (!body.empty()) {
        try {
            payload = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            Response r{400, envelope("unknown", "", nullptr)};
            r.body["error"] = error_body("bad-request", std::string("malformed JSON: ") + e.what());
            return r;
        }
    }

    std::vector<std::string> parts;
    for (std::size_t pos = 0; pos < path.size();) {
        const auto slash = path.find('/', pos);
        const auto end = slash == std::string::npos ? path.size() : slash;
        if (end > pos) parts.push_back(path.substr(pos, end - pos));
        pos = end + 1;
    }

    auto unknown = [&]() {
        Response r{404, envelope("unknown", "", payload)};
        r.body["error"] = error_body("not-found", fmt::format("no route {} {}", method, path));
        return r;
    };
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) return unknown();
    if (parts.size() == 1) return method == "POST" ? create_session(payload) : unknown();

    const std::string& id = parts[1];
    if (parts.size() == 2) return method == "GET" ? get_session(id) : unknown();
    const std::string& verb = parts[2];
    if (method == "GET") {
        if (verb == "log") return get_log(id);
        if (verb == "units") return get_units(id);
        return unknown();
    }
    if (method != "POST") return unknown();
    if (verb == "submit") return submit(id, payload);
    if (verb == "subtask") return choose_subtask(id);
    if (verb == "return") return return_to_main(id);
    if (verb == "instruction") return view_instruction(id);
    if (verb == "worked-example") return view_worked_example(id);
    if (verb == "stuck") return declare_stuck(id);
    if (verb == "new-task") return new_task(id);
    if (verb == "close") return close_session(id);
    return unknown();
}

void mount(httplib::Server& server, Service& service) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(R"(/sessions.*)", handler);
    server.Post(R"(/sessions.*)", handler);
    server.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

}  // namespace itf
