#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "itf/session.hpp"

namespace httplib {
class Server;
}

namespace itf {

// One append-only file of event lines per session.
class LogStore {
public:
    explicit LogStore(std::filesystem::path dir);

    // Appends each event as one line with a single write. Throws Error on
    // storage failure.
    void append(const std::string& session_id, const std::vector<Event>& events) const;
    // Throws NotFound when there is no log. An unterminated last line, left
    // by an interrupted write, is ignored.
    std::vector<Event> load(const std::string& session_id) const;
    bool exists(const std::string& session_id) const;
    std::vector<std::string> list() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path file(const std::string& session_id) const;
    std::filesystem::path dir_;
};

std::vector<Event> read_log_file(const std::filesystem::path& file);

struct Response {
    int status = 200;
    nlohmann::json body;
};

// The wire API without a transport. Every response is an envelope with
// sessionId, requestKind, payload, task, context, feedback, actions and
// error; some kinds add diagnosis, workedExample, asset or events.
class Service {
public:
    Service(std::shared_ptr<const BankSet> banks, std::optional<std::filesystem::path> logs_dir,
            std::uint64_t seed, WallClock clock = system_clock_ms);

    std::uint64_t seed() const { return seed_; }

    Response create_session(const nlohmann::json& payload);
    Response submit(const std::string& id, const nlohmann::json& payload);
    Response choose_subtask(const std::string& id);
    Response return_to_main(const std::string& id);
    Response view_instruction(const std::string& id);
    Response view_worked_example(const std::string& id);
    Response declare_stuck(const std::string& id);
    Response new_task(const std::string& id);
    Response close_session(const std::string& id);
    Response get_session(const std::string& id);
    Response get_log(const std::string& id);
    Response get_units(const std::string& id);

    // Routes a request such as ("POST", "/sessions/s000001/submit", "{...}").
    Response handle(const std::string& method, const std::string& path, const std::string& body);

private:
    struct Entry {
        std::mutex mu;
        std::optional<Session> session;
    };

    std::shared_ptr<Entry> find(const std::string& id);
    template <class F>
    Response command(const std::string& id, std::string_view kind, const nlohmann::json& payload, F&& op);

    std::shared_ptr<const BankSet> banks_;
    std::optional<LogStore> store_;
    std::uint64_t seed_;
    WallClock clock_;
    std::atomic<std::uint64_t> next_id_{1};
    std::shared_mutex map_mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

// Registers the routes of `service` on an HTTP server.
void mount(httplib::Server& server, Service& service);

}  // namespace itf
