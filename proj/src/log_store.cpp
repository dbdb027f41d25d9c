#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "itf/service.hpp"

namespace itf {

namespace {

bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

}  // namespace

LogStore::LogStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create log directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path LogStore::file(const std::string& session_id) const {
    if (!valid_id(session_id)) throw NotFound("invalid session id '" + session_id + "'");
    return dir_ / (session_id + ".jsonl");
}

void LogStore::append(const std::string& session_id, const std::vector<Event>& events) const {
    if (events.empty()) return;
    std::string buf;
    for (const auto& e : events) {
        buf += to_line(e);
        buf += '\n';
    }
    const auto path = file(session_id);
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
    // one write per command keeps its lines together
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string why = std::strerror(errno);
            ::close(fd);
            throw Error("cannot append to " + path.string() + ": " + why);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::close(fd) != 0) throw Error("cannot close " + path.string() + ": " + std::strerror(errno));
}

std::vector<Event> read_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("no log at " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::vector<Event> events;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail
        if (nl > pos) events.push_back(event_from_line(text.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    return events;
}

std::vector<Event> LogStore::load(const std::string& session_id) const { return read_log_file(file(session_id)); }

bool LogStore::exists(const std::string& session_id) const {
    return valid_id(session_id) && std::filesystem::exists(file(session_id));
}

std::vector<std::string> LogStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir_))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace itf
