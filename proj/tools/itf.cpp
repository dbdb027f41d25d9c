// Command-line entry points: serve, tune, diagnose, analyze, simulate, rules.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "itf/analytics.hpp"
#include "itf/service.hpp"
#include "itf/simulate.hpp"

namespace fs = std::filesystem;
using namespace itf;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

void collect_log(const fs::path& p, std::vector<std::vector<Event>>& logs) {
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(p))
            if (e.path().extension() == ".jsonl") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) logs.push_back(read_log_file(f));
        return;
    }
    logs.push_back(read_log_file(p));
}

int run_serve(const std::string& banks_dir, const std::string& logs_dir, int port, const std::string& host,
              std::optional<std::uint64_t> seed) {
    const auto banks = std::make_shared<const BankSet>(BankSet::load_dir(banks_dir));
    const std::uint64_t s = seed ? *seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
    Service service(banks, fs::path(logs_dir), s);
    httplib::Server server;
    mount(server, service);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    fmt::print(stderr, "serving on {}:{} (seed {}, logs in {})\n", host, port, s, logs_dir);
    if (!server.listen(host, port)) {
        fmt::print(stderr, "cannot listen on {}:{}\n", host, port);
        return 1;
    }
    return 0;
}

std::vector<int> parse_ints(const std::vector<std::string>& items) {
    std::vector<int> out;
    for (const auto& item : items) {
        std::size_t start = 0;
        while (start <= item.size()) {
            const auto comma = item.find(',', start);
            const auto tok = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!tok.empty()) out.push_back(std::stoi(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-specific feedback tutor for extrapolation tasks"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string banks_dir = "banks", logs_dir = "logs", host = "0.0.0.0";
    int port = 8080;
    std::optional<std::uint64_t> serve_seed;
    serve->add_option("--banks", banks_dir, "Directory with <Kind>.json parameter banks")->envname("ITF_BANKS_DIR");
    serve->add_option("--logs", logs_dir, "Directory for session logs")->envname("ITF_LOGS_DIR");
    serve->add_option("--port", port, "Listening port")->envname("ITF_PORT");
    serve->add_option("--host", host, "Listening address")->envname("ITF_HOST");
    serve->add_option("--seed", serve_seed, "Draw seed (random when omitted)");

    auto* tune_cmd = app.add_subcommand("tune", "Generate a parameter bank");
    std::string kind_name, out_file, out_dir;
    bool all_kinds = false;
    std::size_t count = kDefaultBankSize, budget = kDrawBudget;
    std::uint64_t tune_seed = 1;
    double delta = kDefaultDelta;
    auto* kind_opt = tune_cmd->add_option("--kind", kind_name, "Task kind");
    auto* all_opt = tune_cmd->add_flag("--all", all_kinds, "Tune every kind");
    kind_opt->excludes(all_opt);
    tune_cmd->add_option("--count", count, "Entries per bank");
    tune_cmd->add_option("--seed", tune_seed, "Sampling seed");
    tune_cmd->add_option("--delta", delta, "Minimum separation");
    tune_cmd->add_option("--budget", budget, "Maximum candidate draws");
    tune_cmd->add_option("--out", out_file, "Output file (one kind)");
    tune_cmd->add_option("--out-dir", out_dir, "Output directory (<Kind>.json)");

    auto* diag_cmd = app.add_subcommand("diagnose", "Diagnose one answer");
    std::string dkind;
    std::vector<std::string> xs, ys;
    std::optional<double> rate, answer;
    std::string context = "main";
    diag_cmd->add_option("--kind", dkind, "Task kind")->required();
    diag_cmd->add_option("--x", xs, "x values, comma separated")->required();
    diag_cmd->add_option("--y", ys, "known y values, comma separated")->required();
    diag_cmd->add_option("--rate", rate, "Given slope or growth factor");
    diag_cmd->add_option("--answer", answer, "Submitted answer (omit for no input)");
    diag_cmd->add_option("--context", context, "main or subtask")->check(CLI::IsMember({"main", "subtask"}));

    auto* analyze_cmd = app.add_subcommand("analyze", "Code logs into units and print the transition matrix");
    std::vector<std::string> log_paths;
    std::string matrix_out, units_out;
    analyze_cmd->add_option("logs", log_paths, "Log files or directories")->required();
    analyze_cmd->add_option("--out", matrix_out, "Matrix output file (stdout when omitted)");
    analyze_cmd->add_option("--units", units_out, "Also write the coded units as JSON");

    auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic student logs");
    std::string profile_file, sim_topic = "Linear", sim_banks, sim_out = "sim-logs";
    std::size_t sim_n = 100;
    std::uint64_t sim_seed = 1;
    sim_cmd->add_option("--profile", profile_file, "Student profile JSON")->required();
    sim_cmd->add_option("--topic", sim_topic, "Linear or Exponential");
    sim_cmd->add_option("--n", sim_n, "Number of sessions");
    sim_cmd->add_option("--seed", sim_seed, "Simulation seed");
    sim_cmd->add_option("--banks", sim_banks, "Bank directory (tuned with seed 1 when omitted)")->envname("ITF_BANKS_DIR");
    sim_cmd->add_option("--out-dir", sim_out, "Directory for the logs");

    auto* rules_cmd = app.add_subcommand("rules", "Rule catalog");
    auto* export_cmd = rules_cmd->add_subcommand("export", "Print the catalog with feedback templates");
    rules_cmd->require_subcommand(1);
    std::string rules_out;
    export_cmd->add_option("--out", rules_out, "Output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return run_serve(banks_dir, logs_dir, port, host, serve_seed);

        if (*tune_cmd) {
            if (!all_kinds && kind_name.empty()) throw InvalidInput("give --kind or --all");
            std::vector<TaskKind> kinds;
            if (all_kinds) kinds.assign(kAllKinds.begin(), kAllKinds.end());
            else kinds.push_back(parse_kind(kind_name));
            if (kinds.size() > 1 && out_dir.empty()) throw InvalidInput("--all needs --out-dir");
            for (TaskKind k : kinds) {
                const ParamBank bank = tune(k, count, tune_seed, delta, budget);
                fmt::print(stderr, "{}: {} entries, separation {:.4f}, {} draws (acceptance {:.4f})\n", to_string(k),
                           bank.entries.size(), bank.separation, bank.draws, bank.acceptance_rate());
                if (!out_dir.empty()) {
                    fs::create_directories(out_dir);
                    save_bank(bank, fs::path(out_dir) / (std::string(to_string(k)) + ".json"));
                } else if (!out_file.empty()) {
                    save_bank(bank, out_file);
                } else {
                    std::cout << to_json(bank).dump(2) << '\n';
                }
            }
            return 0;
        }

        if (*diag_cmd) {
            const TaskKind k = parse_kind(dkind);
            const auto x = parse_ints(xs);
            const auto y = parse_ints(ys);
            if (x.size() < 2 || y.empty()) throw InvalidInput("need at least two x values and one y value");
            ParamSet p;
            p.x1 = x[0];
            p.x2 = x[1];
            if (x.size() > 2) p.x3 = x[2];
            p.y1 = y[0];
            if (y.size() > 1) p.y2 = y[1];
            p.given_rate = rate;
            const TaskInstance inst = instantiate(k, p);
            const Diagnosis d = diagnose(inst, answer);
            const auto ctx = context == "main" ? FeedbackContext::MainTask : FeedbackContext::Subtask;
            nlohmann::json out = {{"task", to_json(inst)}, {"diagnosis", to_json(d)}, {"feedback", nlohmann::json::array()}};
            for (const auto& m : feedback_for(d, ctx, inst)) out["feedback"].push_back(to_json(m));
            if (is_main(k)) {
                const auto route = route_subtask(d, k);
                out["subtask"] = route ? nlohmann::json(to_string(*route)) : nlohmann::json(nullptr);
            }
            std::cout << out.dump(2) << '\n';
            return 0;
        }

        if (*analyze_cmd) {
            std::vector<std::vector<Event>> logs;
            for (const auto& p : log_paths) collect_log(p, logs);
            std::vector<Unit> units;
            std::size_t dropped = 0, unknowable = 0;
            nlohmann::json per_log = nlohmann::json::array();
            for (const auto& log : logs) {
                const auto coded = code_log(log);
                units.insert(units.end(), coded.units.begin(), coded.units.end());
                dropped += coded.dropped;
                nlohmann::json js = nlohmann::json::array();
                for (const auto& u : coded.units) {
                    unknowable += u.mes_unknowable;
                    js.push_back(to_json(u));
                }
                per_log.push_back({{"sessionId", log.front().payload["sessionId"]}, {"units", js}});
            }
            write_text(matrix_out, format_matrix(transition_matrix(units)));
            fmt::print(stderr, "{} logs, {} units, {} dropped, {} ES units without ground truth\n", logs.size(),
                       units.size(), dropped, unknowable);
            if (!units_out.empty()) write_text(units_out, per_log.dump(2) + "\n");
            return 0;
        }

        if (*sim_cmd) {
            std::ifstream in(profile_file);
            if (!in) throw NotFound("no profile at " + profile_file);
            nlohmann::json pj;
            try {
                in >> pj;
            } catch (const nlohmann::json::exception& e) {
                throw InvalidInput(std::string("unreadable profile: ") + e.what());
            }
            const StudentProfile profile = profile_from_json(pj);
            std::shared_ptr<BankSet> banks = std::make_shared<BankSet>();
            if (!sim_banks.empty()) {
                *banks = BankSet::load_dir(sim_banks);
            } else {
                for (TaskKind k : kAllKinds) banks->add(tune(k, kDefaultBankSize, 1));
            }
            const auto logs = simulate(profile, parse_topic(sim_topic), banks, sim_n, sim_seed);
            fs::create_directories(sim_out);
            for (const auto& log : logs) {
                std::ofstream out(fs::path(sim_out) / (log.front().payload["sessionId"].get<std::string>() + ".jsonl"));
                for (const auto& e : log) out << to_line(e) << '\n';
                if (!out) throw Error("cannot write logs to " + sim_out);
            }
            fmt::print(stderr, "wrote {} logs to {}\n", logs.size(), sim_out);
            return 0;
        }

        if (*export_cmd) {
            write_text(rules_out, RuleCatalog::builtin().to_json().dump(2) + "\n");
            return 0;
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
