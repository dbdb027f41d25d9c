#pragma once

// Random command walks over the session state machine. Each walk tries
// commands at random, legal or not, and checks the gating, the invariants
// and replay.

#include <random>
#include <string>

#include "itf/session.hpp"

namespace support {

struct WalkReport {
    std::size_t walks = 0;
    std::size_t commands = 0;
    std::size_t rejected = 0;
    std::size_t violations = 0;
    std::string first_violation;

    void fail(const std::string& what) {
        if (violations++ == 0) first_violation = what;
    }
};

inline WalkReport random_walks(std::size_t n, std::uint64_t seed, std::shared_ptr<const itf::BankSet> banks) {
    using namespace itf;
    WalkReport rep;
    std::mt19937_64 rng(seed);
    for (std::size_t walk = 0; walk < n; ++walk) {
        ++rep.walks;
        const Topic topic = walk % 2 ? Topic::Linear : Topic::Exponential;
        std::int64_t t = 0;
        auto s = Session::start("walk", topic, banks, rng(), [&t] { return ++t; });
        const int steps = 5 + static_cast<int>(rng() % 30);
        for (int i = 0; i < steps; ++i) {
            const ActionSet a = s.actions();
            const auto before = s.state();
            bool allowed = true;
            ++rep.commands;
            try {
                switch (rng() % 9) {
                    case 0:
                    case 1: {
                        const auto traces = enumerate_traces(s.current_task());
                        const auto pick = rng() % (traces.size() + 2);
                        std::optional<double> v;
                        if (pick < traces.size()) v = traces[pick].value;
                        else if (pick == traces.size()) v = static_cast<double>(rng() % 1000) / 7.0;
                        allowed = a.can_submit;
                        s.submit(v);
                        break;
                    }
                    case 2: allowed = a.can_subtask; s.choose_subtask(); break;
                    case 3: allowed = a.can_return_to_main; s.return_to_main(); break;
                    case 4: allowed = a.can_view_di; s.view_instruction(); break;
                    case 5: allowed = a.can_view_we; s.view_worked_example(); break;
                    case 6: allowed = a.can_new_task; s.new_task(); break;
                    case 7: allowed = a.can_submit; s.declare_stuck(); break;
                    default:
                        if (rng() % 10 == 0) {
                            allowed = a.can_submit;
                            s.close();
                        }
                        break;
                }
                if (!allowed) rep.fail("command accepted although not offered");
            } catch (const ActionRejected&) {
                ++rep.rejected;
                if (allowed) rep.fail("offered command rejected");
                if (!(s.state() == before)) rep.fail("rejected command changed the state");
            }
            if (const auto broken = check_invariants(s.state()); !broken.empty()) rep.fail(broken);
        }

        // gating read back from the log alone
        int di = 0;
        bool returned = false;
        Context ctx = Context::Main;
        for (const auto& e : s.log()) {
            if (e.kind == EventKind::DIViewed) {
                ++di;
                if (ctx != Context::Main) rep.fail("instruction viewed in a subtask");
            }
            if (e.kind == EventKind::SubtaskEntered) ctx = Context::Subtask;
            if (e.kind == EventKind::ReturnedToMain) {
                ctx = Context::Main;
                returned = true;
            }
            if (e.kind == EventKind::WEViewed && e.payload["context"] == "Main" && !returned)
                rep.fail("main worked example before any subtask");
        }
        if (di > 1) rep.fail("instruction viewed twice");
        try {
            if (!(Session::replay(s.log(), banks).state() == s.state())) rep.fail("replay differs");
        } catch (const std::exception& e) {
            rep.fail(std::string("replay failed: ") + e.what());
        }
    }
    return rep;
}

}  // namespace support
