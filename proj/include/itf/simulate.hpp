#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include <json.hpp>

#include "itf/session.hpp"

namespace itf {

// What a simulated student does after feedback.
enum class StudentAction { TryAgain, Subtask, WorkedExample, Instruction, Stuck };

struct ActionPolicy {
    std::map<StudentAction, double> weights;
};

// Synthetic student. Buggy-rule propensities are per-attempt probabilities
// of using that rule; the per-stage sums must stay within 1.
struct StudentProfile {
    std::map<RuleId, double> propensities;
    // Weights of the rounding modifiers on traces with a rate step.
    std::map<RoundingMod, double> rounding{{RoundingMod::None, 1.0}};
    // Probability of an answer produced outside the rule catalog.
    double off_model = 0.0;
    double no_input = 0.0;
    // Policy after each non-correct diagnosis class.
    std::map<DiagnosisClass, ActionPolicy> policy;
    // Commands per session before the student stops.
    int max_steps = 40;
};

// Reads a profile document and checks that probabilities lie in [0, 1] and
// that each policy row sums to 1. Throws InvalidInput otherwise.
StudentProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudentProfile& p);

// n session logs from the given seed. Every answer event records the
// computation actually used.
std::vector<std::vector<Event>> simulate(const StudentProfile& profile, Topic topic,
                                         std::shared_ptr<const BankSet> banks, std::size_t n,
                                         std::uint64_t seed);

}  // namespace itf
