#pragma once

#include "onboard/harness/world.hpp"

#include <functional>
#include <string>
#include <vector>

namespace onboard::harness {

struct AttackScript {
    std::string name;
    std::string description;
    Scenario scenario;
    std::vector<ScriptStep> steps;
    /// Rejection the attack must provoke; nullopt for scripts that only
    /// probe divergence (drop-activation).
    std::optional<ErrorCode> expected;

    static AttackScript from_json(std::string_view text);
    static AttackScript load(const std::string& path);
};

/// The built-in library, in a fixed order.
const std::vector<AttackScript>& builtin_scripts();
/// Throws Error(ScenarioInvalid) for an unknown name.
const AttackScript& builtin_script(std::string_view name);

struct AttackReport {
    std::string script;
    std::optional<ErrorCode> expected;
    bool expected_seen = false;
    bool attacker_registered = false;  // any RegistrationSuccess beyond the honest devices
    std::vector<LemmaVerdict> verdicts;
    RunResult run;

    /// Attack defeated: expected rejection seen, nothing registered for the
    /// attacker, all lemmas hold.
    bool defeated() const;
    /// e.g. "rejected: token consumed"
    std::string summary() const;
};

AttackReport run_attack(const AttackScript& script, std::uint64_t seed);

struct CampaignRecord {
    std::uint64_t seed = 0;
    bool authentication = true;
    bool token_integrity = true;
    bool confidentiality = true;
    std::string trace_digest;
    std::size_t rejections = 0;
    std::size_t registered = 0;

    bool clean() const { return authentication && token_integrity && confidentiality; }
    std::string to_json() const;
};

struct CampaignOptions {
    std::size_t runs = 10000;
    std::uint64_t first_seed = 1;
    ActionWeights weights;
    unsigned threads = 1;
    Scenario scenario = Scenario::campaign();
};

struct CampaignSummary {
    std::size_t runs = 0;
    std::size_t violations = 0;
    std::size_t rejections = 0;
    double seconds = 0;
    std::vector<CampaignRecord> records;  // seed order
};

CampaignSummary run_campaign(const CampaignOptions& options,
                             const std::function<void(const CampaignRecord&)>& on_record = {});

struct ExhaustiveOptions {
    std::size_t max_runs = 20000;
    std::size_t max_public_messages = 12;
    std::size_t replay_budget = 1;
    std::int64_t stale_delay = 31;
};

struct ExhaustiveSummary {
    std::size_t runs = 0;
    std::size_t violations = 0;
    bool complete = false;  // every branch explored within max_runs
    std::size_t max_messages_seen = 0;
    std::vector<std::vector<std::size_t>> violating_paths;
};

/// Enumerates every adversary choice sequence over {deliver, drop, tamper,
/// stale-deliver, replay} for a short scenario.
ExhaustiveSummary run_exhaustive(const Scenario& scenario, std::uint64_t seed, const ExhaustiveOptions& options = {});

} // namespace onboard::harness
