#pragma once

#include "onboard/crypto/random.hpp"
#include "onboard/ledger/ledger.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace onboardctl {

using onboard::crypto::Seconds;

struct AccessOverride {
    onboard::ledger::OrgRole role{};
    onboard::ledger::Channel channel{};
    onboard::ledger::ChannelAccess access;
};

/// Operator settings. File format is INI:
///
///   [run]       seed, snapshot, risk_rules
///   [protocol]  totp_step, session_key_ttl, device_key_ttl, provisioning_delay
///   [ledger]    service_rate, max_block_txs, block_interval_ms
///   [access]    <Role>.<channel> = rw | r | r-own | w | -
///
/// Any [run]/[protocol]/[ledger] key can be overridden from the environment
/// as ONBOARD_<SECTION>_<KEY>, e.g. ONBOARD_LEDGER_SERVICE_RATE=150.
struct Config {
    std::uint64_t seed = 1;
    std::string snapshot;
    std::string risk_rules;
    Seconds totp_step = 30;
    Seconds session_key_ttl = 3600;
    Seconds device_key_ttl = 10LL * 365 * 24 * 3600;
    Seconds provisioning_delay = 0;
    onboard::ledger::LedgerConfig ledger;
    std::vector<AccessOverride> access;

    /// Throws onboard::Error(ConfigInvalid).
    void validate() const;
    onboard::ledger::AccessPolicy policy() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Defaults, then the file (when given), then the environment. Unknown
/// sections or keys are rejected. Throws onboard::Error(ConfigInvalid), or
/// std::runtime_error when the file cannot be read.
Config load_config(const std::optional<std::string>& path, const EnvLookup& env = process_env);

} // namespace onboardctl
