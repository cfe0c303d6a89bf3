#pragma once

#include "onboard/crypto/random.hpp"
#include "onboard/ledger/ledger.hpp"
#include "onboard/risk/engine.hpp"
#include "onboard/wire/message.hpp"

#include <string>
#include <vector>

namespace onboard::harness {

struct DeviceSpec {
    std::string name;
    std::uint32_t authenticator = 0;
    std::string manufacturer = "acme";
    bool wrong_link_key = false;
    int retries = 0;
    std::vector<wire::Reading> readings;
    bool revoke = false;
    std::vector<wire::Reading> readings_after_revoke;
};

struct Scenario {
    std::string name = "custom";
    std::uint32_t authenticators = 1;
    std::vector<DeviceSpec> devices;
    crypto::Timestamp start = 1'700'000'010;  // aligned to a 30 s step
    crypto::Seconds totp_step = 30;
    crypto::Seconds session_key_ttl = 3600;
    crypto::Seconds device_key_ttl = 10LL * 365 * 24 * 3600;
    crypto::Seconds provisioning_delay = 0;  // device-side wait before registering
    ledger::LedgerConfig ledger;
    ledger::AccessPolicy access = ledger::AccessPolicy::defaults();
    risk::RuleSet rules = risk::RuleSet::defaults();
    std::size_t max_steps = 600;

    /// Throws Error(ScenarioInvalid).
    void validate() const;

    /// One device through registration only.
    static Scenario honest(std::size_t devices = 1);
    /// Onboard, report (one normal, one alerting reading), revoke, report again.
    static Scenario demo();
    /// Two devices with readings, one revoked: the campaign workload.
    static Scenario campaign();

    static Scenario from_json(std::string_view text);
    static Scenario load(const std::string& path);
};

} // namespace onboard::harness
