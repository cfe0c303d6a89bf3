#include "onboard/harness/scenario.hpp"

#include "onboard/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace onboard::harness {

namespace {

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::ScenarioInvalid, "scenario: " + why); }

wire::Reading reading(std::string metric, double value, std::string unit, std::string maker = "acme") {
    return {std::move(metric), value, std::move(unit), std::move(maker)};
}

std::vector<wire::Reading> parse_readings(const nlohmann::json& arr, const std::string& maker) {
    std::vector<wire::Reading> out;
    for (const auto& r : arr)
        out.push_back(reading(r.at("metric").get<std::string>(), r.at("value").get<double>(), r.value("unit", ""),
                              maker));
    return out;
}

DeviceSpec named(std::string name) {
    DeviceSpec d;
    d.name = std::move(name);
    return d;
}

} // namespace

void Scenario::validate() const {
    if (authenticators == 0) invalid("needs at least one authenticator");
    if (devices.empty()) invalid("needs at least one device");
    if (totp_step <= 0) invalid("totp_step must be positive");
    if (session_key_ttl <= 0) invalid("session_key_ttl must be positive");
    if (device_key_ttl <= 0) invalid("device_key_ttl must be positive");
    if (provisioning_delay < 0) invalid("provisioning_delay must not be negative");
    if (ledger.max_block_txs == 0 || ledger.block_interval_ms == 0 || !(ledger.service_rate > 0))
        invalid("ledger parameters must be positive");
    if (max_steps == 0) invalid("max_steps must be positive");
    std::set<std::string> names;
    for (const auto& d : devices) {
        if (d.name.empty()) invalid("device without a name");
        if (!names.insert(d.name).second) invalid("duplicate device name '" + d.name + "'");
        if (d.authenticator >= authenticators) invalid("device '" + d.name + "' names a missing authenticator");
        if (d.retries < 0) invalid("retries must not be negative");
        if (!d.revoke && !d.readings_after_revoke.empty())
            invalid("device '" + d.name + "' reports after a revocation that never happens");
    }
}

Scenario Scenario::honest(std::size_t n) {
    Scenario s;
    s.name = "honest";
    for (std::size_t i = 0; i < n; ++i) s.devices.push_back(named("device#" + std::to_string(i)));
    return s;
}

Scenario Scenario::demo() {
    Scenario s;
    s.name = "demo";
    auto d = named("thermostat");
    d.readings = {reading("temperature_c", 22.5, "C"), reading("temperature_c", 75.0, "C")};
    d.revoke = true;
    d.readings_after_revoke = {reading("temperature_c", 23.0, "C")};
    s.devices.push_back(d);
    return s;
}

Scenario Scenario::campaign() {
    Scenario s;
    s.name = "campaign";
    auto a = named("thermostat");
    a.readings = {reading("temperature_c", 21.0, "C"), reading("temperature_c", 80.0, "C")};
    a.revoke = true;
    a.readings_after_revoke = {reading("temperature_c", 22.0, "C")};
    auto b = named("wearable");
    b.manufacturer = "globex";
    b.readings = {reading("heart_rate_bpm", 72.0, "bpm", "globex")};
    s.devices = {a, b};
    return s;
}

Scenario Scenario::from_json(std::string_view text) {
    try {
        auto doc = nlohmann::json::parse(text);
        Scenario s;
        s.name = doc.value("name", "custom");
        s.authenticators = doc.value("authenticators", 1u);
        s.start = doc.value("start", s.start);
        s.totp_step = doc.value("totp_step", s.totp_step);
        s.session_key_ttl = doc.value("session_key_ttl", s.session_key_ttl);
        s.device_key_ttl = doc.value("device_key_ttl", s.device_key_ttl);
        s.provisioning_delay = doc.value("provisioning_delay", s.provisioning_delay);
        s.max_steps = doc.value("max_steps", s.max_steps);
        if (doc.contains("ledger")) {
            const auto& l = doc["ledger"];
            s.ledger.service_rate = l.value("service_rate", s.ledger.service_rate);
            s.ledger.max_block_txs = l.value("max_block_txs", s.ledger.max_block_txs);
            s.ledger.block_interval_ms = l.value("block_interval_ms", s.ledger.block_interval_ms);
        }
        if (doc.contains("rules")) s.rules = risk::RuleSet::from_json(doc["rules"].dump());
        for (const auto& d : doc.at("devices")) {
            DeviceSpec spec;
            spec.name = d.at("name").get<std::string>();
            spec.authenticator = d.value("authenticator", 0u);
            spec.manufacturer = d.value("manufacturer", spec.manufacturer);
            spec.wrong_link_key = d.value("wrong_link_key", false);
            spec.retries = d.value("retries", 0);
            spec.revoke = d.value("revoke", false);
            if (d.contains("readings")) spec.readings = parse_readings(d["readings"], spec.manufacturer);
            if (d.contains("readings_after_revoke"))
                spec.readings_after_revoke = parse_readings(d["readings_after_revoke"], spec.manufacturer);
            s.devices.push_back(std::move(spec));
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        invalid(e.what());
    }
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace onboard::harness
