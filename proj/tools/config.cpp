#include "config.hpp"

#include "onboard/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>

namespace onboardctl {

using onboard::Error;
using onboard::ErrorCode;
namespace ledger = onboard::ledger;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, "config: " + what); }

template <typename T>
T number(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        T v;
        if constexpr (std::is_floating_point_v<T>) v = static_cast<T>(std::stod(text, &used));
        else if constexpr (std::is_unsigned_v<T>) {
            if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
            v = static_cast<T>(std::stoull(text, &used));
        } else v = static_cast<T>(std::stoll(text, &used));
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        invalid(key + ": '" + text + "' is not a valid number");
    }
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table{
        {"run",
         {{"seed", [](Config& c, auto& k, auto& v) { c.seed = number<std::uint64_t>(k, v); }},
          {"snapshot", [](Config& c, auto&, auto& v) { c.snapshot = v; }},
          {"risk_rules", [](Config& c, auto&, auto& v) { c.risk_rules = v; }}}},
        {"protocol",
         {{"totp_step", [](Config& c, auto& k, auto& v) { c.totp_step = number<Seconds>(k, v); }},
          {"session_key_ttl", [](Config& c, auto& k, auto& v) { c.session_key_ttl = number<Seconds>(k, v); }},
          {"device_key_ttl", [](Config& c, auto& k, auto& v) { c.device_key_ttl = number<Seconds>(k, v); }},
          {"provisioning_delay",
           [](Config& c, auto& k, auto& v) { c.provisioning_delay = number<Seconds>(k, v); }}}},
        {"ledger",
         {{"service_rate", [](Config& c, auto& k, auto& v) { c.ledger.service_rate = number<double>(k, v); }},
          {"max_block_txs",
           [](Config& c, auto& k, auto& v) { c.ledger.max_block_txs = number<std::size_t>(k, v); }},
          {"block_interval_ms",
           [](Config& c, auto& k, auto& v) { c.ledger.block_interval_ms = number<std::uint64_t>(k, v); }}}},
    };
    return table;
}

ledger::Channel parse_channel(const std::string& name) {
    if (name == "identity") return ledger::Channel::Identity;
    if (name == "data") return ledger::Channel::Data;
    if (name == "risk") return ledger::Channel::RiskManagement;
    invalid("unknown channel '" + name + "' (identity, data, risk)");
}

ledger::ChannelAccess parse_access(const std::string& key, const std::string& v) {
    using ledger::ReadScope;
    if (v == "rw") return {ReadScope::All, true};
    if (v == "r") return {ReadScope::All, false};
    if (v == "r-own") return {ReadScope::Own, false};
    if (v == "w") return {ReadScope::None, true};
    if (v == "-") return {ReadScope::None, false};
    invalid(key + ": access must be one of rw, r, r-own, w, -");
}

AccessOverride access_entry(const std::string& key, const std::string& value) {
    auto dot = key.find('.');
    if (dot == std::string::npos) invalid("access key '" + key + "' must be <Role>.<channel>");
    AccessOverride o;
    try {
        o.role = ledger::parse_role(key.substr(0, dot));
    } catch (const Error&) {
        invalid("access key '" + key + "': unknown role");
    }
    o.channel = parse_channel(key.substr(dot + 1));
    o.access = parse_access(key, value);
    return o;
}

std::string env_name(const std::string& section, const std::string& key) {
    std::string s = "ONBOARD_" + section + "_" + key;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

} // namespace

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

void Config::validate() const {
    if (totp_step <= 0) invalid("totp_step must be positive");
    if (session_key_ttl <= 0) invalid("session_key_ttl must be positive");
    if (device_key_ttl <= 0) invalid("device_key_ttl must be positive");
    if (provisioning_delay < 0) invalid("provisioning_delay must not be negative");
    if (!(ledger.service_rate > 0)) invalid("service_rate must be positive");
    if (ledger.max_block_txs == 0) invalid("max_block_txs must be positive");
    if (ledger.block_interval_ms == 0) invalid("block_interval_ms must be positive");
}

ledger::AccessPolicy Config::policy() const {
    auto p = ledger::AccessPolicy::defaults();
    for (const auto& o : access) p.set(o.role, o.channel, o.access);
    return p;
}

Config load_config(const std::optional<std::string>& path, const EnvLookup& env) {
    Config c;
    if (path) {
        if (!std::filesystem::exists(*path)) throw std::runtime_error("cannot open config file " + *path);
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::ini_parser::read_ini(*path, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            invalid(e.what());
        }
        for (const auto& [section, body] : tree) {
            if (body.empty() && !body.data().empty()) invalid("key '" + section + "' outside a section");
            if (section == "access") {
                for (const auto& [key, v] : body) c.access.push_back(access_entry(key, v.data()));
                continue;
            }
            auto sec = setters().find(section);
            if (sec == setters().end()) invalid("unknown section [" + section + "]");
            for (const auto& [key, v] : body) {
                auto it = sec->second.find(key);
                if (it == sec->second.end()) invalid("unknown key '" + key + "' in [" + section + "]");
                it->second(c, section + "." + key, v.data());
            }
        }
    }
    for (const auto& [section, keys] : setters())
        for (const auto& [key, set] : keys)
            if (auto v = env(env_name(section, key))) set(c, env_name(section, key), *v);
    c.validate();
    return c;
}

} // namespace onboardctl
