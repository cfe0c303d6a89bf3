#include "onboard/risk/engine.hpp"

#include "onboard/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace onboard::risk {

using ledger::OrgRole;

std::string_view to_string(Comparator c) { return c == Comparator::Above ? "above" : "below"; }

Comparator parse_comparator(std::string_view name) {
    if (name == "above" || name == "Above") return Comparator::Above;
    if (name == "below" || name == "Below") return Comparator::Below;
    throw Error(ErrorCode::ConfigInvalid, "unknown comparator '" + std::string(name) + "'");
}

bool ThresholdRule::matches(const ledger::DataEntry& entry) const {
    if (entry.metric != metric) return false;
    return comparator == Comparator::Above ? entry.value > threshold : entry.value < threshold;
}

RuleSet::RuleSet(std::vector<ThresholdRule> rules) {
    for (auto& r : rules) add(std::move(r));
}

void RuleSet::check(const ThresholdRule& rule) {
    if (rule.metric.empty()) throw Error(ErrorCode::ConfigInvalid, "rule without a metric");
    if (!std::isfinite(rule.threshold)) throw Error(ErrorCode::ConfigInvalid, "rule threshold must be finite");
    if (rule.targets.empty()) throw Error(ErrorCode::UnknownRole, "rule for '" + rule.metric + "' notifies nobody");
}

void RuleSet::add(ThresholdRule rule) {
    check(rule);
    rules_.push_back(std::move(rule));
}

std::optional<ledger::RiskAlert> RuleSet::evaluate(const ledger::DataEntry& entry,
                                                   const ledger::TxLocation& source) const {
    for (const auto& r : rules_) {
        if (!r.matches(entry)) continue;
        return ledger::RiskAlert{entry.device_id, entry.metric, entry.value, r.threshold, r.severity, r.targets,
                                 source};
    }
    return std::nullopt;
}

void RuleSet::register_contacts(std::string_view metric, const std::vector<std::string>& targets) {
    std::vector<OrgRole> roles;
    for (const auto& t : targets) roles.push_back(ledger::parse_role(t));
    register_contacts(metric, std::move(roles));
}

void RuleSet::register_contacts(std::string_view metric, std::vector<OrgRole> targets) {
    if (targets.empty()) throw Error(ErrorCode::UnknownRole, "at least one contact role is required");
    std::vector<OrgRole> unique;
    for (auto r : targets)
        if (std::find(unique.begin(), unique.end(), r) == unique.end()) unique.push_back(r);
    for (auto& rule : rules_)
        if (rule.metric == metric) rule.targets = unique;
}

RuleSet RuleSet::from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("rule file: ") + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::ConfigInvalid, "rule file must be a JSON array");
    RuleSet out;
    for (const auto& item : doc) {
        try {
            ThresholdRule r;
            r.metric = item.at("metric").get<std::string>();
            r.comparator = parse_comparator(item.at("comparator").get<std::string>());
            r.threshold = item.at("threshold").get<double>();
            r.unit = item.value("unit", "");
            r.severity = ledger::parse_severity(item.value("severity", "Warning"));
            for (const auto& t : item.at("targets")) r.targets.push_back(ledger::parse_role(t.get<std::string>()));
            out.add(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigInvalid, std::string("rule entry: ") + e.what());
        }
    }
    return out;
}

RuleSet RuleSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open rule file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string RuleSet::to_json() const {
    auto doc = nlohmann::json::array();
    for (const auto& r : rules_) {
        std::vector<std::string> targets;
        for (auto t : r.targets) targets.emplace_back(ledger::to_string(t));
        doc.push_back({{"metric", r.metric},
                       {"comparator", std::string(to_string(r.comparator))},
                       {"threshold", r.threshold},
                       {"unit", r.unit},
                       {"severity", std::string(ledger::to_string(r.severity))},
                       {"targets", targets}});
    }
    return doc.dump(2);
}

RuleSet RuleSet::defaults() {
    using ledger::Severity;
    return RuleSet({
        {"temperature_c", Comparator::Above, 60, "C", Severity::Critical, {OrgRole::EmergencyService}},
        {"temperature_c", Comparator::Below, 5, "C", Severity::Warning, {OrgRole::Insurer}},
        {"heart_rate_bpm", Comparator::Above, 150, "bpm", Severity::Critical, {OrgRole::EmergencyService}},
        {"spo2_pct", Comparator::Below, 90, "%", Severity::Critical, {OrgRole::EmergencyService}},
        {"smoke_ppm", Comparator::Above, 300, "ppm", Severity::Critical,
         {OrgRole::EmergencyService, OrgRole::Insurer}},
    });
}

ledger::DataCommitHook RuleSet::hook() const {
    return [rules = *this](const ledger::DataEntry& e, const ledger::TxLocation& at) { return rules.evaluate(e, at); };
}

} // namespace onboard::risk
