#pragma once

#include "onboard/ledger/ledger.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace onboard::risk {

enum class Comparator : std::uint8_t { Above, Below };

std::string_view to_string(Comparator c);
/// Throws Error(ConfigInvalid).
Comparator parse_comparator(std::string_view name);

struct ThresholdRule {
    std::string metric;
    Comparator comparator = Comparator::Above;
    double threshold = 0;
    std::string unit;
    ledger::Severity severity = ledger::Severity::Warning;
    std::vector<ledger::OrgRole> targets;

    bool matches(const ledger::DataEntry& entry) const;
    bool operator==(const ThresholdRule&) const = default;
};

/// Static threshold rules, evaluated in declaration order.
class RuleSet {
public:
    RuleSet() = default;
    /// Throws Error(ConfigInvalid) for a non-finite threshold or empty metric,
    /// Error(UnknownRole) for an empty target list.
    explicit RuleSet(std::vector<ThresholdRule> rules);

    void add(ThresholdRule rule);
    const std::vector<ThresholdRule>& rules() const { return rules_; }

    /// First matching rule wins; the alert points back at `source`.
    std::optional<ledger::RiskAlert> evaluate(const ledger::DataEntry& entry, const ledger::TxLocation& source) const;

    /// Replaces the notification targets of every rule on `metric`.
    /// Throws Error(UnknownRole) when `targets` is empty or has an unknown name.
    void register_contacts(std::string_view metric, const std::vector<std::string>& targets);
    void register_contacts(std::string_view metric, std::vector<ledger::OrgRole> targets);

    /// JSON: [{"metric", "comparator", "threshold", "unit", "severity", "targets": [...]}]
    static RuleSet from_json(std::string_view text);
    static RuleSet load(const std::string& path);
    std::string to_json() const;

    /// Home-environment defaults used by the demo and tests.
    static RuleSet defaults();

    ledger::DataCommitHook hook() const;

private:
    static void check(const ThresholdRule& rule);
    std::vector<ThresholdRule> rules_;
};

} // namespace onboard::risk
