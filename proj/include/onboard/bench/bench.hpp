#pragma once

#include "onboard/ledger/ledger.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace onboard::bench {

enum class Arrival : std::uint8_t { Uniform, Poisson };
std::string_view to_string(Arrival a);
/// Throws Error(ConfigInvalid).
Arrival parse_arrival(std::string_view name);

/// Simulated runs the ledger in virtual time; Live drives it from real
/// threads against the monotonic clock.
enum class Mode : std::uint8_t { Simulated, Live };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view name);

/// Channel proportions of the generated transactions.
struct TxMix {
    double identity = 0;
    double data = 1;
    double risk = 0;
};

struct LoadProfile {
    double arrival_rate = 100;  // tx/s
    double duration = 30;       // seconds of arrivals
    Arrival arrival = Arrival::Poisson;
    TxMix mix;
    double warmup_fraction = 0.1;

    /// Throws Error(ConfigInvalid).
    void validate() const;
};

struct RateRow {
    double offered = 0;       // configured arrival rate
    double arrived_rate = 0;  // realised arrival rate inside the window
    double throughput = 0;    // window arrivals committed before the window closed, per second
    double mean_ms = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double p99_ms = 0;
    std::size_t success = 0;  // window arrivals committed (after draining)
    std::size_t measured = 0;  // window arrivals
};

struct LatencyReport {
    Mode mode = Mode::Simulated;
    ledger::LedgerConfig ledger;
    std::vector<RateRow> rows;

    /// rate,throughput,mean_ms,p50,p95,p99
    std::string to_csv() const;
    std::string to_table() const;
};

/// The identities the generator submits as.
struct Submitters {
    ledger::OrgMember server;
    ledger::OrgMember risk_engine;

    static Submitters create(std::uint64_t seed);
    void register_with(ledger::Ledger& ledger) const;
};

/// One open-loop run at profile.arrival_rate. The ledger must be fresh and
/// know the submitters; its config supplies the orderer rate and batching.
RateRow generate_load(const LoadProfile& profile, ledger::Ledger& ledger, const Submitters& who, std::uint64_t seed,
                      Mode mode = Mode::Simulated);

using Progress = std::function<void(const RateRow&)>;

/// One fresh ledger per rate. Rates must be non-empty and increasing.
LatencyReport sweep(const std::vector<double>& rates, const LoadProfile& tmpl, const ledger::LedgerConfig& config,
                    std::uint64_t seed, Mode mode = Mode::Simulated, const Progress& progress = {});

/// "30:300:25" (end inclusive) or "30,60,90". Throws Error(ConfigInvalid).
std::vector<double> parse_rates(std::string_view spec);

/// First rate whose mean latency exceeds `factor` times the lowest-rate mean.
std::optional<double> find_knee(const LatencyReport& report, double factor = 2.0);

/// Nearest-rank percentile of an ascending-sorted sample, in [0, 100].
double percentile(const std::vector<double>& sorted, double p);

} // namespace onboard::bench
