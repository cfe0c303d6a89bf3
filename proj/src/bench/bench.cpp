#include "onboard/bench/bench.hpp"

#include "onboard/crypto/random.hpp"
#include "onboard/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace onboard::bench {

using ledger::Channel;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, "bench: " + what); }

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t to_ms(double seconds) { return static_cast<std::uint64_t>(std::floor(seconds * 1000.0 + 1e-9)); }

/// Arrival offsets in seconds, ascending. Poisson arrivals are drawn
/// conditioned on the expected count: given N arrivals in [0, D) a Poisson
/// process places them as N sorted uniform points.
std::vector<double> arrivals(const LoadProfile& p, crypto::Rng& rng) {
    const auto n = static_cast<std::size_t>(std::llround(p.arrival_rate * p.duration));
    std::vector<double> t(n);
    if (p.arrival == Arrival::Uniform) {
        for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / p.arrival_rate;
    } else {
        for (auto& x : t) x = rng.unit() * p.duration;
        std::sort(t.begin(), t.end());
    }
    return t;
}

/// Builds signed transactions following the channel mix.
class TxFactory {
public:
    TxFactory(const Submitters& who, const TxMix& mix, crypto::Rng& rng) : who_(who), mix_(mix), rng_(rng) {
        total_ = mix.identity + mix.data + mix.risk;
    }

    ledger::LedgerTransaction next(std::uint64_t now_ms) {
        const double r = rng_.unit() * total_;
        const auto ts = now_ms / 1000;
        auto id = crypto::gen_pseudo_uuid(rng_);
        if (r < mix_.identity) {
            ledger::DeviceRecord rec;
            rec.long_lived_token = crypto::gen_long_lived_token(rng_);
            rec.server_device_public_key = rng_.bytes(64);
            rec.device_public_key = rng_.bytes(64);
            rec.authenticator_public_key = rng_.bytes(64);
            rec.device_id = id;
            rec.timestamp = ts;
            return ledger::make_transaction(who_.server, Channel::Identity, rec, ts);
        }
        if (r < mix_.identity + mix_.data) {
            ledger::DataEntry e;
            e.device_id = id;
            e.metric = "temperature_c";
            e.value = 15.0 + rng_.unit() * 10.0;
            e.unit = "C";
            e.timestamp = ts;
            e.manufacturer = "acme";
            return ledger::make_transaction(who_.server, Channel::Data, e, ts);
        }
        ledger::RiskAlert a;
        a.device_id = id;
        a.metric = "temperature_c";
        a.observed = 70;
        a.threshold = 60;
        a.severity = ledger::Severity::Critical;
        a.notify = {ledger::OrgRole::EmergencyService};
        a.source = {Channel::Data, 1, 0};
        return ledger::make_transaction(who_.risk_engine, Channel::RiskManagement, a, ts);
    }

private:
    const Submitters& who_;
    TxMix mix_;
    crypto::Rng& rng_;
    double total_;
};

RateRow summarise(const LoadProfile& p, const std::vector<double>& arrived, const std::vector<double>& committed) {
    RateRow row;
    row.offered = p.arrival_rate;
    const double w0 = p.warmup_fraction * p.duration;
    const double window = p.duration - w0;
    std::vector<double> lat;
    std::size_t in_window = 0;
    for (std::size_t i = 0; i < arrived.size(); ++i) {
        if (arrived[i] < w0) continue;
        ++row.measured;
        if (std::isnan(committed[i])) continue;
        ++row.success;
        lat.push_back((committed[i] - arrived[i]) * 1000.0);
        if (committed[i] <= p.duration) ++in_window;
    }
    row.arrived_rate = static_cast<double>(row.measured) / window;
    row.throughput = static_cast<double>(in_window) / window;
    if (!lat.empty()) {
        std::sort(lat.begin(), lat.end());
        row.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
        row.p50_ms = percentile(lat, 50);
        row.p95_ms = percentile(lat, 95);
        row.p99_ms = percentile(lat, 99);
    }
    return row;
}

RateRow simulate(const LoadProfile& p, ledger::Ledger& led, const Submitters& who, crypto::Rng& rng) {
    const auto& cfg = led.config();
    const double service = 1.0 / cfg.service_rate;
    const auto arr = arrivals(p, rng);
    TxFactory factory(who, p.mix, rng);

    std::vector<double> committed(arr.size(), std::nan(""));
    std::vector<Channel> channel_of(arr.size());
    std::unordered_map<std::uint64_t, std::size_t> by_ticket;
    struct Batch {
        std::size_t count = 0;
        std::uint64_t opened_ms = 0;
    };
    std::map<Channel, Batch> batches;
    double now = 0;

    led.set_commit_observer([&](const ledger::Block& b, std::span<const std::uint64_t> tickets) {
        for (auto t : tickets) {
            auto it = by_ticket.find(t);
            if (it != by_ticket.end()) committed[it->second] = now;
        }
        batches[b.channel].count = 0;
    });

    std::deque<std::size_t> queue;  // submitted, not yet ordered
    std::size_t next = 0;
    double done_at = kInf;

    for (;;) {
        const double ta = next < arr.size() ? arr[next] : kInf;
        std::uint64_t timer_ms = std::numeric_limits<std::uint64_t>::max();
        for (const auto& [ch, b] : batches)
            if (b.count > 0) timer_ms = std::min(timer_ms, b.opened_ms + cfg.block_interval_ms);
        const double tt = timer_ms == std::numeric_limits<std::uint64_t>::max() ? kInf : timer_ms / 1000.0;
        if (ta == kInf && done_at == kInf && tt == kInf) break;

        // Ties go to the timer: a batch whose interval ends at the instant a
        // transaction is ordered is cut without it.
        if (tt <= done_at + 1e-9 && tt <= ta + 1e-9) {
            now = tt;
            led.cut_expired(timer_ms);
        } else if (done_at <= ta) {
            now = done_at;
            const auto i = queue.front();
            queue.pop_front();
            auto& b = batches[channel_of[i]];
            if (b.count++ == 0) b.opened_ms = to_ms(now);
            led.order(to_ms(now), 1);
            done_at = queue.empty() ? kInf : now + service;
        } else {
            now = ta;
            const auto i = next++;
            auto tx = factory.next(to_ms(now));
            channel_of[i] = tx.channel;
            by_ticket[led.submit(tx, to_ms(now))] = i;
            queue.push_back(i);
            if (done_at == kInf) done_at = now + service;
        }
    }
    led.set_commit_observer({});
    return summarise(p, arr, committed);
}

RateRow live(const LoadProfile& p, ledger::Ledger& led, const Submitters& who, crypto::Rng& rng) {
    using Clock = std::chrono::steady_clock;
    const auto& cfg = led.config();
    const auto arr = arrivals(p, rng);
    TxFactory factory(who, p.mix, rng);

    std::vector<double> submitted(arr.size(), std::nan(""));
    std::vector<double> committed(arr.size(), std::nan(""));
    std::mutex m;
    std::unordered_map<std::uint64_t, std::size_t> by_ticket;
    std::unordered_map<std::uint64_t, double> early;  // committed before the ticket was recorded
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    led.set_commit_observer([&](const ledger::Block&, std::span<const std::uint64_t> tickets) {
        const double t = elapsed();
        std::lock_guard lock(m);
        for (auto k : tickets) {
            auto it = by_ticket.find(k);
            if (it != by_ticket.end()) committed[it->second] = t;
            else early[k] = t;
        }
    });

    std::atomic<bool> stop{false};
    std::thread committer([&] {
        double credit = 0, last = 0, last_order = 0;
        for (;;) {
            const double t = elapsed();
            credit += (t - last) * cfg.service_rate;
            last = t;
            const auto q = led.queued();
            if (q == 0) credit = std::min(credit, 1.0);
            const auto n = std::min<std::size_t>(static_cast<std::size_t>(credit), q);
            if (n > 0) {
                led.order(to_ms(t), n);
                credit -= static_cast<double>(n);
                last_order = t;
            }
            led.cut_expired(to_ms(t));
            if (stop && q == 0 && t > last_order + cfg.block_interval_ms / 1000.0 + 0.002) {
                led.cut_expired(to_ms(elapsed()) + cfg.block_interval_ms);
                return;
            }
            std::this_thread::sleep_for(std::chrono::microseconds(500));
        }
    });

    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                                  std::chrono::duration<double>(arr[i])));
        auto tx = factory.next(to_ms(elapsed()));
        const double t = elapsed();
        auto ticket = led.submit(tx, to_ms(t));
        std::lock_guard lock(m);
        submitted[i] = t;
        by_ticket[ticket] = i;
        if (auto it = early.find(ticket); it != early.end()) committed[i] = it->second;
    }
    stop = true;
    committer.join();
    led.set_commit_observer({});
    return summarise(p, submitted, committed);
}

} // namespace

std::string_view to_string(Arrival a) { return a == Arrival::Uniform ? "uniform" : "poisson"; }

Arrival parse_arrival(std::string_view name) {
    if (name == "uniform") return Arrival::Uniform;
    if (name == "poisson") return Arrival::Poisson;
    bad("unknown arrival process '" + std::string(name) + "'");
}

std::string_view to_string(Mode m) { return m == Mode::Simulated ? "simulated" : "live"; }

Mode parse_mode(std::string_view name) {
    if (name == "simulated") return Mode::Simulated;
    if (name == "live") return Mode::Live;
    bad("unknown mode '" + std::string(name) + "'");
}

void LoadProfile::validate() const {
    if (!(arrival_rate > 0) || !std::isfinite(arrival_rate)) bad("arrival rate must be positive");
    if (!(duration >= 10) || !std::isfinite(duration)) bad("duration must be at least 10 s");
    if (!(warmup_fraction >= 0 && warmup_fraction < 1)) bad("warm-up fraction must be in [0, 1)");
    if (mix.identity < 0 || mix.data < 0 || mix.risk < 0 || !(mix.identity + mix.data + mix.risk > 0))
        bad("transaction mix must be non-negative and not all zero");
}

std::string LatencyReport::to_csv() const {
    std::ostringstream os;
    os << "rate,throughput,mean_ms,p50,p95,p99\n" << std::fixed << std::setprecision(3);
    for (const auto& r : rows)
        os << r.offered << ',' << r.throughput << ',' << r.mean_ms << ',' << r.p50_ms << ',' << r.p95_ms << ','
           << r.p99_ms << '\n';
    return os.str();
}

std::string LatencyReport::to_table() const {
    std::ostringstream os;
    os << to_string(mode) << " orderer, mu=" << ledger.service_rate << " tx/s, block <= " << ledger.max_block_txs
       << " txs / " << ledger.block_interval_ms << " ms\n";
    os << std::setw(8) << "rate" << std::setw(12) << "throughput" << std::setw(12) << "mean_ms" << std::setw(10)
       << "p50" << std::setw(10) << "p95" << std::setw(10) << "p99" << std::setw(9) << "ok" << '\n';
    os << std::fixed;
    for (const auto& r : rows)
        os << std::setprecision(1) << std::setw(8) << r.offered << std::setw(12) << r.throughput << std::setw(12)
           << r.mean_ms << std::setw(10) << r.p50_ms << std::setw(10) << r.p95_ms << std::setw(10) << r.p99_ms
           << std::setw(9) << r.success << '\n';
    return os.str();
}

Submitters Submitters::create(std::uint64_t seed) {
    crypto::SeededRng rng(seed);
    auto orgs = rng.fork("bench-orgs");
    return {ledger::OrgMember::create("server", ledger::OrgRole::Server, orgs),
            ledger::OrgMember::create("risk-engine", ledger::OrgRole::RiskEngine, orgs)};
}

void Submitters::register_with(ledger::Ledger& ledger) const {
    ledger.register_identity(server.identity);
    ledger.register_identity(risk_engine.identity);
}

RateRow generate_load(const LoadProfile& profile, ledger::Ledger& ledger, const Submitters& who, std::uint64_t seed,
                      Mode mode) {
    profile.validate();
    crypto::SeededRng rng(seed);
    auto load_rng = rng.fork("load");
    return mode == Mode::Simulated ? simulate(profile, ledger, who, load_rng) : live(profile, ledger, who, load_rng);
}

LatencyReport sweep(const std::vector<double>& rates, const LoadProfile& tmpl, const ledger::LedgerConfig& config,
                    std::uint64_t seed, Mode mode, const Progress& progress) {
    if (rates.empty()) bad("no rates given");
    for (std::size_t i = 1; i < rates.size(); ++i)
        if (!(rates[i] > rates[i - 1])) bad("rates must be increasing");
    if (!(config.service_rate > 0) || config.max_block_txs == 0 || config.block_interval_ms == 0)
        bad("ledger parameters must be positive");
    LatencyReport rep;
    rep.mode = mode;
    rep.ledger = config;
    const auto who = Submitters::create(seed);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        auto p = tmpl;
        p.arrival_rate = rates[i];
        ledger::Ledger led(config);
        who.register_with(led);
        rep.rows.push_back(generate_load(p, led, who, seed + i, mode));
        if (progress) progress(rep.rows.back());
    }
    return rep;
}

std::vector<double> parse_rates(std::string_view spec) {
    auto number = [](const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            bad("'" + s + "' is not a number");
        }
    };
    std::vector<double> out;
    std::string s(spec);
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) bad("range must be start:end:step");
        const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
        if (!(step > 0) || !(b >= a)) bad("range needs start <= end and a positive step");
        for (std::size_t i = 0;; ++i) {
            double r = a + static_cast<double>(i) * step;
            if (r > b + 1e-9) break;
            out.push_back(r);
        }
        if (out.back() < b - 1e-9) out.push_back(b);
    } else {
        std::stringstream ss(s);
        for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
    }
    if (out.empty()) bad("no rates given");
    for (double r : out)
        if (!(r > 0)) bad("rates must be positive");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) bad("rates must be increasing");
    return out;
}

std::optional<double> find_knee(const LatencyReport& report, double factor) {
    if (report.rows.empty()) return std::nullopt;
    const double base = report.rows.front().mean_ms;
    for (const auto& r : report.rows)
        if (r.mean_ms > factor * base) return r.offered;
    return std::nullopt;
}

double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0;
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

} // namespace onboard::bench
