#include "doctest.h"

#include "onboard/bench/bench.hpp"
#include "onboard/error.hpp"

#include <cmath>
#include <map>

using namespace onboard;
using namespace onboard::bench;

namespace {

/// Independent model of one run with uniform arrivals: a deterministic
/// single-server FIFO orderer feeding a batch that is cut when it holds
/// max_txs or when its first transaction has waited block_interval.
double oracle_mean_ms(double rate, double duration, double warmup, const ledger::LedgerConfig& cfg) {
    const auto n = static_cast<std::size_t>(std::llround(rate * duration));
    const double service = 1.0 / cfg.service_rate;
    std::vector<double> arrival(n), commit(n);
    std::vector<std::size_t> open;
    std::uint64_t opened_ms = 0;
    double free_at = 0;
    auto cut = [&](double at) {
        for (auto i : open) commit[i] = at;
        open.clear();
    };
    for (std::size_t i = 0; i < n; ++i) {
        arrival[i] = static_cast<double>(i) / rate;
        const double ordered = std::max(arrival[i], free_at) + service;
        free_at = ordered;
        const auto ordered_ms = static_cast<std::uint64_t>(std::floor(ordered * 1000.0 + 1e-9));
        if (!open.empty() && ordered_ms >= opened_ms + cfg.block_interval_ms) cut((opened_ms + cfg.block_interval_ms) / 1000.0);
        if (open.empty()) opened_ms = ordered_ms;
        open.push_back(i);
        if (open.size() == cfg.max_block_txs) cut(ordered);
    }
    if (!open.empty()) cut((opened_ms + cfg.block_interval_ms) / 1000.0);
    double sum = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (arrival[i] < warmup * duration) continue;
        sum += (commit[i] - arrival[i]) * 1000.0;
        ++k;
    }
    return sum / static_cast<double>(k);
}

LatencyReport standard_sweep() {
    LoadProfile p;
    p.duration = 30;
    return sweep(parse_rates("30,55,80,100,105,130,155,160,175,180,205,230,255,280,300"), p, {}, 1);
}

} // namespace

TEST_CASE("rate lists") {
    auto r = parse_rates("30:300:25");
    CHECK(r.size() == 12);
    CHECK(r.front() == 30);
    CHECK(r[1] == 55);
    CHECK(r.back() == 300);
    CHECK(parse_rates("10:30:10") == std::vector<double>{10, 20, 30});
    CHECK(parse_rates("5,7.5,9") == std::vector<double>{5, 7.5, 9});
    for (const char* bad : {"", "a:b:c", "30:10:5", "10:20:0", "1:2", "5,4", "0,1", "3x"})
        CHECK_THROWS_AS(parse_rates(bad), Error);
}

TEST_CASE("nearest-rank percentiles") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(percentile(v, 50) == 5);
    CHECK(percentile(v, 95) == 10);
    CHECK(percentile(v, 0) == 1);
    CHECK(percentile(v, 100) == 10);
    CHECK(percentile({}, 50) == 0);
}

TEST_CASE("profile validation") {
    LoadProfile p;
    ledger::Ledger led;
    auto who = Submitters::create(1);
    who.register_with(led);
    p.duration = 5;
    CHECK_THROWS_AS(generate_load(p, led, who, 1), Error);
    p.duration = 10;
    p.arrival_rate = 0;
    CHECK_THROWS_AS(generate_load(p, led, who, 1), Error);
    p.arrival_rate = 10;
    p.mix = {0, 0, 0};
    CHECK_THROWS_AS(generate_load(p, led, who, 1), Error);
    CHECK_THROWS_AS(sweep({50, 40}, LoadProfile{}, {}, 1), Error);
    CHECK_THROWS_AS(parse_arrival("bursty"), Error);
    CHECK(parse_mode("live") == Mode::Live);
}

TEST_CASE("simulated run matches an independent queueing model") {
    ledger::LedgerConfig cfg;
    for (double rate : {20.0, 50.0, 120.0, 190.0}) {
        CAPTURE(rate);
        LoadProfile p;
        p.arrival_rate = rate;
        p.duration = 12;
        p.arrival = Arrival::Uniform;
        ledger::Ledger led(cfg);
        auto who = Submitters::create(3);
        who.register_with(led);
        auto row = generate_load(p, led, who, 3);
        CHECK(row.mean_ms == doctest::Approx(oracle_mean_ms(rate, 12, 0.1, cfg)).epsilon(1e-6));
        CHECK(row.success == row.measured);
        CHECK(led.verify_chain(ledger::Channel::Data));
    }
}

TEST_CASE("sweep shape at mu = 200") {
    auto rep = standard_sweep();
    REQUIRE(rep.rows.size() == 15);
    std::map<double, RateRow> by_rate;
    for (const auto& r : rep.rows) {
        by_rate[r.offered] = r;
        CHECK(r.p50_ms <= r.p95_ms);
        CHECK(r.p95_ms <= r.p99_ms);
        CHECK(r.throughput <= r.arrived_rate);
        CHECK(r.success <= r.measured);
        if (r.offered <= 160) CHECK(std::abs(r.throughput - r.offered) <= 0.05 * r.offered);
        if (r.offered <= 175) CHECK(r.mean_ms < 500);
    }
    CHECK(by_rate[300].mean_ms > 4 * by_rate[100].mean_ms);
    CHECK(by_rate[300].mean_ms > by_rate[175].mean_ms);
    // Past saturation throughput stays near the orderer rate.
    CHECK(by_rate[300].throughput < 200);
    // Latency is non-decreasing up to batching noise (a few ms as blocks fill).
    for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(rep.rows[i].mean_ms >= rep.rows[i - 1].mean_ms - 10);

    auto csv = rep.to_csv();
    CHECK(csv.rfind("rate,throughput,mean_ms,p50,p95,p99\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
}

TEST_CASE("overload latency grows with duration") {
    auto at = [](double duration) {
        LoadProfile p;
        p.arrival_rate = 300;
        p.duration = duration;
        return sweep({300}, p, {}, 2).rows[0].mean_ms;
    };
    CHECK(at(20) > 1.5 * at(10));
}

TEST_CASE("knee sits between 0.8 mu and mu") {
    LoadProfile p;
    auto rates = parse_rates("150:210:5");
    rates.insert(rates.begin(), 30);
    auto rep = sweep(rates, p, {}, 1);
    auto knee = find_knee(rep);
    REQUIRE(knee);
    CHECK(*knee >= 160);
    CHECK(*knee <= 200);

    ledger::LedgerConfig slow;
    slow.service_rate = 100;
    rates = parse_rates("75:105:5");
    rates.insert(rates.begin(), 20);
    auto rep2 = sweep(rates, p, slow, 1);
    auto knee2 = find_knee(rep2);
    REQUIRE(knee2);
    CHECK(*knee2 >= 80);
    CHECK(*knee2 <= 100);
}

TEST_CASE("sweeps are deterministic and honour the channel mix") {
    LoadProfile p;
    p.duration = 10;
    p.mix = {1, 2, 1};
    auto a = sweep({60, 120}, p, {}, 9), b = sweep({60, 120}, p, {}, 9);
    CHECK(a.to_csv() == b.to_csv());

    ledger::Ledger led;
    auto who = Submitters::create(9);
    who.register_with(led);
    p.arrival_rate = 80;
    auto row = generate_load(p, led, who, 4);
    CHECK(row.success == row.measured);
    for (auto ch : ledger::kAllChannels) {
        CHECK(led.tx_count(ch) > 100);
        CHECK(led.verify_chain(ch));
    }
}

TEST_CASE("live mode against the monotonic clock") {
    LoadProfile p;
    p.duration = 10;
    p.arrival_rate = 100;
    auto rep = sweep({100}, p, {}, 1, Mode::Live);
    const auto& r = rep.rows[0];
    CHECK(std::abs(r.throughput - 100) <= 5);
    CHECK(r.mean_ms < 500);
    CHECK(r.success == r.measured);
}
