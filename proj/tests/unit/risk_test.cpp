#include "doctest.h"

#include "onboard/error.hpp"
#include "onboard/risk/engine.hpp"

#include <cmath>

using namespace onboard;
using namespace onboard::ledger;
using namespace onboard::risk;

namespace {

DataEntry reading(std::string metric, double value) {
    DataEntry e;
    e.device_id.value.fill(0x0d);
    e.metric = std::move(metric);
    e.value = value;
    e.unit = "C";
    e.device_public_key = Bytes(64, 1);
    e.manufacturer = "acme";
    return e;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Malformed;
}

} // namespace

TEST_CASE("threshold evaluation") {
    auto rules = RuleSet::defaults();
    TxLocation at{Channel::Data, 4, 2};
    CHECK_FALSE(rules.evaluate(reading("temperature_c", 22), at));
    auto hot = rules.evaluate(reading("temperature_c", 75), at);
    REQUIRE(hot);
    CHECK(hot->severity == Severity::Critical);
    CHECK(hot->notify == std::vector<OrgRole>{OrgRole::EmergencyService});
    CHECK(hot->source == at);
    CHECK(hot->observed == 75);
    CHECK(hot->threshold == 60);
    CHECK_FALSE(rules.evaluate(reading("temperature_c", 60), at));  // strict comparison
    CHECK(rules.evaluate(reading("temperature_c", 4), at)->notify == std::vector<OrgRole>{OrgRole::Insurer});
    CHECK_FALSE(rules.evaluate(reading("humidity_pct", 1000), at));
}

TEST_CASE("first declared rule wins") {
    RuleSet rules({{"temperature_c", Comparator::Above, 40, "C", Severity::Warning, {OrgRole::Insurer}},
                   {"temperature_c", Comparator::Above, 60, "C", Severity::Critical, {OrgRole::EmergencyService}}});
    auto a = rules.evaluate(reading("temperature_c", 90), {});
    REQUIRE(a);
    CHECK(a->severity == Severity::Warning);
    CHECK(a->threshold == 40);
}

TEST_CASE("contact registration") {
    auto rules = RuleSet::defaults();
    rules.register_contacts("temperature_c", std::vector<std::string>{"EmergencyService", "Insurer"});
    auto a = rules.evaluate(reading("temperature_c", 75), {});
    CHECK(a->notify == std::vector<OrgRole>{OrgRole::EmergencyService, OrgRole::Insurer});
    auto before = rules.rules();
    rules.register_contacts("temperature_c", std::vector<std::string>{"EmergencyService", "Insurer"});
    CHECK(rules.rules() == before);
    CHECK(code_of([&] { rules.register_contacts("temperature_c", std::vector<std::string>{}); }) ==
          ErrorCode::UnknownRole);
    CHECK(code_of([&] { rules.register_contacts("temperature_c", std::vector<std::string>{"Plumber"}); }) ==
          ErrorCode::UnknownRole);
    CHECK(rules.rules() == before);
}

TEST_CASE("rule invariants") {
    CHECK(code_of([] { RuleSet({{"t", Comparator::Above, 1, "", Severity::Info, {}}}); }) == ErrorCode::UnknownRole);
    CHECK(code_of([] {
              RuleSet({{"t", Comparator::Above, std::nan(""), "", Severity::Info, {OrgRole::Insurer}}});
          }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("json config round trip and errors") {
    auto rules = RuleSet::defaults();
    auto back = RuleSet::from_json(rules.to_json());
    CHECK(back.rules() == rules.rules());
    auto parsed = RuleSet::from_json(
        R"([{"metric":"co_ppm","comparator":"above","threshold":50,"severity":"Critical","targets":["EmergencyService"]}])");
    REQUIRE(parsed.rules().size() == 1);
    CHECK(parsed.rules()[0].comparator == Comparator::Above);
    CHECK(code_of([] { RuleSet::from_json("{"); }) == ErrorCode::ConfigInvalid);
    CHECK(code_of([] { RuleSet::from_json(R"([{"metric":"x"}])"); }) == ErrorCode::ConfigInvalid);
    CHECK(code_of([] {
              RuleSet::from_json(R"([{"metric":"x","comparator":"sideways","threshold":1,"targets":["Insurer"]}])");
          }) == ErrorCode::ConfigInvalid);
    CHECK(code_of([] {
              RuleSet::from_json(R"([{"metric":"x","comparator":"above","threshold":1,"targets":["Nobody"]}])");
          }) == ErrorCode::UnknownRole);
}

TEST_CASE("alerts are sound and complete over a generated corpus") {
    auto rules = RuleSet::defaults();
    crypto::SeededRng rng(3);
    const char* metrics[] = {"temperature_c", "heart_rate_bpm", "spo2_pct", "smoke_ppm", "humidity_pct"};
    for (int i = 0; i < 5000; ++i) {
        auto e = reading(metrics[rng.below(5)], rng.unit() * 400 - 50);
        bool any = false;
        for (const auto& r : rules.rules()) any = any || r.matches(e);
        CHECK(rules.evaluate(e, {}).has_value() == any);
    }
}

TEST_CASE("hook drives one alert per matching data commit") {
    crypto::SeededRng rng(5);
    auto server = OrgMember::create("server", OrgRole::Server, rng);
    auto engine = OrgMember::create("risk-engine", OrgRole::RiskEngine, rng);
    auto ems = OrgMember::create("ems", OrgRole::EmergencyService, rng);
    Ledger l;
    for (const auto* m : {&server, &engine, &ems}) l.register_identity(m->identity);
    l.set_data_hook(RuleSet::defaults().hook(), engine);
    std::size_t expected = 0;
    for (int i = 0; i < 40; ++i) {
        auto e = reading("temperature_c", i % 3 == 0 ? 70.0 + i : 20.0);
        l.submit(make_transaction(server, Channel::Data, e, i));
        if (i % 7 == 0) l.order(i);
        if (i % 3 == 0) ++expected;
    }
    l.flush();
    auto alerts = l.query(Channel::RiskManagement, nullptr, ems.identity);
    auto data = l.query(Channel::Data, nullptr, server.identity);
    CHECK(alerts.size() == expected);
    // Every alert joins to exactly one committed entry over the threshold.
    std::size_t prev = 0;
    for (const auto& a : alerts) {
        const auto& alert = std::get<RiskAlert>(a.tx.payload);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data[i].location == alert.source) {
                ++hits;
                CHECK(std::get<DataEntry>(data[i].tx.payload).value == alert.observed);
                CHECK(i >= prev);
                prev = i;
            }
        }
        CHECK(hits == 1);
    }
}
