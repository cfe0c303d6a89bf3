#include "doctest.h"

#include "onboard/channels/knowledge.hpp"
#include "onboard/risk/engine.hpp"
#include "onboard/roles/roles.hpp"

using namespace onboard;
using namespace onboard::roles;
using ledger::Channel;
using ledger::DeviceStatus;

namespace {

constexpr crypto::Timestamp kStart = 1'700'000'010;  // a step boundary

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Malformed;
}

struct World {
    crypto::SeededRng rng;
    crypto::SeededRng org_rng;
    crypto::ManualClock clock{kStart};
    channels::Trace trace;
    TermBook book;
    RoleEnv env{&rng, &clock, &trace, &book};
    ledger::OrgMember server_member;
    ledger::OrgMember risk_member;
    ledger::OrgMember ems;
    ledger::Ledger ledger;
    Server server;
    Authenticator auth;
    crypto::LinkKey link;
    Device device;

    explicit World(std::uint64_t seed = 1, ledger::OrgRole server_role = ledger::OrgRole::Server)
        : rng(seed),
          org_rng(seed + 1000),
          server_member(ledger::OrgMember::create("server", server_role, org_rng)),
          risk_member(ledger::OrgMember::create("risk-engine", ledger::OrgRole::RiskEngine, org_rng)),
          ems(ledger::OrgMember::create("ems", ledger::OrgRole::EmergencyService, org_rng)),
          server(env, ledger, server_member),
          auth("authenticator#0", 0, env),
          link(crypto::LinkKey::random(rng)),
          device("device#0", link, "acme", env) {
        for (const auto* m : {&server_member, &risk_member, &ems}) ledger.register_identity(m->identity);
        ledger.set_data_hook(risk::RuleSet::defaults().hook(), risk_member);
    }

    Outbound provisioned_request() {
        establish_session(auth, server);
        deliver_token(auth, server);
        device.on_provision(std::get<wire::DeviceProvision>(auth.provision(link).message));
        return device.build_registration_request();
    }

    void register_device() {
        auto req = provisioned_request();
        auto accepted = server.validate_registration(std::get<wire::RegistrationRequest>(req.message));
        auto act = server.activate_device(accepted);
        device.on_activation(std::get<wire::ActivationResponse>(act.response.message));
        auth.on_connected(act.notice);
    }
};

wire::Reading temp(double v) { return {"temperature_c", v, "C", "acme"}; }

} // namespace

TEST_CASE("honest onboarding through revocation") {
    World w;
    channels::SecureChannel hs({channels::Party::Authenticator, 0}, {channels::Party::Server, 0});
    establish_session(w.auth, w.server, &hs);
    CHECK(w.auth.phase() == Authenticator::Phase::SessionEstablished);
    CHECK(w.server.session_established(0));
    deliver_token(w.auth, w.server, &hs);
    CHECK(w.auth.phase() == Authenticator::Phase::AwaitingToken);

    auto prov = w.auth.provision(w.link);
    CHECK(w.auth.phase() == Authenticator::Phase::TokenForwarded);
    w.device.on_provision(std::get<wire::DeviceProvision>(wire::decode(prov.bytes)));
    CHECK(w.device.phase() == Device::Phase::Provisioned);

    auto req = w.device.build_registration_request();
    CHECK(w.device.phase() == Device::Phase::RequestSent);
    auto accepted = w.server.validate_registration(std::get<wire::RegistrationRequest>(wire::decode(req.bytes)));
    CHECK(accepted.device_id == w.device.device_id());
    auto act = w.server.activate_device(accepted);
    CHECK(w.ledger.tx_count(Channel::Identity) == 1);
    w.device.on_activation(std::get<wire::ActivationResponse>(wire::decode(act.response.bytes)));
    CHECK(w.device.phase() == Device::Phase::Active);
    CHECK(w.device.has_long_lived_token());
    CHECK(w.auth.on_connected(act.notice) == w.device.device_id());
    CHECK(w.auth.phase() == Authenticator::Phase::DeviceConnected);

    auto normal = w.server.ingest_device_data(std::get<wire::DataReport>(w.device.report(temp(22)).message));
    CHECK_FALSE(normal.alert);
    auto hot = w.server.ingest_device_data(std::get<wire::DataReport>(w.device.report(temp(75)).message));
    REQUIRE(hot.alert);
    CHECK(hot.alert->source == hot.entry);
    CHECK(w.ledger.tx_count(Channel::Data) == 2);
    CHECK(w.ledger.tx_count(Channel::RiskManagement) == 1);

    w.server.revoke_device(0, w.auth.revoke(w.device.device_id()));
    CHECK(w.server.crl().contains(w.device.public_key()));
    CHECK(w.server.registry().at(w.device.device_id()).status == DeviceStatus::Deactivated);
    auto recs = w.ledger.query(Channel::Identity, nullptr, w.server_member.identity);
    REQUIRE(recs.size() == 2);
    CHECK(std::get<ledger::DeviceRecord>(recs[0].tx.payload).status == DeviceStatus::Active);
    CHECK(std::get<ledger::DeviceRecord>(recs[1].tx.payload).status == DeviceStatus::Deactivated);
    CHECK(code_of([&] {
              w.server.ingest_device_data(std::get<wire::DataReport>(w.device.report(temp(22)).message));
          }) == ErrorCode::RevokedDevice);
    CHECK(code_of([&] { w.server.revoke_device(0, w.auth.revoke(w.device.device_id())); }) ==
          ErrorCode::AlreadyRevoked);
    CHECK(w.ledger.tx_count(Channel::Data) == 2);
    CHECK(w.server.invariants_hold());
    for (auto ch : ledger::kAllChannels) CHECK(w.ledger.verify_chain(ch));
}

TEST_CASE("session establishment failures") {
    SUBCASE("replayed proof from an earlier session") {
        World w;
        auto hello1 = w.auth.login();
        auto [sh1, ch1] = w.server.on_hello(0, hello1);
        auto [proof1, own1] = w.auth.on_challenge(sh1, ch1);
        w.auth.on_server_proof(w.server.on_auth_proof(0, proof1, own1));

        auto hello2 = w.auth.login();
        auto [sh2, ch2] = w.server.on_hello(0, hello2);
        CHECK(code_of([&] { w.server.on_auth_proof(0, proof1, own1); }) == ErrorCode::NonceMismatch);
        CHECK_FALSE(w.server.session_established(0));
        auto [proof2, own2] = w.auth.on_challenge(sh2, ch2);
        w.auth.on_server_proof(w.server.on_auth_proof(0, proof2, own2));
        CHECK(w.server.session_established(0));
        CHECK(code_of([&] { w.server.on_auth_proof(0, proof2, own2); }) == ErrorCode::NonceMismatch);
    }
    SUBCASE("expired authenticator keys force a fresh login") {
        World w;
        auto hello = w.auth.login();
        auto [sh, ch] = w.server.on_hello(0, hello);
        w.clock.advance(w.env.session_key_ttl + 1);
        CHECK(code_of([&] { w.auth.on_challenge(sh, ch); }) == ErrorCode::KeyExpired);
        establish_session(w.auth, w.server);
        CHECK(w.auth.phase() == Authenticator::Phase::SessionEstablished);
    }
    SUBCASE("proof signed by the wrong key") {
        World w;
        Authenticator other("authenticator#9", 9, w.env);
        other.login();
        auto hello = w.auth.login();
        auto [sh, ch] = w.server.on_hello(0, hello);
        auto [proof, own] = other.on_challenge(sh, ch);
        CHECK(code_of([&] { w.server.on_auth_proof(0, proof, own); }) == ErrorCode::SignatureInvalid);
    }
}

TEST_CASE("token issuance") {
    World w;
    CHECK(code_of([&] { w.server.issue_transient_token(0); }) == ErrorCode::NoSession);
    establish_session(w.auth, w.server);
    w.server.issue_transient_token(0);
    w.server.issue_transient_token(0);
    CHECK(w.server.pending_tokens() == 2);
    CHECK(w.trace.count(channels::EventKind::TokenIssued) == 2);
}

TEST_CASE("independent tokens register two devices") {
    World w;
    establish_session(w.auth, w.server);
    deliver_token(w.auth, w.server);
    w.device.on_provision(std::get<wire::DeviceProvision>(w.auth.provision(w.link).message));
    deliver_token(w.auth, w.server);
    auto link2 = crypto::LinkKey::random(w.rng);
    Device third("device#2", link2, "acme", w.env);
    third.on_provision(std::get<wire::DeviceProvision>(w.auth.provision(link2).message));
    for (auto* d : {&w.device, &third}) {
        auto req = d->build_registration_request();
        auto acc = w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message));
        CHECK(acc.device_id == d->device_id());
        w.server.activate_device(acc);
    }
    CHECK(w.server.registry().size() == 2);
}

TEST_CASE("provisioning errors") {
    World w;
    establish_session(w.auth, w.server);
    deliver_token(w.auth, w.server);
    auto prov = w.auth.provision(crypto::LinkKey::random(w.rng));
    CHECK(code_of([&] { w.device.on_provision(std::get<wire::DeviceProvision>(prov.message)); }) ==
          ErrorCode::LinkKeyMismatch);
    CHECK(w.device.phase() == Device::Phase::Unprovisioned);
    CHECK(code_of([&] { w.device.build_registration_request(); }) == ErrorCode::NotProvisioned);
}

TEST_CASE("stale provisioning replay provisions but cannot register") {
    World w;
    establish_session(w.auth, w.server);
    deliver_token(w.auth, w.server);
    auto prov = w.auth.provision(w.link);
    w.clock.advance(45);
    w.device.on_provision(std::get<wire::DeviceProvision>(prov.message));
    CHECK(w.device.phase() == Device::Phase::Provisioned);
    auto req = w.device.build_registration_request();
    CHECK(code_of([&] { w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)); }) ==
          ErrorCode::TokenExpired);
}

TEST_CASE("token time window") {
    for (int offset : {0, 15, 29}) {
        World w;
        auto req = w.provisioned_request();
        w.clock.advance(offset);
        CHECK_NOTHROW(w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)));
    }
    for (int offset : {30, 31, 90}) {
        World w;
        auto req = w.provisioned_request();
        w.clock.advance(offset);
        CHECK(code_of([&] { w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)); }) ==
              ErrorCode::TokenExpired);
    }
}

TEST_CASE("replayed request is rejected as consumed") {
    World w;
    auto req = w.provisioned_request();
    const auto& msg = std::get<wire::RegistrationRequest>(req.message);
    w.server.activate_device(w.server.validate_registration(msg));
    CHECK(code_of([&] { w.server.validate_registration(msg); }) == ErrorCode::TokenConsumed);
    CHECK(w.trace.count(channels::EventKind::RegistrationSuccess) == 1);
    CHECK(w.server.invariants_hold());
}

TEST_CASE("re-signed request is rejected") {
    World w;
    auto req = w.provisioned_request();
    auto attacker = crypto::kem_keygen(crypto::RoleTag::AuthForServer, 3600, w.rng, w.clock);
    wire::TokenBinding guess{"00000000", crypto::gen_nonce(w.rng)};
    auto et = crypto::hybrid_encrypt(w.auth.server_public_key(), guess.encode(), w.rng);
    auto sig = crypto::sign(crypto::RoleTag::AuthForServer, attacker.secret_key, et.encode());
    wire::RegistrationBody body{attacker.public_key, crypto::gen_pseudo_uuid(w.rng), et, sig};
    wire::RegistrationRequest forged{crypto::hybrid_encrypt(w.auth.server_public_key(), body.encode(), w.rng)};
    CHECK(code_of([&] { w.server.validate_registration(forged); }) == ErrorCode::SignatureInvalid);
    // The honest request is unaffected.
    CHECK_NOTHROW(w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)));
}

TEST_CASE("garbled request is malformed") {
    World w;
    auto req = w.provisioned_request();
    auto msg = std::get<wire::RegistrationRequest>(req.message);
    msg.ciphertext.body[3] ^= 0x10;
    CHECK(code_of([&] { w.server.validate_registration(msg); }) == ErrorCode::Malformed);
}

TEST_CASE("ledger refusal aborts activation") {
    World w(3, ledger::OrgRole::Manufacturer);
    auto req = w.provisioned_request();
    auto acc = w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message));
    CHECK(code_of([&] { w.server.activate_device(acc); }) == ErrorCode::LedgerRejected);
    CHECK(w.server.registry().empty());
    CHECK(w.trace.count(channels::EventKind::RegistrationSuccess) == 0);
    CHECK(w.ledger.tx_count(Channel::Identity) == 0);
}

TEST_CASE("data report checks") {
    World w;
    w.register_device();
    const auto& entry = w.server.registry().at(w.device.device_id());

    wire::DataBody body{w.device.device_id(), temp(20), crypto::gen_long_lived_token(w.rng)};
    wire::DataReport wrong_token{
        crypto::hybrid_encrypt(entry.server_device_keys.public_key, body.encode(), w.rng)};
    CHECK(code_of([&] { w.server.ingest_device_data(wrong_token); }) == ErrorCode::TokenMismatch);

    auto stranger = crypto::kem_keygen(crypto::RoleTag::ServerForDevice, 3600, w.rng, w.clock);
    wire::DataReport unknown{crypto::hybrid_encrypt(stranger.public_key, body.encode(), w.rng)};
    CHECK(code_of([&] { w.server.ingest_device_data(unknown); }) == ErrorCode::UnknownDevice);
    CHECK(w.ledger.tx_count(Channel::Data) == 0);
    CHECK(w.trace.count(channels::EventKind::DataRejected) == 2);
}

TEST_CASE("revocation is scoped to the owning account") {
    World w;
    w.register_device();
    Authenticator other("authenticator#1", 1, w.env);
    establish_session(other, w.server);
    CHECK(code_of([&] { w.server.revoke_device(1, other.revoke(w.device.device_id())); }) ==
          ErrorCode::UnknownDevice);
    CHECK(code_of([&] { w.server.revoke_device(0, w.auth.revoke(crypto::gen_pseudo_uuid(w.rng))); }) ==
          ErrorCode::UnknownDevice);
}

TEST_CASE("observed request does not reveal device secrets") {
    World w;
    auto req = w.provisioned_request();
    channels::AdversaryKnowledge k;
    k.add(req.term);
    k.add(channels::make_atom(channels::AtomKind::PublicKey, w.auth.server_public_key()));
    auto closure = channels::derive_closure(k);
    CHECK_FALSE(closure.knows_value(w.device.secret_key_for_fixture()));
    CHECK_FALSE(closure.knows_atom(channels::AtomKind::SecretKey, w.device.secret_key_for_fixture()));
}

TEST_CASE("activation response is only readable by its device") {
    World w;
    auto req = w.provisioned_request();
    auto act = w.server.activate_device(
        w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)));
    Device impostor("device#x", w.link, "acme", w.env);
    impostor.on_provision(std::get<wire::DeviceProvision>(
        [&] {
            deliver_token(w.auth, w.server);
            return w.auth.provision(w.link);
        }()
            .message));
    impostor.build_registration_request();
    CHECK(code_of([&] { impostor.on_activation(std::get<wire::ActivationResponse>(act.response.message)); }) ==
          ErrorCode::Malformed);
    CHECK(impostor.phase() == Device::Phase::RequestSent);
}

TEST_CASE("device retries resend the same request") {
    World w;
    Device d("device#r", w.link, "acme", w.env, 2);
    establish_session(w.auth, w.server);
    deliver_token(w.auth, w.server);
    d.on_provision(std::get<wire::DeviceProvision>(w.auth.provision(w.link).message));
    auto first = d.build_registration_request();
    auto r1 = d.retry();
    auto r2 = d.retry();
    REQUIRE(r1);
    REQUIRE(r2);
    CHECK(r1->bytes == first.bytes);
    CHECK_FALSE(d.retry());
}

TEST_CASE("authenticator phase table") {
    using P = Authenticator::Phase;
    // For each reachable phase, the set of operations that must be refused.
    struct Row {
        P phase;
        bool token_request_ok, provision_ok, revoke_ok;
    };
    const Row table[] = {
        {P::Idle, false, false, false},
        {P::SessionEstablished, true, false, true},
        {P::AwaitingToken, false, true, false},
        {P::TokenForwarded, true, false, true},
        {P::DeviceConnected, true, false, true},
    };
    for (const auto& row : table) {
        CAPTURE(to_string(row.phase));
        auto drive = [&](World& w) {
            w.auth.login();
            if (row.phase == P::Idle) return;
            establish_session(w.auth, w.server);
            if (row.phase == P::SessionEstablished) return;
            deliver_token(w.auth, w.server);
            if (row.phase == P::AwaitingToken) return;
            auto prov = w.auth.provision(w.link);
            if (row.phase == P::TokenForwarded) return;
            w.device.on_provision(std::get<wire::DeviceProvision>(prov.message));
            auto req = w.device.build_registration_request();
            auto act = w.server.activate_device(
                w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)));
            w.auth.on_connected(act.notice);
        };
        {
            World w;
            drive(w);
            REQUIRE(w.auth.phase() == row.phase);
            if (row.token_request_ok)
                CHECK_NOTHROW(w.auth.request_token());
            else
                CHECK(code_of([&] { w.auth.request_token(); }) == ErrorCode::PhaseViolation);
        }
        {
            World w;
            drive(w);
            if (row.provision_ok)
                CHECK_NOTHROW(w.auth.provision(w.link));
            else
                CHECK(code_of([&] { w.auth.provision(w.link); }) == ErrorCode::PhaseViolation);
        }
        {
            World w;
            drive(w);
            if (row.revoke_ok)
                CHECK_NOTHROW(w.auth.revoke(w.device.device_id()));
            else
                CHECK(code_of([&] { w.auth.revoke(w.device.device_id()); }) == ErrorCode::PhaseViolation);
        }
        {
            World w;
            drive(w);
            wire::TokenDelivery junk;
            if (row.phase != P::AwaitingToken)
                CHECK(code_of([&] { w.auth.on_token(junk); }) == ErrorCode::PhaseViolation);
        }
    }
}

TEST_CASE("device phase table") {
    using P = Device::Phase;
    for (auto phase : {P::Unprovisioned, P::Provisioned, P::RequestSent, P::Active}) {
        CAPTURE(to_string(phase));
        World w;
        Outbound prov;
        Activation act;
        establish_session(w.auth, w.server);
        deliver_token(w.auth, w.server);
        prov = w.auth.provision(w.link);
        if (phase != P::Unprovisioned) w.device.on_provision(std::get<wire::DeviceProvision>(prov.message));
        std::optional<Outbound> req;
        if (phase == P::RequestSent || phase == P::Active) req = w.device.build_registration_request();
        if (phase == P::Active) {
            act = w.server.activate_device(
                w.server.validate_registration(std::get<wire::RegistrationRequest>(req->message)));
            w.device.on_activation(std::get<wire::ActivationResponse>(act.response.message));
        }
        REQUIRE(w.device.phase() == phase);
        CHECK(w.device.has_long_lived_token() == (phase == P::Active));

        bool provision_ok = phase == P::Unprovisioned || phase == P::Provisioned;
        if (!provision_ok)
            CHECK(code_of([&] { w.device.on_provision(std::get<wire::DeviceProvision>(prov.message)); }) ==
                  ErrorCode::PhaseViolation);
        if (phase == P::Unprovisioned)
            CHECK(code_of([&] { w.device.build_registration_request(); }) == ErrorCode::NotProvisioned);
        if (phase == P::RequestSent || phase == P::Active)
            CHECK(code_of([&] { w.device.build_registration_request(); }) == ErrorCode::PhaseViolation);
        if (phase != P::Active) CHECK(code_of([&] { w.device.report(temp(1)); }) == ErrorCode::PhaseViolation);
        if (phase != P::RequestSent)
            CHECK(code_of([&] { w.device.on_activation({}); }) == ErrorCode::PhaseViolation);
    }
}

TEST_CASE("registry and CRL stay disjoint across lifecycles") {
    World w;
    crypto::SeededRng pick(17);
    std::vector<std::unique_ptr<Device>> devices;
    std::vector<crypto::LinkKey> links;
    establish_session(w.auth, w.server);
    for (int i = 0; i < 8; ++i) {
        links.push_back(crypto::LinkKey::random(w.rng));
        devices.push_back(std::make_unique<Device>("device#" + std::to_string(i), links.back(), "acme", w.env));
        deliver_token(w.auth, w.server);
        devices.back()->on_provision(std::get<wire::DeviceProvision>(w.auth.provision(links.back()).message));
        auto req = devices.back()->build_registration_request();
        auto act = w.server.activate_device(
            w.server.validate_registration(std::get<wire::RegistrationRequest>(req.message)));
        devices.back()->on_activation(std::get<wire::ActivationResponse>(act.response.message));
        CHECK(w.server.invariants_hold());
    }
    for (int round = 0; round < 20; ++round) {
        auto& d = *devices[pick.below(devices.size())];
        try {
            w.server.revoke_device(0, w.auth.revoke(d.device_id()));
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AlreadyRevoked);
        }
        CHECK(w.server.invariants_hold());
    }
}
