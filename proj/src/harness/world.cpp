#include "onboard/harness/world.hpp"

#include "onboard/error.hpp"

#include <algorithm>
#include <sstream>

namespace onboard::harness {

using namespace channels;
using ledger::OrgRole;

std::string_view to_string(ForgeKind kind) {
    switch (kind) {
    case ForgeKind::Registration: return "registration";
    case ForgeKind::TokenSwap: return "token-swap";
    case ForgeKind::DataReport: return "data-report";
    case ForgeKind::Provision: return "provision";
    case ForgeKind::Activation: return "activation";
    }
    return "?";
}

ForgeKind parse_forge(std::string_view name) {
    for (auto k : {ForgeKind::Registration, ForgeKind::TokenSwap, ForgeKind::DataReport, ForgeKind::Provision,
                   ForgeKind::Activation})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::ScenarioInvalid, "unknown forge kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Forger

Forger::Forger(crypto::Rng& rng, const crypto::Clock& clock, AdversaryKnowledge& knowledge,
               const PublicDirectory& directory)
    : rng_(rng), clock_(clock), knowledge_(knowledge), directory_(directory) {
    keys_ = crypto::kem_keygen(crypto::RoleTag::AuthForServer, 10LL * 365 * 24 * 3600, rng_, clock_);
    link_key_ = crypto::LinkKey::random(rng_);
    knowledge_.add(make_atom(AtomKind::SecretKey, keys_.secret_key, keys_.public_key));
    knowledge_.add(make_atom(AtomKind::PublicKey, keys_.public_key));
    knowledge_.add(make_atom(AtomKind::LinkKey, link_key_.to_bytes()));
}

Envelope Forger::to(Endpoint dest, roles::Outbound out) {
    return {0, {Party::Adversary, 0}, dest, std::move(out.bytes), std::move(out.term)};
}

std::optional<Envelope> Forger::registration(bool try_swap) {
    if (directory_.server_session_keys.empty()) return std::nullopt;
    Bytes server_pk = directory_.server_session_keys[rng_.below(directory_.server_session_keys.size())];

    std::optional<wire::HybridCiphertext> et;
    std::optional<crypto::Signature> sig;
    TermPtr et_term, sig_term;
    if (try_swap) {
        // Reuse an honest (encrypted_token, signature) pair, if the closure
        // has ever exposed one.
        auto closure = derive_closure(knowledge_);
        for (const auto& [id, t] : closure.terms()) {
            if (t->kind != TermKind::Signature || t->children.empty()) continue;
            const auto& msg = t->children.front();
            if (msg->kind != TermKind::HybridEnc || t->key == keys_.public_key) continue;
            try {
                et = wire::HybridCiphertext::decode(msg->value);
                sig = wire::decode_signature(t->value);
                et_term = msg;
                sig_term = t;
                server_pk = msg->key;
                break;
            } catch (const Error&) {
                et.reset();
                sig.reset();
            }
        }
    }
    if (!et) {
        wire::TokenBinding guess{crypto::hotp(rng_.bytes(20), rng_.next_u64()), crypto::gen_nonce(rng_)};
        et = crypto::hybrid_encrypt(server_pk, guess.encode(), rng_);
        sig = crypto::sign(crypto::RoleTag::AuthForServer, keys_.secret_key, et->encode());
        et_term = make_hybrid(server_pk, et->encode(), roles::binding_term(guess));
        sig_term = make_signature(keys_.public_key, wire::encode_signature(*sig), et_term);
    }
    auto device_id = crypto::gen_pseudo_uuid(rng_);
    claimed_.push_back(device_id);
    wire::RegistrationBody body{keys_.public_key, device_id, *et, *sig};
    wire::RegistrationRequest msg{crypto::hybrid_encrypt(server_pk, body.encode(), rng_)};
    auto term = make_hybrid(server_pk, msg.ciphertext.encode(),
                            make_pair({make_atom(AtomKind::PublicKey, keys_.public_key),
                                       make_atom(AtomKind::DeviceId, device_id.to_bytes()), et_term, sig_term}));
    return to({Party::Server, 0}, roles::make_outbound(std::move(msg), std::move(term)));
}

std::optional<Envelope> Forger::forge(ForgeKind kind, const std::vector<Endpoint>& devices) {
    switch (kind) {
    case ForgeKind::Registration: return registration(false);
    case ForgeKind::TokenSwap: return registration(true);
    case ForgeKind::DataReport: {
        if (directory_.server_device_keys.empty()) return std::nullopt;
        const auto& pk = directory_.server_device_keys[rng_.below(directory_.server_device_keys.size())];
        wire::DataBody body{crypto::gen_pseudo_uuid(rng_), {"temperature_c", 99.0, "C", "acme"},
                            crypto::gen_long_lived_token(rng_)};
        wire::DataReport msg{crypto::hybrid_encrypt(pk, body.encode(), rng_)};
        auto term = make_hybrid(pk, msg.ciphertext.encode(), make_atom(AtomKind::Data, body.encode()));
        return to({Party::Server, 0}, roles::make_outbound(std::move(msg), std::move(term)));
    }
    case ForgeKind::Provision: {
        if (devices.empty()) return std::nullopt;
        auto et = crypto::hybrid_encrypt(keys_.public_key, rng_.bytes(24), rng_);
        wire::ProvisionBundle bundle{"https://attacker.invalid", keys_.public_key, et,
                                     crypto::sign(crypto::RoleTag::AuthForServer, keys_.secret_key, et.encode())};
        wire::DeviceProvision msg{crypto::link_seal(link_key_, bundle.encode(), rng_)};
        auto term = make_sealed(link_key_.to_bytes(), msg.sealed.encode(), make_atom(AtomKind::Data, bundle.encode()));
        return to(devices[rng_.below(devices.size())], roles::make_outbound(std::move(msg), std::move(term)));
    }
    case ForgeKind::Activation: {
        if (directory_.device_keys.empty() || devices.empty()) return std::nullopt;
        auto pick = rng_.below(directory_.device_keys.size());
        const auto& pk = directory_.device_keys[pick];
        wire::ActivationBody body{crypto::gen_long_lived_token(rng_), keys_.public_key};
        wire::ActivationResponse msg{crypto::hybrid_encrypt(pk, body.encode(), rng_)};
        auto term = make_hybrid(pk, msg.ciphertext.encode(),
                                make_pair({make_atom(AtomKind::LongLivedToken, body.long_lived_token.to_bytes()),
                                           make_atom(AtomKind::PublicKey, keys_.public_key)}));
        return to(devices[rng_.below(devices.size())], roles::make_outbound(std::move(msg), std::move(term)));
    }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Strategies

std::optional<AdversaryDecision> DeliverAll::decide(AdversaryView& view) {
    const auto& custody = view.channel.in_custody();
    if (custody.empty()) return std::nullopt;
    return act(ActionKind::Deliver, custody.front());
}

ActionWeights ActionWeights::parse(std::string_view spec) {
    ActionWeights w;
    std::stringstream ss{std::string(spec)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "weight '" + item + "' needs key=value");
        auto key = item.substr(0, eq);
        double value = 0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigInvalid, "weight '" + item + "' is not a number");
        }
        if (!(value >= 0)) throw Error(ErrorCode::ConfigInvalid, "weight '" + item + "' must be non-negative");
        if (key == "deliver") w.deliver = value;
        else if (key == "drop") w.drop = value;
        else if (key == "replay") w.replay = value;
        else if (key == "tamper") w.tamper = value;
        else if (key == "inject") w.inject = value;
        else if (key == "delay") w.delay = value;
        else if (key == "budget") w.budget = static_cast<std::size_t>(value);
        else throw Error(ErrorCode::ConfigInvalid, "unknown weight '" + key + "'");
    }
    if (w.deliver + w.drop + w.replay + w.tamper + w.inject + w.delay <= 0)
        throw Error(ErrorCode::ConfigInvalid, "all weights are zero");
    return w;
}

std::string ActionWeights::to_string() const {
    std::ostringstream os;
    os << "deliver=" << deliver << ",drop=" << drop << ",replay=" << replay << ",tamper=" << tamper
       << ",inject=" << inject << ",delay=" << delay << ",budget=" << budget;
    return os.str();
}

std::optional<AdversaryDecision> Randomized::decide(AdversaryView& view) {
    const auto& custody = view.channel.in_custody();
    const auto history = view.channel.sent_count();
    auto& rng = view.rng;

    auto inject = [&]() -> std::optional<AdversaryDecision> {
        static constexpr ForgeKind kinds[] = {ForgeKind::Registration, ForgeKind::TokenSwap, ForgeKind::DataReport,
                                              ForgeKind::Provision, ForgeKind::Activation};
        auto env = view.forger.forge(kinds[rng.below(5)], view.devices);
        if (!env) return std::nullopt;
        auto d = act(ActionKind::Inject);
        d.injected = std::move(env);
        return d;
    };

    if (custody.empty()) {
        // Idle channel: occasionally spend budget on a replay or injection.
        if (budget_ == 0 || history == 0 || rng.below(2) == 0) return std::nullopt;
        --budget_;
        if (rng.below(2) == 0) return act(ActionKind::Replay, rng.below(history));
        auto d = inject();
        if (d) return d;
        return act(ActionKind::Replay, rng.below(history));
    }

    const auto target = custody[rng.below(custody.size())];
    const double weights[] = {weights_.deliver, weights_.drop, weights_.replay,
                              weights_.tamper,  weights_.inject, weights_.delay};
    double total = 0;
    for (int i = 1; i < 6; ++i) total += budget_ > 0 ? weights[i] : 0;
    total += weights[0];
    if (total <= 0) return act(ActionKind::Deliver, target);
    double r = rng.unit() * total;
    int pick = 0;
    for (int i = 0; i < 6; ++i) {
        double w = (i == 0 || budget_ > 0) ? weights[i] : 0;
        if (r < w) {
            pick = i;
            break;
        }
        r -= w;
        pick = i;
    }
    if (pick == 0) return act(ActionKind::Deliver, target);
    --budget_;
    switch (pick) {
    case 1: return act(ActionKind::Drop, target);
    case 2: return act(ActionKind::Replay, rng.below(history));
    case 3: {
        auto d = act(ActionKind::TamperBit, target);
        d.bit = rng.below(view.channel.envelope(target).bytes.size() * 8);
        return d;
    }
    case 4: {
        auto d = inject();
        if (d) return d;
        return act(ActionKind::Deliver, target);
    }
    default: {
        auto d = act(ActionKind::Delay, target);
        d.delay_seconds = 1 + static_cast<std::int64_t>(rng.below(45));
        return d;
    }
    }
}

std::optional<AdversaryDecision> Scripted::decide(AdversaryView& view) {
    const auto& custody = view.channel.in_custody();
    while (next_ < steps_.size()) {
        const auto& s = steps_[next_];
        if (s.action == ActionKind::Inject) {
            ++next_;
            auto env = view.forger.forge(s.forge, view.devices);
            if (!env) {
                ++skipped_;
                continue;
            }
            auto d = act(ActionKind::Inject);
            d.delay_seconds = s.delay_seconds;
            d.injected = std::move(env);
            return d;
        }
        if (!view.channel.has(s.target)) {
            // Not sent yet: let honest traffic move until it is.
            if (!custody.empty()) return act(ActionKind::Deliver, custody.front());
            ++skipped_;
            ++next_;
            continue;
        }
        bool needs_custody = s.action != ActionKind::Replay;
        if (needs_custody && std::find(custody.begin(), custody.end(), s.target) == custody.end()) {
            ++skipped_;
            ++next_;
            continue;
        }
        ++next_;
        auto d = act(s.action, s.target);
        d.bit = s.bit;
        d.delay_seconds = s.delay_seconds;
        return d;
    }
    return fallback_.decide(view);
}

// ---------------------------------------------------------------------------
// RunResult

bool RunResult::rejected_with(ErrorCode code) const {
    return std::any_of(rejections.begin(), rejections.end(), [&](const Rejection& r) { return r.code == code; });
}

std::vector<LemmaVerdict> RunResult::verdicts() const {
    return {check_authentication(trace), check_token_integrity(trace),
            check_keypair_confidentiality(trace, knowledge, targets)};
}

bool RunResult::lemmas_hold() const {
    for (const auto& v : verdicts())
        if (!v.holds) return false;
    return true;
}

// ---------------------------------------------------------------------------
// World

World::World(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      seed_(seed),
      root_(seed),
      role_rng_(root_.fork("roles")),
      adversary_rng_(root_.fork("adversary")),
      clock_(scenario_.start) {
    scenario_.validate();
    env_ = roles::RoleEnv{&role_rng_, &clock_, &trace_, &book_};
    env_.session_key_ttl = scenario_.session_key_ttl;
    env_.device_key_ttl = scenario_.device_key_ttl;
    env_.totp_step = scenario_.totp_step;

    auto org_rng = root_.fork("orgs");
    members_.push_back(ledger::OrgMember::create("server", OrgRole::Server, org_rng));
    members_.push_back(ledger::OrgMember::create("risk-engine", OrgRole::RiskEngine, org_rng));
    members_.push_back(ledger::OrgMember::create("insurer", OrgRole::Insurer, org_rng));
    members_.push_back(ledger::OrgMember::create("emergency", OrgRole::EmergencyService, org_rng));
    std::set<std::string> makers;
    for (const auto& d : scenario_.devices) makers.insert(d.manufacturer);
    for (const auto& m : makers) members_.push_back(ledger::OrgMember::create(m, OrgRole::Manufacturer, org_rng));

    ledger_ = std::make_unique<ledger::Ledger>(scenario_.ledger, scenario_.access);
    for (const auto& m : members_) ledger_->register_identity(m.identity);
    ledger_->set_data_hook(scenario_.rules.hook(), member(OrgRole::RiskEngine));
    server_ = std::make_unique<roles::Server>(env_, *ledger_, member(OrgRole::Server));

    for (std::uint32_t a = 0; a < scenario_.authenticators; ++a) {
        authenticators_.push_back(
            std::make_unique<roles::Authenticator>("authenticator#" + std::to_string(a), a, env_));
        secure_.emplace_back(Endpoint{Party::Authenticator, a}, Endpoint{Party::Server, 0});
    }
    for (std::size_t i = 0; i < scenario_.devices.size(); ++i) {
        const auto& spec = scenario_.devices[i];
        link_keys_.push_back(crypto::LinkKey::random(role_rng_));
        devices_.push_back(
            std::make_unique<roles::Device>(spec.name, link_keys_.back(), spec.manufacturer, env_, spec.retries));
        device_endpoints_.push_back({Party::Device, static_cast<std::uint32_t>(i)});
    }
    forger_ = std::make_unique<Forger>(adversary_rng_, clock_, public_.knowledge(), directory_);
}

World::~World() = default;

const ledger::OrgMember& World::member(OrgRole role) const {
    for (const auto& m : members_)
        if (m.identity.role == role) return m;
    throw Error(ErrorCode::UnknownRole, "no member with that role");
}

void World::grant_adversary(TermPtr term) { public_.knowledge().add(std::move(term)); }

void World::log(std::string line) {
    if (sink_) sink_(line);
    transcript_.push_back(std::move(line));
}

void World::note_rejection(const std::string& receiver, const Error& e) {
    rejections_.push_back({receiver, e.code(), e.what()});
    log("  " + receiver + " rejected: " + std::string(to_string(e.code())));
}

void World::send_public(Endpoint from, Endpoint to, const roles::Outbound& out) {
    auto index = public_.send(from, to, out.bytes, out.term);
    log("  [H_p #" + std::to_string(index) + "] " + from.name() + " -> " + to.name() + " " +
        std::string(wire::to_string(wire::tag_of(out.message))) + " (" + std::to_string(out.bytes.size()) +
        " bytes)");
}

void World::publish_keys() {
    auto add_all = [&](const std::vector<Bytes>& keys) {
        for (const auto& k : keys) public_.knowledge().add(make_atom(AtomKind::PublicKey, k));
    };
    add_all(directory_.server_session_keys);
    add_all(directory_.server_device_keys);
    add_all(directory_.device_keys);
    add_all(directory_.authenticator_keys);
}

void World::capture_targets(const crypto::PseudoUuid& device_id) {
    const auto& entry = server_->registry().at(device_id);
    auto add = [&](TermPtr t) {
        if (target_ids_.insert(t->id).second) targets_.terms.push_back(std::move(t));
    };
    const auto& sd = entry.server_device_keys;
    add(make_atom(AtomKind::SecretKey, sd.secret_key, sd.public_key));
    auto td = make_atom(AtomKind::LongLivedToken, entry.long_lived_token.to_bytes());
    add(td);
    add(make_pair({td, make_atom(AtomKind::PublicKey, sd.public_key)}));
}

void World::dispatch(const Delivery& delivery) {
    wire::Message message;
    const std::string receiver = delivery.to.name();
    try {
        message = wire::decode(delivery.bytes);
    } catch (const Error& e) {
        note_rejection(receiver, e);
        return;
    }
    if (delivery.to.party == Party::Server)
        to_server(delivery, message);
    else if (delivery.to.party == Party::Device && delivery.to.instance < devices_.size())
        to_device(delivery.to.instance, delivery, message);
}

void World::to_server(const Delivery& delivery, const wire::Message& message) {
    try {
        if (const auto* req = std::get_if<wire::RegistrationRequest>(&message)) {
            auto accepted = server_->validate_registration(*req);
            auto act = server_->activate_device(accepted);
            bool honest = std::any_of(devices_.begin(), devices_.end(),
                                      [&](const auto& d) { return d->device_id() == accepted.device_id; });
            if (honest) capture_targets(accepted.device_id);
            directory_.server_device_keys.push_back(
                server_->registry().at(accepted.device_id).server_device_keys.public_key);
            publish_keys();
            log("  server: registration accepted for " + accepted.device_id.hex() + ", identity record at height " +
                std::to_string(act.record.height));
            Endpoint reply_to{Party::Adversary, 0};
            if (delivery.via != ActionKind::Inject) reply_to = public_.envelope(delivery.source_index).from;
            send_public({Party::Server, 0}, reply_to, act.response);

            auto& hs = secure_.at(act.account);
            hs.send({Party::Server, 0}, act.notice);
            if (auto notice = hs.recv({Party::Authenticator, act.account})) {
                try {
                    authenticators_.at(act.account)->on_connected(std::get<wire::ConnectedNotice>(*notice));
                    log("  [H_s] authenticator#" + std::to_string(act.account) + " notified: connected");
                } catch (const Error& e) {
                    note_rejection("authenticator#" + std::to_string(act.account), e);
                }
            }
        } else if (const auto* report = std::get_if<wire::DataReport>(&message)) {
            auto ingested = server_->ingest_device_data(*report);
            log("  server: data committed at Data height " + std::to_string(ingested.entry.height));
            if (ingested.alert)
                log("  risk engine: " + std::string(ledger::to_string(ingested.alert->severity)) + " alert on " +
                    ingested.alert->metric);
        } else {
            throw Error(ErrorCode::Malformed, "server: unexpected " +
                                                  std::string(wire::to_string(wire::tag_of(message))) +
                                                  " on the public channel");
        }
    } catch (const Error& e) {
        note_rejection("server", e);
    }
}

void World::to_device(std::size_t index, const Delivery&, const wire::Message& message) {
    auto& device = *devices_[index];
    try {
        if (const auto* prov = std::get_if<wire::DeviceProvision>(&message)) {
            device.on_provision(*prov);
            log("  " + device.name() + ": provisioned");
            if (std::find(directory_.device_keys.begin(), directory_.device_keys.end(), device.public_key()) ==
                directory_.device_keys.end()) {
                directory_.device_keys.push_back(device.public_key());
                publish_keys();
            }
            if (scenario_.provisioning_delay > 0) {
                clock_.advance(scenario_.provisioning_delay);
                log("  clock +" + std::to_string(scenario_.provisioning_delay) + "s");
            }
            send_public(device_endpoints_[index], {Party::Server, 0}, device.build_registration_request());
        } else if (const auto* act = std::get_if<wire::ActivationResponse>(&message)) {
            device.on_activation(*act);
            log("  " + device.name() + ": active");
        } else {
            throw Error(ErrorCode::Malformed, device.name() + ": unexpected " +
                                                  std::string(wire::to_string(wire::tag_of(message))));
        }
    } catch (const Error& e) {
        note_rejection(device.name(), e);
    }
}

void World::drive(Strategy& strategy, const char* phase) {
    log("-- " + std::string(phase));
    AdversaryView view{public_, *forger_, adversary_rng_, device_endpoints_};
    for (std::size_t step = 0; step < scenario_.max_steps; ++step) {
        auto decision = strategy.decide(view);
        if (!decision) {
            bool resent = false;
            for (std::size_t i = 0; i < devices_.size(); ++i) {
                if (auto again = devices_[i]->retry()) {
                    log("  " + devices_[i]->name() + ": retrying registration");
                    send_public(device_endpoints_[i], {Party::Server, 0}, *again);
                    resent = true;
                }
            }
            if (!resent) return;
            continue;
        }
        if (decision->kind == ActionKind::Inject && !decision->injected) continue;
        if (decision->delay_seconds > 0) {
            clock_.advance(decision->delay_seconds);
            log("  clock +" + std::to_string(decision->delay_seconds) + "s");
        }
        std::string what = std::string(to_string(decision->kind));
        if (decision->kind == ActionKind::Inject)
            what += " -> " + decision->injected->to.name();
        else
            what += " #" + std::to_string(decision->target);
        if (decision->kind == ActionKind::TamperBit) what += " bit " + std::to_string(decision->bit);
        if (decision->kind != ActionKind::Deliver) {
            TraceEvent e;
            e.role = "adversary";
            e.kind = EventKind::AdversaryAction;
            e.detail = what;
            trace_.append(std::move(e));
        }
        log("adversary: " + what);
        std::vector<Delivery> deliveries;
        try {
            deliveries = public_.apply(*decision);
        } catch (const std::exception& ex) {
            log("  adversary action failed: " + std::string(ex.what()));
            continue;
        }
        for (const auto& d : deliveries) dispatch(d);
    }
    log("  step budget exhausted");
}

RunResult World::run(Strategy& strategy) {
    if (ran_) throw std::logic_error("World::run called twice");
    ran_ = true;
    log("scenario " + scenario_.name + ", seed " + std::to_string(seed_) + ", adversary " + strategy.name());

    log("-- sessions");
    for (std::size_t a = 0; a < authenticators_.size(); ++a) {
        auto& auth = *authenticators_[a];
        try {
            roles::establish_session(auth, *server_, &secure_[a]);
            directory_.authenticator_keys.push_back(auth.public_key());
            directory_.server_session_keys.push_back(auth.server_public_key());
            log("  [H_s] " + auth.name() + " <-> server: mutual nonce proofs verified");
        } catch (const Error& e) {
            note_rejection(auth.name(), e);
        }
    }
    publish_keys();

    log("-- provisioning");
    for (std::size_t i = 0; i < devices_.size(); ++i) {
        const auto& spec = scenario_.devices[i];
        auto& auth = *authenticators_[spec.authenticator];
        try {
            roles::deliver_token(auth, *server_, &secure_[spec.authenticator]);
            log("  [H_s] server -> " + auth.name() + ": transient token for " + spec.name);
            auto key = spec.wrong_link_key ? crypto::LinkKey::random(role_rng_) : link_keys_[i];
            send_public({Party::Authenticator, spec.authenticator}, device_endpoints_[i], auth.provision(key));
        } catch (const Error& e) {
            note_rejection(auth.name(), e);
        }
    }
    drive(strategy, "registration");

    bool any_reading = false;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
        if (devices_[i]->phase() != roles::Device::Phase::Active) continue;
        for (const auto& r : scenario_.devices[i].readings) {
            if (!any_reading) log("-- reporting");
            any_reading = true;
            log("  " + devices_[i]->name() + ": " + r.metric + " = " + std::to_string(r.value) + " " + r.unit);
            send_public(device_endpoints_[i], {Party::Server, 0}, devices_[i]->report(r));
        }
    }
    if (any_reading) drive(strategy, "data");

    bool any_revocation = false;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
        const auto& spec = scenario_.devices[i];
        if (!spec.revoke) continue;
        if (!any_revocation) log("-- revocation");
        any_revocation = true;
        auto& auth = *authenticators_[spec.authenticator];
        try {
            auto& hs = secure_[spec.authenticator];
            hs.send({Party::Authenticator, spec.authenticator}, auth.revoke(devices_[i]->device_id()));
            auto req = hs.recv({Party::Server, 0});
            auto where = server_->revoke_device(spec.authenticator, std::get<wire::RevocationRequest>(*req));
            log("  [H_s] " + auth.name() + " revoked " + spec.name + ", identity record at height " +
                std::to_string(where.height));
        } catch (const Error& e) {
            note_rejection("server", e);
        }
        if (devices_[i]->phase() != roles::Device::Phase::Active) continue;
        for (const auto& r : spec.readings_after_revoke) {
            log("  " + devices_[i]->name() + ": " + r.metric + " = " + std::to_string(r.value) + " " + r.unit);
            send_public(device_endpoints_[i], {Party::Server, 0}, devices_[i]->report(r));
        }
    }
    if (any_revocation) drive(strategy, "after revocation");

    for (const auto& d : devices_) {
        if (d->public_key().empty()) continue;
        auto t = make_atom(AtomKind::SecretKey, d->secret_key_for_fixture(), d->public_key());
        if (target_ids_.insert(t->id).second) targets_.terms.push_back(t);
    }
    log("-- done: " + std::to_string(server_->registry().size()) + " registered, " +
        std::to_string(rejections_.size()) + " rejections");

    RunResult r;
    r.seed = seed_;
    r.strategy = strategy.name();
    r.trace = trace_;
    r.knowledge = public_.knowledge();
    r.targets = targets_;
    r.rejections = rejections_;
    r.transcript = transcript_;
    r.snapshot = ledger_->snapshot_lines();
    for (const auto& d : devices_) r.honest_devices.push_back(d->device_id());
    r.adversary_devices = forger_->claimed_ids();
    r.public_messages = public_.sent_count();
    return r;
}

} // namespace onboard::harness
