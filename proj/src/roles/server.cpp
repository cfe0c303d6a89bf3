#include "onboard/roles/roles.hpp"

namespace onboard::roles {

using namespace channels;
using crypto::RoleTag;
using ledger::DeviceStatus;

Server::Server(RoleEnv env, ledger::Ledger& ledger, ledger::OrgMember identity, ServerConfig config)
    : env_(env), ledger_(ledger), identity_(std::move(identity)), config_(std::move(config)) {}

void Server::record(EventKind kind, std::string device, std::string token_ref, std::string nonce_ref,
                    std::string signature_ref, std::string detail) {
    if (!env_.trace) return;
    TraceEvent e;
    e.role = "server";
    e.kind = kind;
    e.device_id = std::move(device);
    e.token_ref = std::move(token_ref);
    e.nonce_ref = std::move(nonce_ref);
    e.signature_ref = std::move(signature_ref);
    e.detail = std::move(detail);
    env_.trace->append(std::move(e));
}

void Server::reject(EventKind kind, ErrorCode code, const std::string& message, std::string device) {
    record(kind, std::move(device), {}, {}, {}, std::string(to_string(code)));
    throw Error(code, "server: " + message);
}

Server::Session& Server::current_session(std::uint32_t account) {
    auto it = latest_session_.find(account);
    if (it == latest_session_.end()) throw Error(ErrorCode::NoSession, "server: no session for account");
    return sessions_[it->second];
}

bool Server::session_established(std::uint32_t account) const {
    auto it = latest_session_.find(account);
    return it != latest_session_.end() && sessions_[it->second].established;
}

std::pair<wire::SessionHello, wire::NonceChallenge> Server::on_hello(std::uint32_t account,
                                                                     const wire::SessionHello& hello) {
    if (hello.public_key.size() != crypto::default_kem().public_key_size() + 32)
        throw Error(ErrorCode::Malformed, "server: bad authenticator public key");
    Session s;
    s.account = account;
    s.authenticator_pk = hello.public_key;
    s.keys = crypto::kem_keygen(RoleTag::ServerForAuth, env_.session_key_ttl, *env_.rng, *env_.clock);
    s.challenge = crypto::gen_nonce(*env_.rng);
    sessions_.push_back(s);
    latest_session_[account] = sessions_.size() - 1;
    return {wire::SessionHello{s.keys.public_key}, wire::NonceChallenge{s.challenge}};
}

wire::NonceResponse Server::on_auth_proof(std::uint32_t account, const wire::NonceResponse& proof,
                                          const wire::NonceChallenge& auth_challenge) {
    auto& current = current_session(account);
    crypto::require_fresh(current.keys, env_.clock->now());

    // Old session keys stay valid until their TTL, so a proof replayed from an
    // earlier session still opens; it then fails the nonce check below.
    std::optional<wire::SignedNonce> opened;
    const Session* opener = nullptr;
    for (auto i = sessions_.size(); i-- > 0;) {
        const auto& s = sessions_[i];
        if (s.account != account) continue;
        try {
            opened = wire::SignedNonce::decode(crypto::hybrid_decrypt(s.keys.secret_key, proof.ciphertext));
            opener = &s;
            break;
        } catch (const Error&) {
        }
    }
    if (!opened) throw Error(ErrorCode::Malformed, "server: unreadable authenticator proof");
    if (!crypto::verify(opener->authenticator_pk, session_nonce_message(opened->nonce), opened->signature) ||
        opened->signature.signer_tag != RoleTag::AuthForServer)
        throw Error(ErrorCode::SignatureInvalid, "server: authenticator signature does not verify");
    if (opener != &current || current.established || opened->nonce != current.challenge)
        throw Error(ErrorCode::NonceMismatch, "server: proof does not answer the current challenge");

    current.established = true;
    record(EventKind::SessionEstablished, {}, {}, {}, {}, "account " + std::to_string(account));
    wire::SignedNonce answer{
        auth_challenge.nonce,
        crypto::sign(RoleTag::ServerForAuth, current.keys.secret_key, session_nonce_message(auth_challenge.nonce))};
    return {crypto::hybrid_encrypt(current.authenticator_pk, answer.encode(), *env_.rng)};
}

wire::TokenDelivery Server::issue_transient_token(std::uint32_t account) {
    if (!session_established(account)) throw Error(ErrorCode::NoSession, "server: no established session");
    auto index = latest_session_.at(account);
    auto& s = sessions_[index];
    crypto::require_fresh(s.keys, env_.clock->now());
    PendingToken p;
    p.session = index;
    p.secret = env_.rng->bytes(crypto::kTotpSecretSize);
    p.token = crypto::totp_generate(p.secret, env_.clock->now(), env_.totp_step).digits;
    pending_.push_back(p);
    record(EventKind::TokenIssued, {}, digest_ref(to_bytes(p.token)));
    wire::TokenGrant grant{p.token, config_.api_address};
    return {crypto::hybrid_encrypt(s.authenticator_pk, grant.encode(), *env_.rng)};
}

std::size_t Server::pending_tokens() const {
    std::size_t n = 0;
    for (const auto& p : pending_) n += p.consumed ? 0 : 1;
    return n;
}

AcceptedRequest Server::validate_registration(const wire::RegistrationRequest& request) {
    const auto now = env_.clock->now();
    std::optional<std::size_t> index;
    Bytes plain;
    for (auto i = sessions_.size(); i-- > 0;) {
        if (sessions_[i].keys.expired(now)) continue;
        try {
            plain = crypto::hybrid_decrypt(sessions_[i].keys.secret_key, request.ciphertext);
            index = i;
            break;
        } catch (const Error&) {
        }
    }
    if (!index) reject(EventKind::RequestRejected, ErrorCode::Malformed, "no session key opens the request");

    wire::RegistrationBody body;
    try {
        body = wire::RegistrationBody::decode(plain);
    } catch (const Error& e) {
        reject(EventKind::RequestRejected, ErrorCode::Malformed, std::string("bad registration body: ") + e.what());
    }
    const auto device = body.device_id.hex();
    if (body.device_public_key.size() != crypto::default_kem().public_key_size() + 32)
        reject(EventKind::RequestRejected, ErrorCode::Malformed, "bad device public key", device);

    const auto& session = sessions_[*index];
    auto et_bytes = body.encrypted_token.encode();
    if (body.signature.signer_tag != RoleTag::AuthForServer ||
        !crypto::verify(session.authenticator_pk, et_bytes, body.signature))
        reject(EventKind::RequestRejected, ErrorCode::SignatureInvalid,
               "token signature does not verify under the session key", device);

    wire::TokenBinding binding;
    try {
        binding = wire::TokenBinding::decode(crypto::hybrid_decrypt(session.keys.secret_key, body.encrypted_token));
    } catch (const Error& e) {
        reject(EventKind::RequestRejected, ErrorCode::Malformed, std::string("unreadable token: ") + e.what(),
               device);
    }

    PendingToken* match = nullptr;
    for (auto& p : pending_) {
        if (p.session != *index || p.token != binding.token) continue;
        if (!match || (match->consumed && !p.consumed)) match = &p;
    }
    if (!match) reject(EventKind::RequestRejected, ErrorCode::TokenUnknown, "token was never issued", device);
    if (match->consumed || nonce_ledger_.contains(binding.nonce))
        reject(EventKind::RequestRejected, ErrorCode::TokenConsumed, "token consumed", device);
    if (!crypto::totp_verify(match->secret, binding.token, now, env_.totp_step))
        reject(EventKind::RequestRejected, ErrorCode::TokenExpired, "token outside its time step", device);

    match->consumed = true;
    nonce_ledger_.insert(binding.nonce);
    AcceptedRequest accepted{*index,
                             body.device_id,
                             body.device_public_key,
                             digest_ref(to_bytes(binding.token)),
                             digest_ref(binding.nonce.view()),
                             digest_ref(wire::encode_signature(body.signature))};
    record(EventKind::DeviceRequestAccepted, device, accepted.token_ref, accepted.nonce_ref, accepted.signature_ref);
    return accepted;
}

Activation Server::activate_device(const AcceptedRequest& accepted) {
    const auto now = env_.clock->now();
    const auto& session = sessions_.at(accepted.session);
    const auto device = accepted.device_id.hex();

    RegistryEntry entry;
    entry.device_id = accepted.device_id;
    entry.long_lived_token = crypto::gen_long_lived_token(*env_.rng);
    entry.server_device_keys = crypto::kem_keygen(RoleTag::ServerForDevice, env_.device_key_ttl, *env_.rng, *env_.clock);
    entry.device_public_key = accepted.device_public_key;
    entry.authenticator_public_key = session.authenticator_pk;
    entry.owner = session.account;

    ledger::DeviceRecord rec{entry.long_lived_token,      entry.server_device_keys.public_key,
                             entry.device_public_key,     entry.authenticator_public_key,
                             entry.device_id,             DeviceStatus::Active,
                             static_cast<std::uint64_t>(now)};
    ledger::TxLocation where;
    try {
        where = ledger_.commit(ledger::make_transaction(identity_, ledger::Channel::Identity, rec, now));
    } catch (const Error& e) {
        reject(EventKind::RequestRejected, ErrorCode::LedgerRejected, e.what(), device);
    }
    registry_[entry.device_id] = entry;

    record(EventKind::RegistrationSuccess, device, accepted.token_ref, accepted.nonce_ref, accepted.signature_ref);

    wire::ActivationBody body{entry.long_lived_token, entry.server_device_keys.public_key};
    wire::ActivationResponse response{crypto::hybrid_encrypt(entry.device_public_key, body.encode(), *env_.rng)};
    auto inner = make_pair({make_atom(AtomKind::LongLivedToken, entry.long_lived_token.to_bytes()),
                            make_atom(AtomKind::PublicKey, entry.server_device_keys.public_key)});
    auto term = make_hybrid(entry.device_public_key, response.ciphertext.encode(), inner);
    record(EventKind::KeypairDelivered, device);

    wire::ConnectedBody notice_body;
    notice_body.device_id = entry.device_id;
    wire::ConnectedNotice notice{crypto::hybrid_encrypt(session.authenticator_pk, notice_body.encode(), *env_.rng)};
    return {make_outbound(std::move(response), std::move(term)), std::move(notice), session.account, where};
}

Ingested Server::ingest_device_data(const wire::DataReport& report) {
    const auto now = env_.clock->now();
    RegistryEntry* entry = nullptr;
    wire::DataBody body;
    for (auto& [id, e] : registry_) {
        try {
            auto plain = crypto::hybrid_decrypt(e.server_device_keys.secret_key, report.ciphertext);
            body = wire::DataBody::decode(plain);
            entry = &e;
            break;
        } catch (const Error&) {
        }
    }
    if (!entry) reject(EventKind::DataRejected, ErrorCode::UnknownDevice, "no device key opens the report");
    const auto device = entry->device_id.hex();
    if (body.device_id != entry->device_id)
        reject(EventKind::DataRejected, ErrorCode::UnknownDevice, "report names another device", device);
    if (entry->status != DeviceStatus::Active || crl_.contains(entry->device_public_key))
        reject(EventKind::DataRejected, ErrorCode::RevokedDevice, "device revoked", device);
    if (body.long_lived_token != entry->long_lived_token)
        reject(EventKind::DataRejected, ErrorCode::TokenMismatch, "long-lived token mismatch", device);

    ledger::DataEntry data{entry->device_id,
                           body.reading.metric,
                           body.reading.value,
                           body.reading.unit,
                           static_cast<std::uint64_t>(now),
                           entry->device_public_key,
                           body.reading.manufacturer};
    auto alerts_before = ledger_.tx_count(ledger::Channel::RiskManagement);
    ledger::TxLocation where;
    try {
        where = ledger_.commit(ledger::make_transaction(identity_, ledger::Channel::Data, data, now));
    } catch (const Error& e) {
        reject(EventKind::DataRejected, ErrorCode::LedgerRejected, e.what(), device);
    }
    record(EventKind::DataCommitted, device, {}, {}, {}, body.reading.metric);

    Ingested out{where, std::nullopt};
    if (ledger_.tx_count(ledger::Channel::RiskManagement) > alerts_before) {
        auto risk = ledger_.blocks(ledger::Channel::RiskManagement);
        for (auto b = risk.rbegin(); b != risk.rend() && !out.alert; ++b)
            for (const auto& tx : b->txs)
                if (const auto* a = std::get_if<ledger::RiskAlert>(&tx.payload); a && a->source == where) out.alert = *a;
        if (out.alert)
            record(EventKind::RiskAlertRaised, device, {}, {}, {},
                   std::string(ledger::to_string(out.alert->severity)) + " " + out.alert->metric);
    }
    return out;
}

ledger::TxLocation Server::revoke_device(std::uint32_t account, const wire::RevocationRequest& request) {
    if (!session_established(account)) throw Error(ErrorCode::NoSession, "server: no established session");
    std::optional<wire::RevocationBody> body;
    for (auto i = sessions_.size(); i-- > 0;) {
        if (sessions_[i].account != account) continue;
        try {
            body = wire::RevocationBody::decode(crypto::hybrid_decrypt(sessions_[i].keys.secret_key, request.ciphertext));
            break;
        } catch (const Error&) {
        }
    }
    if (!body || body->command != "revoke") throw Error(ErrorCode::Malformed, "server: bad revocation request");
    auto it = registry_.find(body->device_id);
    // Devices onboarded by another account are indistinguishable from unknown ones.
    if (it == registry_.end() || it->second.owner != account)
        throw Error(ErrorCode::UnknownDevice, "server: no such device for this account");
    auto& entry = it->second;
    if (entry.status == DeviceStatus::Deactivated) throw Error(ErrorCode::AlreadyRevoked, "server: already revoked");

    const auto now = env_.clock->now();
    ledger::DeviceRecord rec{entry.long_lived_token,  entry.server_device_keys.public_key,
                             entry.device_public_key, entry.authenticator_public_key,
                             entry.device_id,         DeviceStatus::Deactivated,
                             static_cast<std::uint64_t>(now)};
    ledger::TxLocation where;
    try {
        where = ledger_.commit(ledger::make_transaction(identity_, ledger::Channel::Identity, rec, now));
    } catch (const Error& e) {
        throw Error(ErrorCode::LedgerRejected, std::string("server: ") + e.what());
    }
    entry.status = DeviceStatus::Deactivated;
    entry.long_lived_token = {};
    crl_.insert(entry.device_public_key);
    record(EventKind::DeviceRevoked, entry.device_id.hex());
    return where;
}

bool Server::invariants_hold() const {
    for (const auto& [id, e] : registry_)
        if (e.status == DeviceStatus::Active && crl_.contains(e.device_public_key)) return false;
    std::size_t consumed = 0;
    for (const auto& p : pending_) consumed += p.consumed ? 1 : 0;
    return consumed == nonce_ledger_.size();
}

} // namespace onboard::roles
