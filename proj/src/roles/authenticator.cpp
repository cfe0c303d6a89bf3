#include "onboard/roles/roles.hpp"

namespace onboard::roles {

using namespace channels;
using crypto::RoleTag;

std::string_view to_string(Authenticator::Phase p) {
    switch (p) {
    case Authenticator::Phase::Idle: return "Idle";
    case Authenticator::Phase::SessionEstablished: return "SessionEstablished";
    case Authenticator::Phase::AwaitingToken: return "AwaitingToken";
    case Authenticator::Phase::TokenForwarded: return "TokenForwarded";
    case Authenticator::Phase::DeviceConnected: return "DeviceConnected";
    }
    return "?";
}

Authenticator::Authenticator(std::string name, std::uint32_t account, RoleEnv env)
    : name_(std::move(name)), account_(account), env_(env) {}

void Authenticator::require_phase(std::initializer_list<Phase> allowed, const char* what) const {
    for (auto p : allowed)
        if (p == phase_) return;
    throw Error(ErrorCode::PhaseViolation,
                name_ + ": " + what + " not allowed in phase " + std::string(to_string(phase_)));
}

void Authenticator::record(EventKind kind, std::string detail, std::string device) {
    if (!env_.trace) return;
    TraceEvent e;
    e.role = name_;
    e.kind = kind;
    e.device_id = std::move(device);
    e.detail = std::move(detail);
    env_.trace->append(std::move(e));
}

wire::SessionHello Authenticator::login() {
    keys_ = crypto::kem_keygen(RoleTag::AuthForServer, env_.session_key_ttl, *env_.rng, *env_.clock);
    logged_in_ = true;
    phase_ = Phase::Idle;
    server_pk_.clear();
    own_challenge_.reset();
    grant_.reset();
    return {keys_.public_key};
}

std::pair<wire::NonceResponse, wire::NonceChallenge> Authenticator::on_challenge(
    const wire::SessionHello& server_hello, const wire::NonceChallenge& challenge) {
    require_phase({Phase::Idle}, "answering a challenge");
    if (!logged_in_) throw Error(ErrorCode::NoSession, name_ + ": not logged in");
    crypto::require_fresh(keys_, env_.clock->now());
    server_pk_ = server_hello.public_key;
    wire::SignedNonce signed_nonce{
        challenge.nonce,
        crypto::sign(RoleTag::AuthForServer, keys_.secret_key, session_nonce_message(challenge.nonce))};
    wire::NonceResponse response{crypto::hybrid_encrypt(server_pk_, signed_nonce.encode(), *env_.rng)};
    own_challenge_ = crypto::gen_nonce(*env_.rng);
    return {std::move(response), wire::NonceChallenge{*own_challenge_}};
}

void Authenticator::on_server_proof(const wire::NonceResponse& proof) {
    require_phase({Phase::Idle}, "verifying the server");
    if (!own_challenge_) throw Error(ErrorCode::NoSession, name_ + ": no outstanding challenge");
    crypto::require_fresh(keys_, env_.clock->now());
    wire::SignedNonce signed_nonce;
    try {
        signed_nonce = wire::SignedNonce::decode(crypto::hybrid_decrypt(keys_.secret_key, proof.ciphertext));
    } catch (const Error& e) {
        throw Error(ErrorCode::Malformed, name_ + ": unreadable server proof: " + e.what());
    }
    if (!crypto::verify(server_pk_, session_nonce_message(signed_nonce.nonce), signed_nonce.signature) ||
        signed_nonce.signature.signer_tag != RoleTag::ServerForAuth)
        throw Error(ErrorCode::SignatureInvalid, name_ + ": server signature does not verify");
    if (signed_nonce.nonce != *own_challenge_) throw Error(ErrorCode::NonceMismatch, name_ + ": stale server proof");
    own_challenge_.reset();
    phase_ = Phase::SessionEstablished;
    record(EventKind::SessionEstablished);
}

void Authenticator::request_token() {
    require_phase({Phase::SessionEstablished, Phase::TokenForwarded, Phase::DeviceConnected}, "requesting a token");
    phase_ = Phase::AwaitingToken;
}

void Authenticator::on_token(const wire::TokenDelivery& delivery) {
    require_phase({Phase::AwaitingToken}, "receiving a token");
    crypto::require_fresh(keys_, env_.clock->now());
    try {
        grant_ = wire::TokenGrant::decode(crypto::hybrid_decrypt(keys_.secret_key, delivery.ciphertext));
    } catch (const Error& e) {
        throw Error(ErrorCode::Malformed, name_ + ": unreadable token delivery: " + e.what());
    }
}

Outbound Authenticator::provision(const crypto::LinkKey& link_key) {
    require_phase({Phase::AwaitingToken}, "provisioning a device");
    if (!grant_) throw Error(ErrorCode::PhaseViolation, name_ + ": no token to forward");
    crypto::require_fresh(keys_, env_.clock->now());

    wire::TokenBinding binding{grant_->token, crypto::gen_nonce(*env_.rng)};
    auto encrypted_token = crypto::hybrid_encrypt(server_pk_, binding.encode(), *env_.rng);
    auto et_bytes = encrypted_token.encode();
    auto signature = crypto::sign(RoleTag::AuthForServer, keys_.secret_key, et_bytes);
    wire::ProvisionBundle bundle{grant_->api_address, server_pk_, encrypted_token, signature};
    wire::DeviceProvision msg{crypto::link_seal(link_key, bundle.encode(), *env_.rng)};

    auto et_term = make_hybrid(server_pk_, et_bytes, binding_term(binding));
    auto sig_bytes = wire::encode_signature(signature);
    auto sig_term = make_signature(keys_.public_key, sig_bytes, et_term);
    if (env_.terms) {
        env_.terms->put(et_bytes, et_term);
        env_.terms->put(sig_bytes, sig_term);
    }
    auto bundle_term = make_pair({make_atom(AtomKind::ApiAddress, to_bytes(grant_->api_address)),
                                  make_atom(AtomKind::PublicKey, server_pk_), et_term, sig_term});
    auto term = make_sealed(link_key.to_bytes(), msg.sealed.encode(), bundle_term);

    grant_.reset();
    phase_ = Phase::TokenForwarded;
    record(EventKind::DeviceProvisioned, "token forwarded");
    return make_outbound(std::move(msg), std::move(term));
}

crypto::PseudoUuid Authenticator::on_connected(const wire::ConnectedNotice& notice) {
    require_phase({Phase::TokenForwarded, Phase::DeviceConnected, Phase::AwaitingToken}, "receiving a notice");
    wire::ConnectedBody body;
    try {
        body = wire::ConnectedBody::decode(crypto::hybrid_decrypt(keys_.secret_key, notice.ciphertext));
    } catch (const Error& e) {
        throw Error(ErrorCode::Malformed, name_ + ": unreadable notice: " + e.what());
    }
    if (body.status != "connected") throw Error(ErrorCode::Malformed, name_ + ": unexpected notice status");
    connected_.push_back(body.device_id);
    if (phase_ == Phase::TokenForwarded) phase_ = Phase::DeviceConnected;
    record(EventKind::AuthenticatorNotified, body.status, body.device_id.hex());
    return body.device_id;
}

wire::RevocationRequest Authenticator::revoke(const crypto::PseudoUuid& device_id) {
    require_phase({Phase::SessionEstablished, Phase::TokenForwarded, Phase::DeviceConnected}, "revoking");
    crypto::require_fresh(keys_, env_.clock->now());
    wire::RevocationBody body;
    body.device_id = device_id;
    return {crypto::hybrid_encrypt(server_pk_, body.encode(), *env_.rng)};
}

} // namespace onboard::roles
