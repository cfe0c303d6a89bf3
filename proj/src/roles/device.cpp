#include "onboard/roles/roles.hpp"

namespace onboard::roles {

using namespace channels;
using crypto::RoleTag;

std::string_view to_string(Device::Phase p) {
    switch (p) {
    case Device::Phase::Unprovisioned: return "Unprovisioned";
    case Device::Phase::Provisioned: return "Provisioned";
    case Device::Phase::RequestSent: return "RequestSent";
    case Device::Phase::Active: return "Active";
    }
    return "?";
}

Device::Device(std::string name, crypto::LinkKey link_key, std::string manufacturer, RoleEnv env, int max_retries)
    : name_(std::move(name)),
      link_key_(link_key),
      manufacturer_(std::move(manufacturer)),
      env_(env),
      max_retries_(max_retries),
      device_id_(crypto::gen_pseudo_uuid(*env.rng)) {}

void Device::record(EventKind kind, std::string detail, std::string signature_ref) {
    if (!env_.trace) return;
    TraceEvent e;
    e.role = name_;
    e.kind = kind;
    e.device_id = device_id_.hex();
    e.signature_ref = std::move(signature_ref);
    e.detail = std::move(detail);
    env_.trace->append(std::move(e));
}

void Device::on_provision(const wire::DeviceProvision& provision) {
    if (phase_ != Phase::Unprovisioned && phase_ != Phase::Provisioned)
        throw Error(ErrorCode::PhaseViolation, name_ + ": already registering");
    Bytes plain;
    try {
        plain = crypto::link_open(link_key_, provision.sealed);
    } catch (const Error&) {
        throw Error(ErrorCode::LinkKeyMismatch, name_ + ": provisioning bundle not sealed with our link key");
    }
    try {
        bundle_ = wire::ProvisionBundle::decode(plain);
    } catch (const Error& e) {
        throw Error(ErrorCode::Malformed, name_ + ": bad provisioning bundle: " + e.what());
    }
    if (keys_.public_key.empty())
        keys_ = crypto::kem_keygen(RoleTag::DeviceForServer, env_.device_key_ttl, *env_.rng, *env_.clock);
    phase_ = Phase::Provisioned;
    record(EventKind::DeviceProvisioned);
}

Outbound Device::build_registration_request() {
    if (phase_ == Phase::Unprovisioned) throw Error(ErrorCode::NotProvisioned, name_ + ": not provisioned");
    if (phase_ != Phase::Provisioned)
        throw Error(ErrorCode::PhaseViolation, name_ + ": request already sent");

    wire::RegistrationBody body{keys_.public_key, device_id_, bundle_->encrypted_token, bundle_->signature};
    wire::RegistrationRequest msg{crypto::hybrid_encrypt(bundle_->server_public_key, body.encode(), *env_.rng)};

    auto et_bytes = bundle_->encrypted_token.encode();
    auto sig_bytes = wire::encode_signature(bundle_->signature);
    TermBook fallback;
    const TermBook& book = env_.terms ? *env_.terms : fallback;
    auto inner = make_pair({make_atom(AtomKind::PublicKey, keys_.public_key),
                            make_atom(AtomKind::DeviceId, device_id_.to_bytes()), book.get(et_bytes),
                            book.get(sig_bytes)});
    auto term = make_hybrid(bundle_->server_public_key, msg.ciphertext.encode(), inner);

    last_request_ = make_outbound(std::move(msg), std::move(term));
    retries_left_ = max_retries_;
    phase_ = Phase::RequestSent;
    record(EventKind::DeviceRequestSent, {}, digest_ref(sig_bytes));
    return *last_request_;
}

std::optional<Outbound> Device::retry() {
    if (phase_ != Phase::RequestSent || retries_left_ <= 0 || !last_request_) return std::nullopt;
    --retries_left_;
    record(EventKind::DeviceRequestSent, "retry");
    return last_request_;
}

void Device::on_activation(const wire::ActivationResponse& response) {
    if (phase_ != Phase::RequestSent)
        throw Error(ErrorCode::PhaseViolation, name_ + ": activation outside RequestSent");
    wire::ActivationBody body;
    try {
        body = wire::ActivationBody::decode(crypto::hybrid_decrypt(keys_.secret_key, response.ciphertext));
    } catch (const Error& e) {
        record(EventKind::ActivationRejected, to_string(e.code()).data());
        throw Error(ErrorCode::Malformed, name_ + ": unreadable activation: " + e.what());
    }
    long_lived_token_ = body.long_lived_token;
    server_device_pk_ = body.server_public_key;
    phase_ = Phase::Active;
    record(EventKind::DeviceActivated);
}

Outbound Device::report(const wire::Reading& reading) {
    if (phase_ != Phase::Active) throw Error(ErrorCode::PhaseViolation, name_ + ": not active");
    wire::DataBody body{device_id_, reading, *long_lived_token_};
    wire::DataReport msg{crypto::hybrid_encrypt(server_device_pk_, body.encode(), *env_.rng)};
    Writer w;
    w.str(reading.metric);
    w.f64(reading.value);
    w.str(reading.unit);
    auto inner = make_pair({make_atom(AtomKind::DeviceId, device_id_.to_bytes()), make_atom(AtomKind::Data, w.data()),
                            make_atom(AtomKind::LongLivedToken, long_lived_token_->to_bytes())});
    auto term = make_hybrid(server_device_pk_, msg.ciphertext.encode(), inner);
    return make_outbound(std::move(msg), std::move(term));
}

} // namespace onboard::roles
