#include "onboard/ledger/types.hpp"

#include "onboard/error.hpp"

namespace onboard::ledger {

namespace {

template <typename Fixed>
Fixed read_fixed(Reader& r) {
    return Fixed::from(r.raw(Fixed::size));
}

Channel read_channel(Reader& r) {
    auto v = r.u8();
    if (v < 1 || v > 3) throw Error(ErrorCode::UnknownTag, "unknown channel");
    return static_cast<Channel>(v);
}

OrgRole read_role(Reader& r) {
    auto v = r.u8();
    if (v < 1 || v > 5) throw Error(ErrorCode::UnknownTag, "unknown org role");
    return static_cast<OrgRole>(v);
}

void write_payload(Writer& w, const Payload& p) {
    std::visit(
        [&w](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DeviceRecord>) {
                w.u8(1)
                    .raw(v.long_lived_token.view())
                    .bytes(v.server_device_public_key)
                    .bytes(v.device_public_key)
                    .bytes(v.authenticator_public_key)
                    .raw(v.device_id.view())
                    .u8(static_cast<std::uint8_t>(v.status))
                    .u64(v.timestamp);
            } else if constexpr (std::is_same_v<T, DataEntry>) {
                w.u8(2)
                    .raw(v.device_id.view())
                    .str(v.metric)
                    .f64(v.value)
                    .str(v.unit)
                    .u64(v.timestamp)
                    .bytes(v.device_public_key)
                    .str(v.manufacturer);
            } else {
                w.u8(3)
                    .raw(v.device_id.view())
                    .str(v.metric)
                    .f64(v.observed)
                    .f64(v.threshold)
                    .u8(static_cast<std::uint8_t>(v.severity))
                    .u32(static_cast<std::uint32_t>(v.notify.size()));
                for (auto role : v.notify) w.u8(static_cast<std::uint8_t>(role));
                w.u8(static_cast<std::uint8_t>(v.source.channel)).u64(v.source.height).u32(v.source.index);
            }
        },
        p);
}

Payload read_payload(Reader& r) {
    switch (r.u8()) {
    case 1: {
        DeviceRecord d;
        d.long_lived_token = read_fixed<crypto::LongLivedToken>(r);
        d.server_device_public_key = r.bytes();
        d.device_public_key = r.bytes();
        d.authenticator_public_key = r.bytes();
        d.device_id = read_fixed<crypto::PseudoUuid>(r);
        auto s = r.u8();
        if (s < 1 || s > 2) throw Error(ErrorCode::UnknownTag, "unknown device status");
        d.status = static_cast<DeviceStatus>(s);
        d.timestamp = r.u64();
        return d;
    }
    case 2: {
        DataEntry e;
        e.device_id = read_fixed<crypto::PseudoUuid>(r);
        e.metric = r.str();
        e.value = r.f64();
        e.unit = r.str();
        e.timestamp = r.u64();
        e.device_public_key = r.bytes();
        e.manufacturer = r.str();
        return e;
    }
    case 3: {
        RiskAlert a;
        a.device_id = read_fixed<crypto::PseudoUuid>(r);
        a.metric = r.str();
        a.observed = r.f64();
        a.threshold = r.f64();
        auto s = r.u8();
        if (s < 1 || s > 3) throw Error(ErrorCode::UnknownTag, "unknown severity");
        a.severity = static_cast<Severity>(s);
        auto n = r.u32();
        if (n > r.remaining()) throw Error(ErrorCode::Truncated, "notify list truncated");
        for (std::uint32_t i = 0; i < n; ++i) a.notify.push_back(read_role(r));
        a.source.channel = read_channel(r);
        a.source.height = r.u64();
        a.source.index = r.u32();
        return a;
    }
    default: throw Error(ErrorCode::UnknownTag, "unknown payload type");
    }
}

} // namespace

std::string_view to_string(OrgRole role) {
    switch (role) {
    case OrgRole::Server: return "Server";
    case OrgRole::Manufacturer: return "Manufacturer";
    case OrgRole::Insurer: return "Insurer";
    case OrgRole::EmergencyService: return "EmergencyService";
    case OrgRole::RiskEngine: return "RiskEngine";
    }
    return "Unknown";
}

OrgRole parse_role(std::string_view name) {
    for (auto r : kAllRoles)
        if (to_string(r) == name) return r;
    throw Error(ErrorCode::UnknownRole, "unknown role '" + std::string(name) + "'");
}

std::string_view to_string(Channel channel) {
    switch (channel) {
    case Channel::Identity: return "Identity";
    case Channel::Data: return "Data";
    case Channel::RiskManagement: return "RiskManagement";
    }
    return "Unknown";
}

std::string_view to_string(DeviceStatus s) { return s == DeviceStatus::Active ? "Active" : "Deactivated"; }

std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::Info: return "Info";
    case Severity::Warning: return "Warning";
    case Severity::Critical: return "Critical";
    }
    return "Unknown";
}

Severity parse_severity(std::string_view name) {
    for (auto s : {Severity::Info, Severity::Warning, Severity::Critical})
        if (to_string(s) == name) return s;
    throw Error(ErrorCode::ConfigInvalid, "unknown severity '" + std::string(name) + "'");
}

OrgMember OrgMember::create(std::string org_id, OrgRole role, crypto::Rng& rng) {
    auto key = crypto::signing_keygen(rng);
    return {{std::move(org_id), role, key.public_key}, key.seed};
}

void Msp::register_identity(const OrgIdentity& identity) { identities_[identity.org_id] = identity; }

const OrgIdentity* Msp::find(std::string_view org_id) const {
    auto it = identities_.find(org_id);
    return it == identities_.end() ? nullptr : &it->second;
}

Channel home_channel(const Payload& p) {
    switch (p.index()) {
    case 0: return Channel::Identity;
    case 1: return Channel::Data;
    default: return Channel::RiskManagement;
    }
}

Bytes LedgerTransaction::signing_bytes() const {
    Writer w;
    w.u8(static_cast<std::uint8_t>(channel));
    write_payload(w, payload);
    w.str(submitter).bytes(submitter_credential).u64(timestamp);
    return std::move(w).take();
}

Bytes LedgerTransaction::encode() const {
    Writer w;
    w.raw(signing_bytes()).bytes(signature);
    return std::move(w).take();
}

LedgerTransaction LedgerTransaction::decode(ByteView in) {
    Reader r(in);
    LedgerTransaction tx;
    tx.channel = read_channel(r);
    tx.payload = read_payload(r);
    tx.submitter = r.str();
    tx.submitter_credential = r.bytes();
    tx.timestamp = r.u64();
    tx.signature = r.bytes();
    r.finish();
    return tx;
}

LedgerTransaction make_transaction(const OrgMember& submitter, Channel channel, Payload payload,
                                   std::uint64_t timestamp) {
    LedgerTransaction tx;
    tx.channel = channel;
    tx.payload = std::move(payload);
    tx.submitter = submitter.identity.org_id;
    tx.submitter_credential = submitter.identity.credential;
    tx.timestamp = timestamp;
    tx.signature = crypto::ed25519_sign(submitter.signing_seed, tx.signing_bytes());
    return tx;
}

crypto::Digest Block::compute_hash(const crypto::Digest& prev, const std::vector<Bytes>& tx_bytes) {
    Writer w;
    w.raw(prev);
    for (const auto& b : tx_bytes) w.bytes(b);
    return crypto::sha256(w.data());
}

Bytes Block::encode() const {
    Writer w;
    w.u8(static_cast<std::uint8_t>(channel)).u64(height).raw(prev_hash);
    w.u32(static_cast<std::uint32_t>(txs.size()));
    for (const auto& tx : txs) w.bytes(tx.encode());
    w.raw(block_hash);
    return std::move(w).take();
}

Block Block::decode(ByteView in) {
    Reader r(in);
    Block b;
    b.channel = read_channel(r);
    b.height = r.u64();
    auto prev = r.raw(32);
    std::copy(prev.begin(), prev.end(), b.prev_hash.begin());
    auto n = r.u32();
    if (n > r.remaining()) throw Error(ErrorCode::Truncated, "tx list truncated");
    for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(LedgerTransaction::decode(r.bytes()));
    auto hash = r.raw(32);
    std::copy(hash.begin(), hash.end(), b.block_hash.begin());
    r.finish();
    return b;
}

} // namespace onboard::ledger
