#include "onboard/wire/message.hpp"

#include "onboard/error.hpp"

namespace onboard::wire {

namespace {

template <typename Fixed>
Fixed read_fixed(Reader& r) {
    return Fixed::from(r.raw(Fixed::size));
}

HybridCiphertext read_ciphertext(Reader& r) { return HybridCiphertext::decode(r.bytes()); }

crypto::Signature read_signature(Reader& r) {
    auto tag = r.u8();
    if (tag < 1 || tag > 4) throw Error(ErrorCode::UnknownTag, "unknown signer tag");
    return {static_cast<crypto::RoleTag>(tag), r.bytes()};
}

void write_signature(Writer& w, const crypto::Signature& s) {
    w.u8(static_cast<std::uint8_t>(s.signer_tag)).bytes(s.bytes);
}

template <typename T>
T decode_whole(ByteView in, T (*body)(Reader&)) {
    Reader r(in);
    T out = body(r);
    r.finish();
    return out;
}

} // namespace

std::string_view to_string(MessageTag tag) {
    switch (tag) {
    case MessageTag::SessionHello: return "SessionHello";
    case MessageTag::NonceChallenge: return "NonceChallenge";
    case MessageTag::NonceResponse: return "NonceResponse";
    case MessageTag::TokenDelivery: return "TokenDelivery";
    case MessageTag::DeviceProvision: return "DeviceProvision";
    case MessageTag::RegistrationRequest: return "RegistrationRequest";
    case MessageTag::ActivationResponse: return "ActivationResponse";
    case MessageTag::ConnectedNotice: return "ConnectedNotice";
    case MessageTag::DataReport: return "DataReport";
    case MessageTag::RevocationRequest: return "RevocationRequest";
    }
    return "Unknown";
}

MessageTag tag_of(const Message& m) {
    return std::visit([](const auto& v) { return std::decay_t<decltype(v)>::tag; }, m);
}

Bytes encode(const Message& m) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(tag_of(m)));
    std::visit(
        [&w](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SessionHello>) {
                w.bytes(v.public_key);
            } else if constexpr (std::is_same_v<T, NonceChallenge>) {
                w.raw(v.nonce.view());
            } else if constexpr (std::is_same_v<T, DeviceProvision>) {
                w.bytes(v.sealed.encode());
            } else {
                w.bytes(v.ciphertext.encode());
            }
        },
        m);
    return std::move(w).take();
}

Message decode(ByteView in) {
    Reader r(in);
    auto tag = r.u8();
    Message out;
    switch (static_cast<MessageTag>(tag)) {
    case MessageTag::SessionHello: out = SessionHello{r.bytes()}; break;
    case MessageTag::NonceChallenge: out = NonceChallenge{read_fixed<crypto::Nonce>(r)}; break;
    case MessageTag::NonceResponse: out = NonceResponse{read_ciphertext(r)}; break;
    case MessageTag::TokenDelivery: out = TokenDelivery{read_ciphertext(r)}; break;
    case MessageTag::DeviceProvision: out = DeviceProvision{SealedBox::decode(r.bytes())}; break;
    case MessageTag::RegistrationRequest: out = RegistrationRequest{read_ciphertext(r)}; break;
    case MessageTag::ActivationResponse: out = ActivationResponse{read_ciphertext(r)}; break;
    case MessageTag::ConnectedNotice: out = ConnectedNotice{read_ciphertext(r)}; break;
    case MessageTag::DataReport: out = DataReport{read_ciphertext(r)}; break;
    case MessageTag::RevocationRequest: out = RevocationRequest{read_ciphertext(r)}; break;
    default: throw Error(ErrorCode::UnknownTag, "unknown message tag " + std::to_string(tag));
    }
    r.finish();
    return out;
}

Bytes encode_signature(const crypto::Signature& s) {
    Writer w;
    write_signature(w, s);
    return std::move(w).take();
}

crypto::Signature decode_signature(ByteView in) {
    return decode_whole<crypto::Signature>(in, read_signature);
}

Bytes SignedNonce::encode() const {
    Writer w;
    w.raw(nonce.view());
    write_signature(w, signature);
    return std::move(w).take();
}

SignedNonce SignedNonce::decode(ByteView in) {
    return decode_whole<SignedNonce>(in, [](Reader& r) {
        SignedNonce out;
        out.nonce = read_fixed<crypto::Nonce>(r);
        out.signature = read_signature(r);
        return out;
    });
}

Bytes TokenGrant::encode() const {
    Writer w;
    w.str(token).str(api_address);
    return std::move(w).take();
}

TokenGrant TokenGrant::decode(ByteView in) {
    return decode_whole<TokenGrant>(in, [](Reader& r) {
        TokenGrant out;
        out.token = r.str();
        out.api_address = r.str();
        return out;
    });
}

Bytes TokenBinding::encode() const {
    Writer w;
    w.str(token).raw(nonce.view());
    return std::move(w).take();
}

TokenBinding TokenBinding::decode(ByteView in) {
    return decode_whole<TokenBinding>(in, [](Reader& r) {
        TokenBinding out;
        out.token = r.str();
        out.nonce = read_fixed<crypto::Nonce>(r);
        return out;
    });
}

Bytes ProvisionBundle::encode() const {
    Writer w;
    w.str(api_address).bytes(server_public_key).bytes(encrypted_token.encode());
    write_signature(w, signature);
    return std::move(w).take();
}

ProvisionBundle ProvisionBundle::decode(ByteView in) {
    return decode_whole<ProvisionBundle>(in, [](Reader& r) {
        ProvisionBundle out;
        out.api_address = r.str();
        out.server_public_key = r.bytes();
        out.encrypted_token = read_ciphertext(r);
        out.signature = read_signature(r);
        return out;
    });
}

Bytes RegistrationBody::encode() const {
    Writer w;
    w.bytes(device_public_key).raw(device_id.view()).bytes(encrypted_token.encode());
    write_signature(w, signature);
    return std::move(w).take();
}

RegistrationBody RegistrationBody::decode(ByteView in) {
    return decode_whole<RegistrationBody>(in, [](Reader& r) {
        RegistrationBody out;
        out.device_public_key = r.bytes();
        out.device_id = read_fixed<crypto::PseudoUuid>(r);
        out.encrypted_token = read_ciphertext(r);
        out.signature = read_signature(r);
        return out;
    });
}

Bytes ActivationBody::encode() const {
    Writer w;
    w.raw(long_lived_token.view()).bytes(server_public_key);
    return std::move(w).take();
}

ActivationBody ActivationBody::decode(ByteView in) {
    return decode_whole<ActivationBody>(in, [](Reader& r) {
        ActivationBody out;
        out.long_lived_token = read_fixed<crypto::LongLivedToken>(r);
        out.server_public_key = r.bytes();
        return out;
    });
}

Bytes ConnectedBody::encode() const {
    Writer w;
    w.raw(device_id.view()).str(status);
    return std::move(w).take();
}

ConnectedBody ConnectedBody::decode(ByteView in) {
    return decode_whole<ConnectedBody>(in, [](Reader& r) {
        ConnectedBody out;
        out.device_id = read_fixed<crypto::PseudoUuid>(r);
        out.status = r.str();
        return out;
    });
}

Bytes DataBody::encode() const {
    Writer w;
    w.raw(device_id.view())
        .str(reading.metric)
        .f64(reading.value)
        .str(reading.unit)
        .str(reading.manufacturer)
        .raw(long_lived_token.view());
    return std::move(w).take();
}

DataBody DataBody::decode(ByteView in) {
    return decode_whole<DataBody>(in, [](Reader& r) {
        DataBody out;
        out.device_id = read_fixed<crypto::PseudoUuid>(r);
        out.reading.metric = r.str();
        out.reading.value = r.f64();
        out.reading.unit = r.str();
        out.reading.manufacturer = r.str();
        out.long_lived_token = read_fixed<crypto::LongLivedToken>(r);
        return out;
    });
}

Bytes RevocationBody::encode() const {
    Writer w;
    w.str(command).raw(device_id.view());
    return std::move(w).take();
}

RevocationBody RevocationBody::decode(ByteView in) {
    return decode_whole<RevocationBody>(in, [](Reader& r) {
        RevocationBody out;
        out.command = r.str();
        out.device_id = read_fixed<crypto::PseudoUuid>(r);
        return out;
    });
}

} // namespace onboard::wire
