#include "onboard/channels/term.hpp"

#include <sstream>

namespace onboard::channels {

namespace {

TermPtr finish(Term t) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(t.kind)).u8(static_cast<std::uint8_t>(t.atom));
    w.bytes(t.value).bytes(t.key).u32(static_cast<std::uint32_t>(t.children.size()));
    for (const auto& c : t.children) w.raw(c->id);
    t.id = crypto::sha256(w.data());
    return std::make_shared<const Term>(std::move(t));
}

std::string_view atom_name(AtomKind k) {
    switch (k) {
    case AtomKind::Data: return "data";
    case AtomKind::PublicKey: return "pk";
    case AtomKind::SecretKey: return "sk";
    case AtomKind::LinkKey: return "linkkey";
    case AtomKind::Nonce: return "nonce";
    case AtomKind::TransientToken: return "token";
    case AtomKind::LongLivedToken: return "ltoken";
    case AtomKind::DeviceId: return "devid";
    case AtomKind::ApiAddress: return "addr";
    case AtomKind::Text: return "text";
    }
    return "?";
}

} // namespace

TermPtr make_atom(AtomKind kind, Bytes value, Bytes partner_public_key) {
    Term t;
    t.kind = TermKind::Atom;
    t.atom = kind;
    t.value = std::move(value);
    t.key = std::move(partner_public_key);
    return finish(std::move(t));
}

TermPtr make_pair(std::vector<TermPtr> parts) {
    Term t;
    t.kind = TermKind::Pair;
    t.children = std::move(parts);
    return finish(std::move(t));
}

TermPtr make_hybrid(Bytes recipient_public_key, Bytes ciphertext_bytes, TermPtr plaintext) {
    Term t;
    t.kind = TermKind::HybridEnc;
    t.key = std::move(recipient_public_key);
    t.value = std::move(ciphertext_bytes);
    t.children = {std::move(plaintext)};
    return finish(std::move(t));
}

TermPtr make_sealed(Bytes link_key, Bytes sealed_bytes, TermPtr plaintext) {
    Term t;
    t.kind = TermKind::LinkSealed;
    t.key = std::move(link_key);
    t.value = std::move(sealed_bytes);
    t.children = {std::move(plaintext)};
    return finish(std::move(t));
}

TermPtr make_signature(Bytes signer_public_key, Bytes signature_bytes, TermPtr message) {
    Term t;
    t.kind = TermKind::Signature;
    t.key = std::move(signer_public_key);
    t.value = std::move(signature_bytes);
    t.children = {std::move(message)};
    return finish(std::move(t));
}

std::string Term::describe() const {
    std::ostringstream os;
    auto short_hex = [](ByteView b) { return to_hex(b.first(std::min<std::size_t>(b.size(), 4))); };
    switch (kind) {
    case TermKind::Atom: os << atom_name(atom) << ":" << short_hex(value); break;
    case TermKind::Pair:
        os << "<";
        for (std::size_t i = 0; i < children.size(); ++i) os << (i ? ", " : "") << children[i]->describe();
        os << ">";
        break;
    case TermKind::HybridEnc: os << "enc(" << short_hex(key) << ", " << children[0]->describe() << ")"; break;
    case TermKind::LinkSealed: os << "seal(" << children[0]->describe() << ")"; break;
    case TermKind::Signature: os << "sig(" << short_hex(key) << ", " << children[0]->describe() << ")"; break;
    }
    return os.str();
}

} // namespace onboard::channels
