#include "onboard/roles/roles.hpp"

namespace onboard::roles {

using namespace channels;

void TermBook::put(ByteView bytes, TermPtr term) { terms_[crypto::sha256(bytes)] = std::move(term); }

TermPtr TermBook::get(ByteView bytes) const {
    auto it = terms_.find(crypto::sha256(bytes));
    if (it != terms_.end()) return it->second;
    return make_atom(AtomKind::Data, Bytes(bytes.begin(), bytes.end()));
}

Outbound make_outbound(wire::Message message, TermPtr term) {
    auto bytes = wire::encode(message);
    if (!term) term = make_atom(AtomKind::Data, bytes);
    return {std::move(message), std::move(bytes), std::move(term)};
}

Bytes session_nonce_message(const crypto::Nonce& nonce) {
    auto label = to_bytes("onboard.session-nonce.v1");
    return concat({label, nonce.view()});
}

TermPtr binding_term(const wire::TokenBinding& binding) {
    return make_pair({make_atom(AtomKind::TransientToken, to_bytes(binding.token)),
                      make_atom(AtomKind::Nonce, binding.nonce.to_bytes())});
}

} // namespace onboard::roles

namespace onboard::roles {

namespace {

// Pushes a message through the secure channel when one is supplied, so the
// exchange is observable in tests; otherwise hands it over directly.
template <typename T>
T relay(channels::SecureChannel* channel, channels::Endpoint from, channels::Endpoint to, T message) {
    if (!channel) return message;
    channel->send(from, std::move(message));
    auto got = channel->recv(to);
    if (!got) throw Error(ErrorCode::ChannelClosed, "secure channel lost a message");
    return std::get<T>(*got);
}

} // namespace

void establish_session(Authenticator& authenticator, Server& server, channels::SecureChannel* channel) {
    const channels::Endpoint a{channels::Party::Authenticator, authenticator.account()};
    const channels::Endpoint s{channels::Party::Server, 0};
    auto hello = relay(channel, a, s, authenticator.login());
    auto [server_hello, challenge] = server.on_hello(authenticator.account(), hello);
    server_hello = relay(channel, s, a, server_hello);
    challenge = relay(channel, s, a, challenge);
    auto [proof, own_challenge] = authenticator.on_challenge(server_hello, challenge);
    proof = relay(channel, a, s, proof);
    own_challenge = relay(channel, a, s, own_challenge);
    auto server_proof = relay(channel, s, a, server.on_auth_proof(authenticator.account(), proof, own_challenge));
    authenticator.on_server_proof(server_proof);
}

void deliver_token(Authenticator& authenticator, Server& server, channels::SecureChannel* channel) {
    const channels::Endpoint a{channels::Party::Authenticator, authenticator.account()};
    const channels::Endpoint s{channels::Party::Server, 0};
    authenticator.request_token();
    authenticator.on_token(relay(channel, s, a, server.issue_transient_token(authenticator.account())));
}

} // namespace onboard::roles
