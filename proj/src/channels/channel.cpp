#include "onboard/channels/channel.hpp"

#include "onboard/error.hpp"

#include <algorithm>

namespace onboard::channels {

std::string Endpoint::name() const {
    std::string base;
    switch (party) {
    case Party::Authenticator: base = "authenticator"; break;
    case Party::Device: base = "device"; break;
    case Party::Server: base = "server"; break;
    case Party::Adversary: base = "adversary"; break;
    }
    return base + "#" + std::to_string(instance);
}

void SecureChannel::send(Endpoint from, wire::Message message) {
    if (closed_) throw Error(ErrorCode::ChannelClosed, "secure channel closed");
    if (from == a_)
        to_b_.push_back(std::move(message));
    else if (from == b_)
        to_a_.push_back(std::move(message));
    else
        throw std::invalid_argument("SecureChannel: sender is not an endpoint");
}

std::optional<wire::Message> SecureChannel::recv(Endpoint to) {
    if (closed_) throw Error(ErrorCode::ChannelClosed, "secure channel closed");
    auto& q = (to == a_) ? to_a_ : to_b_;
    if (!(to == a_) && !(to == b_)) throw std::invalid_argument("SecureChannel: not an endpoint");
    if (q.empty()) return std::nullopt;
    auto m = std::move(q.front());
    q.pop_front();
    return m;
}

std::size_t SecureChannel::pending(Endpoint to) const { return (to == a_ ? to_a_ : to_b_).size(); }

std::string_view to_string(ActionKind kind) {
    switch (kind) {
    case ActionKind::Deliver: return "deliver";
    case ActionKind::Drop: return "drop";
    case ActionKind::Replay: return "replay";
    case ActionKind::TamperBit: return "tamper-bit";
    case ActionKind::Inject: return "inject";
    case ActionKind::Delay: return "delay";
    }
    return "?";
}

std::uint64_t PublicChannel::send(Endpoint from, Endpoint to, Bytes bytes, TermPtr term) {
    if (closed_) throw Error(ErrorCode::ChannelClosed, "public channel closed");
    auto index = next_index_++;
    knowledge_.add(make_atom(AtomKind::Data, bytes));
    knowledge_.add(term);
    history_.emplace(index, Envelope{index, from, to, std::move(bytes), std::move(term)});
    custody_.push_back(index);
    return index;
}

const Envelope& PublicChannel::envelope(std::uint64_t index) const {
    auto it = history_.find(index);
    if (it == history_.end()) throw std::out_of_range("PublicChannel: no such envelope");
    return it->second;
}

void PublicChannel::take_from_custody(std::uint64_t index) {
    auto it = std::find(custody_.begin(), custody_.end(), index);
    if (it != custody_.end()) custody_.erase(it);
}

std::vector<Delivery> PublicChannel::apply(const AdversaryDecision& d) {
    if (closed_) throw Error(ErrorCode::ChannelClosed, "public channel closed");
    std::vector<Delivery> out;
    switch (d.kind) {
    case ActionKind::Deliver:
    case ActionKind::Delay: {
        const auto& env = envelope(d.target);
        take_from_custody(d.target);
        out.push_back({env.to, env.bytes, env.index, d.kind});
        break;
    }
    case ActionKind::Drop:
        take_from_custody(d.target);
        break;
    case ActionKind::Replay: {
        // Replay keeps the custody copy in place: the original may still be
        // delivered (before or after) by a later decision.
        const auto& env = envelope(d.target);
        out.push_back({env.to, env.bytes, env.index, d.kind});
        break;
    }
    case ActionKind::TamperBit: {
        const auto& env = envelope(d.target);
        take_from_custody(d.target);
        auto bytes = env.bytes;
        if (!bytes.empty()) bytes[(d.bit / 8) % bytes.size()] ^= static_cast<std::uint8_t>(1u << (d.bit % 8));
        knowledge_.add(make_atom(AtomKind::Data, bytes));
        out.push_back({env.to, std::move(bytes), env.index, d.kind});
        break;
    }
    case ActionKind::Inject: {
        if (!d.injected) throw std::invalid_argument("Inject decision without a message");
        out.push_back({d.injected->to, d.injected->bytes, d.target, d.kind});
        break;
    }
    }
    return out;
}

} // namespace onboard::channels
