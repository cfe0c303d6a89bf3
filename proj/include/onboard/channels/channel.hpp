#pragma once

#include "onboard/channels/knowledge.hpp"
#include "onboard/channels/term.hpp"
#include "onboard/wire/message.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace onboard::channels {

enum class Party : std::uint8_t { Authenticator, Device, Server, Adversary };

struct Endpoint {
    Party party{};
    std::uint32_t instance = 0;

    std::string name() const;
    auto operator<=>(const Endpoint&) const = default;
};

/// The pre-authenticated Authenticator<->Server path (TLS in deployment).
/// FIFO, lossless, and invisible to the adversary.
class SecureChannel {
public:
    SecureChannel(Endpoint a, Endpoint b) : a_(a), b_(b) {}

    void send(Endpoint from, wire::Message message);
    /// Next message addressed to `to`; throws Error(ChannelClosed) when the
    /// channel is closed, returns nullopt when the queue is empty.
    std::optional<wire::Message> recv(Endpoint to);
    void close() { closed_ = true; }
    bool closed() const { return closed_; }
    std::size_t pending(Endpoint to) const;

private:
    Endpoint a_, b_;
    bool closed_ = false;
    std::deque<wire::Message> to_a_, to_b_;
};

/// One message in adversary custody.
struct Envelope {
    std::uint64_t index = 0;
    Endpoint from;
    Endpoint to;
    Bytes bytes;
    TermPtr term;
};

enum class ActionKind : std::uint8_t { Deliver, Drop, Replay, TamperBit, Inject, Delay };

std::string_view to_string(ActionKind kind);

struct AdversaryDecision {
    ActionKind kind = ActionKind::Deliver;
    std::uint64_t target = 0;        // envelope index
    std::size_t bit = 0;             // TamperBit: bit offset into the bytes
    std::int64_t delay_seconds = 0;  // Delay: clock advance before delivery
    std::optional<Envelope> injected;
};

/// What actually reaches a receiver after an adversary decision.
struct Delivery {
    Endpoint to;
    Bytes bytes;
    std::uint64_t source_index = 0;
    ActionKind via = ActionKind::Deliver;
};

/// The hostile Device<->Server path. Every send lands in adversary custody
/// and in its knowledge; nothing is delivered except by decision.
class PublicChannel {
public:
    std::uint64_t send(Endpoint from, Endpoint to, Bytes bytes, TermPtr term);

    /// Applies a decision. Deliver/TamperBit/Delay consume the custody copy;
    /// Replay re-sends any message ever observed; Inject delivers a forged one.
    std::vector<Delivery> apply(const AdversaryDecision& decision);

    const std::deque<std::uint64_t>& in_custody() const { return custody_; }
    const Envelope& envelope(std::uint64_t index) const;
    bool has(std::uint64_t index) const { return history_.contains(index); }
    std::size_t sent_count() const { return history_.size(); }

    AdversaryKnowledge& knowledge() { return knowledge_; }
    const AdversaryKnowledge& knowledge() const { return knowledge_; }

    void close() { closed_ = true; }
    bool closed() const { return closed_; }

private:
    void take_from_custody(std::uint64_t index);

    std::map<std::uint64_t, Envelope> history_;
    std::deque<std::uint64_t> custody_;
    AdversaryKnowledge knowledge_;
    std::uint64_t next_index_ = 0;
    bool closed_ = false;
};

} // namespace onboard::channels
