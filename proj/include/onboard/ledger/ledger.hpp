#pragma once

#include "onboard/ledger/types.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace onboard::ledger {

enum class ReadScope : std::uint8_t { None, Own, All };

struct ChannelAccess {
    ReadScope read = ReadScope::None;
    bool write = false;

    bool operator==(const ChannelAccess&) const = default;
};

/// Role x channel access matrix enforced by each channel's chaincode.
///
///                    Identity   Data          RiskManagement
///   Server           rw         rw            r
///   Manufacturer     -          r (own)       -
///   Insurer          -          r             r
///   EmergencyService -          -             r
///   RiskEngine       -          -             w
class AccessPolicy {
public:
    static AccessPolicy defaults();

    ChannelAccess get(OrgRole role, Channel channel) const;
    void set(OrgRole role, Channel channel, ChannelAccess access);

private:
    std::map<std::pair<OrgRole, Channel>, ChannelAccess> matrix_;
};

struct LedgerConfig {
    double service_rate = 200.0;           // orderer throughput, tx/s
    std::size_t max_block_txs = 50;
    std::uint64_t block_interval_ms = 100;
};

struct CommittedTx {
    TxLocation location;
    LedgerTransaction tx;
};

/// Exactly-once, commit-ordered event stream for one subscriber.
class Subscription {
public:
    /// Drains everything delivered so far.
    std::vector<CommittedTx> poll();
    /// Blocks until at least one event or the timeout expires.
    std::vector<CommittedTx> wait(std::chrono::milliseconds timeout);
    std::size_t delivered() const;

private:
    friend class Ledger;
    void push(const CommittedTx& tx);

    mutable std::mutex m_;
    std::condition_variable cv_;
    std::deque<CommittedTx> queue_;
    std::size_t delivered_ = 0;
};
using SubscriptionPtr = std::shared_ptr<Subscription>;

using TxFilter = std::function<bool(const LedgerTransaction&)>;

/// Chaincode run synchronously when a Data entry commits. Returning an alert
/// makes the ledger submit and commit it on the Risk Management channel
/// under the risk-engine identity.
using DataCommitHook = std::function<std::optional<RiskAlert>(const DataEntry&, const TxLocation&)>;

using CommitObserver = std::function<void(const Block&, std::span<const std::uint64_t> tickets)>;

struct ChainVerdict {
    bool ok = true;
    std::optional<Channel> channel;
    std::optional<std::uint64_t> height;
    std::optional<std::size_t> line;
    std::string reason;
};

/// Desk-scale consortium ledger: three isolated hash-chained channels fed by
/// a single FIFO ordering queue. submit() validates (identity, signature,
/// payload/channel match, write policy, chaincode rules) and enqueues;
/// order()/cut_expired()/flush() turn queued transactions into blocks.
/// All public methods are thread-safe.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {}, AccessPolicy policy = AccessPolicy::defaults());

    const LedgerConfig& config() const { return config_; }
    void register_identity(const OrgIdentity& identity);
    const AccessPolicy& policy() const { return policy_; }
    const Msp& msp() const { return msp_; }

    void set_data_hook(DataCommitHook hook, OrgMember risk_identity);
    void set_commit_observer(CommitObserver observer);

    /// Validates and enqueues; returns a ticket. Throws Error with
    /// UnknownIdentity, BadSignature, InvalidPayload or PolicyDenied.
    std::uint64_t submit(const LedgerTransaction& tx, std::uint64_t now_ms = 0);

    /// Orders up to `max_txs` queued transactions into channel batches,
    /// cutting any batch that reaches max_block_txs. Returns the number ordered.
    std::size_t order(std::uint64_t now_ms, std::size_t max_txs = SIZE_MAX);
    /// Cuts batches whose oldest transaction has waited block_interval_ms.
    std::size_t cut_expired(std::uint64_t now_ms);
    /// Orders everything queued and cuts every non-empty batch.
    void flush(std::uint64_t now_ms = 0);

    /// submit + flush; returns where the transaction landed.
    TxLocation commit(const LedgerTransaction& tx, std::uint64_t now_ms = 0);

    std::optional<TxLocation> receipt(std::uint64_t ticket) const;
    std::size_t queued() const;

    std::vector<CommittedTx> query(Channel channel, const std::function<bool(const Payload&)>& predicate,
                                   const OrgIdentity& reader) const;
    SubscriptionPtr subscribe(Channel channel, TxFilter filter, const OrgIdentity& reader);

    /// Number of blocks on a channel, genesis included.
    std::uint64_t height(Channel channel) const;
    std::vector<Block> blocks(Channel channel) const;
    std::size_t tx_count(Channel channel) const;

    bool verify_chain(Channel channel) const;

    /// One base64 line per block, channels in Identity/Data/Risk order.
    std::vector<std::string> snapshot_lines() const;
    void write_snapshot(const std::string& path) const;

private:
    struct Batch {
        std::vector<LedgerTransaction> txs;
        std::vector<std::uint64_t> tickets;
        std::uint64_t opened_ms = 0;
    };
    struct Queued {
        LedgerTransaction tx;
        std::uint64_t ticket;
    };
    struct SubscriberSlot {
        Channel channel;
        TxFilter filter;
        std::weak_ptr<Subscription> sink;
    };

    void validate(const LedgerTransaction& tx) const;
    void apply_chaincode_state(const LedgerTransaction& tx);
    void cut(Channel channel);
    void after_commit(const Block& block, const std::vector<std::uint64_t>& tickets);
    bool may_read(const OrgIdentity& reader, const LedgerTransaction& tx) const;
    const OrgIdentity& require_identity(const OrgIdentity& claimed) const;

    LedgerConfig config_;
    AccessPolicy policy_;
    Msp msp_;

    mutable std::recursive_mutex m_;
    std::map<Channel, std::vector<Block>> chains_;
    std::map<Channel, Batch> batches_;
    std::deque<Queued> queue_;
    std::map<std::uint64_t, TxLocation> receipts_;
    std::uint64_t next_ticket_ = 1;
    std::vector<SubscriberSlot> subscribers_;
    std::map<crypto::PseudoUuid, DeviceStatus> device_status_;  // includes queued records

    DataCommitHook data_hook_;
    std::optional<OrgMember> risk_identity_;
    CommitObserver observer_;
};

/// Checks one channel's encoded blocks from genesis: decoding, contiguous
/// heights, prev-hash links, block hashes and every transaction signature.
ChainVerdict verify_blocks(Channel channel, const std::vector<Bytes>& encoded_blocks);

/// Verifies a snapshot (base64 block per line). With an MSP, submitter
/// credentials must also match registered identities.
ChainVerdict verify_snapshot(const std::vector<std::string>& lines, const Msp* msp = nullptr);

/// Throws std::runtime_error if the file cannot be opened.
std::vector<std::string> read_snapshot(const std::string& path);

} // namespace onboard::ledger
