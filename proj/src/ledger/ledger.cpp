#include "onboard/ledger/ledger.hpp"

#include "onboard/error.hpp"

#include <cmath>
#include <fstream>

namespace onboard::ledger {

AccessPolicy AccessPolicy::defaults() {
    AccessPolicy p;
    p.set(OrgRole::Server, Channel::Identity, {ReadScope::All, true});
    p.set(OrgRole::Server, Channel::Data, {ReadScope::All, true});
    p.set(OrgRole::Server, Channel::RiskManagement, {ReadScope::All, false});
    p.set(OrgRole::Manufacturer, Channel::Data, {ReadScope::Own, false});
    p.set(OrgRole::Insurer, Channel::Data, {ReadScope::All, false});
    p.set(OrgRole::Insurer, Channel::RiskManagement, {ReadScope::All, false});
    p.set(OrgRole::EmergencyService, Channel::RiskManagement, {ReadScope::All, false});
    p.set(OrgRole::RiskEngine, Channel::RiskManagement, {ReadScope::None, true});
    return p;
}

ChannelAccess AccessPolicy::get(OrgRole role, Channel channel) const {
    auto it = matrix_.find({role, channel});
    return it == matrix_.end() ? ChannelAccess{} : it->second;
}

void AccessPolicy::set(OrgRole role, Channel channel, ChannelAccess access) {
    matrix_[{role, channel}] = access;
}

std::vector<CommittedTx> Subscription::poll() {
    std::lock_guard lock(m_);
    std::vector<CommittedTx> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

std::vector<CommittedTx> Subscription::wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(m_);
    cv_.wait_for(lock, timeout, [this] { return !queue_.empty(); });
    std::vector<CommittedTx> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

std::size_t Subscription::delivered() const {
    std::lock_guard lock(m_);
    return delivered_;
}

void Subscription::push(const CommittedTx& tx) {
    {
        std::lock_guard lock(m_);
        queue_.push_back(tx);
        ++delivered_;
    }
    cv_.notify_all();
}

Ledger::Ledger(LedgerConfig config, AccessPolicy policy)
    : config_(config), policy_(std::move(policy)) {
    if (config_.max_block_txs == 0) throw std::invalid_argument("max_block_txs must be positive");
    for (auto ch : kAllChannels) {
        Block genesis;
        genesis.channel = ch;
        genesis.height = 0;
        genesis.block_hash = Block::compute_hash(genesis.prev_hash, {});
        chains_[ch].push_back(genesis);
    }
}

void Ledger::register_identity(const OrgIdentity& identity) {
    std::lock_guard lock(m_);
    msp_.register_identity(identity);
}

void Ledger::set_data_hook(DataCommitHook hook, OrgMember risk_identity) {
    std::lock_guard lock(m_);
    data_hook_ = std::move(hook);
    risk_identity_ = std::move(risk_identity);
}

void Ledger::set_commit_observer(CommitObserver observer) {
    std::lock_guard lock(m_);
    observer_ = std::move(observer);
}

const OrgIdentity& Ledger::require_identity(const OrgIdentity& claimed) const {
    const auto* known = msp_.find(claimed.org_id);
    if (!known || known->credential != claimed.credential || known->role != claimed.role)
        throw Error(ErrorCode::UnknownIdentity, "identity '" + claimed.org_id + "' is not registered");
    return *known;
}

void Ledger::validate(const LedgerTransaction& tx) const {
    const auto* identity = msp_.find(tx.submitter);
    if (!identity || identity->credential != tx.submitter_credential)
        throw Error(ErrorCode::UnknownIdentity, "submitter '" + tx.submitter + "' is not registered");
    if (!crypto::ed25519_verify(tx.submitter_credential, tx.signing_bytes(), tx.signature))
        throw Error(ErrorCode::BadSignature, "transaction signature does not verify");
    if (!policy_.get(identity->role, tx.channel).write)
        throw Error(ErrorCode::PolicyDenied, std::string(to_string(identity->role)) + " may not write to " +
                                                 std::string(to_string(tx.channel)));
    if (home_channel(tx.payload) != tx.channel)
        throw Error(ErrorCode::InvalidPayload, "payload type does not belong on " +
                                                   std::string(to_string(tx.channel)));

    if (const auto* rec = std::get_if<DeviceRecord>(&tx.payload)) {
        if (rec->device_public_key.empty() || rec->server_device_public_key.empty() ||
            rec->authenticator_public_key.empty())
            throw Error(ErrorCode::InvalidPayload, "device record is missing key material");
        auto it = device_status_.find(rec->device_id);
        if (rec->status == DeviceStatus::Active && it != device_status_.end())
            throw Error(ErrorCode::InvalidPayload, "device already has an identity record");
        if (rec->status == DeviceStatus::Deactivated &&
            (it == device_status_.end() || it->second != DeviceStatus::Active))
            throw Error(ErrorCode::InvalidPayload, "only an active device can be deactivated");
    } else if (const auto* entry = std::get_if<DataEntry>(&tx.payload)) {
        if (entry->metric.empty() || !std::isfinite(entry->value))
            throw Error(ErrorCode::InvalidPayload, "data entry needs a metric and a finite value");
    } else if (const auto* alert = std::get_if<RiskAlert>(&tx.payload)) {
        if (alert->notify.empty()) throw Error(ErrorCode::InvalidPayload, "risk alert notifies nobody");
    }
}

void Ledger::apply_chaincode_state(const LedgerTransaction& tx) {
    if (const auto* rec = std::get_if<DeviceRecord>(&tx.payload)) device_status_[rec->device_id] = rec->status;
}

std::uint64_t Ledger::submit(const LedgerTransaction& tx, std::uint64_t /*now_ms*/) {
    std::lock_guard lock(m_);
    validate(tx);
    apply_chaincode_state(tx);
    auto ticket = next_ticket_++;
    queue_.push_back({tx, ticket});
    return ticket;
}

std::size_t Ledger::order(std::uint64_t now_ms, std::size_t max_txs) {
    std::lock_guard lock(m_);
    std::size_t n = 0;
    while (n < max_txs && !queue_.empty()) {
        auto q = std::move(queue_.front());
        queue_.pop_front();
        auto ch = q.tx.channel;
        auto& batch = batches_[ch];
        if (batch.txs.empty()) batch.opened_ms = now_ms;
        batch.txs.push_back(std::move(q.tx));
        batch.tickets.push_back(q.ticket);
        ++n;
        if (batch.txs.size() >= config_.max_block_txs) cut(ch);
    }
    return n;
}

std::size_t Ledger::cut_expired(std::uint64_t now_ms) {
    std::lock_guard lock(m_);
    std::size_t cuts = 0;
    for (auto ch : kAllChannels) {
        auto& batch = batches_[ch];
        if (!batch.txs.empty() && now_ms >= batch.opened_ms + config_.block_interval_ms) {
            cut(ch);
            ++cuts;
        }
    }
    return cuts;
}

void Ledger::flush(std::uint64_t now_ms) {
    std::lock_guard lock(m_);
    order(now_ms);
    for (auto ch : kAllChannels)
        if (!batches_[ch].txs.empty()) cut(ch);
}

TxLocation Ledger::commit(const LedgerTransaction& tx, std::uint64_t now_ms) {
    std::lock_guard lock(m_);
    auto ticket = submit(tx, now_ms);
    flush(now_ms);
    return receipts_.at(ticket);
}

void Ledger::cut(Channel channel) {
    auto batch = std::move(batches_[channel]);
    batches_[channel] = {};
    auto& chain = chains_[channel];

    Block block;
    block.channel = channel;
    block.height = chain.size();
    block.prev_hash = chain.back().block_hash;
    std::vector<Bytes> encoded;
    for (const auto& tx : batch.txs) encoded.push_back(tx.encode());
    block.txs = std::move(batch.txs);
    block.block_hash = Block::compute_hash(block.prev_hash, encoded);
    chain.push_back(block);

    for (std::size_t i = 0; i < batch.tickets.size(); ++i)
        receipts_[batch.tickets[i]] = {channel, block.height, static_cast<std::uint32_t>(i)};
    after_commit(chain.back(), batch.tickets);
}

void Ledger::after_commit(const Block& block, const std::vector<std::uint64_t>& tickets) {
    for (std::uint32_t i = 0; i < block.txs.size(); ++i) {
        CommittedTx committed{{block.channel, block.height, i}, block.txs[i]};
        for (auto& slot : subscribers_) {
            if (slot.channel != block.channel) continue;
            auto sink = slot.sink.lock();
            if (sink && (!slot.filter || slot.filter(committed.tx))) sink->push(committed);
        }
    }
    if (observer_) observer_(block, tickets);

    if (block.channel != Channel::Data || !data_hook_ || !risk_identity_) return;
    bool raised = false;
    for (std::uint32_t i = 0; i < block.txs.size(); ++i) {
        const auto* entry = std::get_if<DataEntry>(&block.txs[i].payload);
        if (!entry) continue;
        auto alert = data_hook_(*entry, {block.channel, block.height, i});
        if (!alert) continue;
        auto tx = make_transaction(*risk_identity_, Channel::RiskManagement, *alert, block.txs[i].timestamp);
        validate(tx);
        auto& batch = batches_[Channel::RiskManagement];
        batch.txs.push_back(std::move(tx));
        batch.tickets.push_back(next_ticket_++);
        raised = true;
    }
    // Alerts commit in the same step as their data, in data order.
    if (raised) cut(Channel::RiskManagement);
}

std::optional<TxLocation> Ledger::receipt(std::uint64_t ticket) const {
    std::lock_guard lock(m_);
    auto it = receipts_.find(ticket);
    if (it == receipts_.end()) return std::nullopt;
    return it->second;
}

std::size_t Ledger::queued() const {
    std::lock_guard lock(m_);
    std::size_t n = queue_.size();
    for (const auto& [ch, b] : batches_) n += b.txs.size();
    return n;
}

bool Ledger::may_read(const OrgIdentity& reader, const LedgerTransaction& tx) const {
    switch (policy_.get(reader.role, tx.channel).read) {
    case ReadScope::All: return true;
    case ReadScope::Own: {
        const auto* entry = std::get_if<DataEntry>(&tx.payload);
        return entry && entry->manufacturer == reader.org_id;
    }
    case ReadScope::None: return false;
    }
    return false;
}

std::vector<CommittedTx> Ledger::query(Channel channel, const std::function<bool(const Payload&)>& predicate,
                                       const OrgIdentity& reader) const {
    std::lock_guard lock(m_);
    const auto& who = require_identity(reader);
    if (policy_.get(who.role, channel).read == ReadScope::None)
        throw Error(ErrorCode::PolicyDenied, std::string(to_string(who.role)) + " may not read " +
                                                 std::string(to_string(channel)));
    std::vector<CommittedTx> out;
    for (const auto& block : chains_.at(channel)) {
        for (std::uint32_t i = 0; i < block.txs.size(); ++i) {
            const auto& tx = block.txs[i];
            if (may_read(who, tx) && (!predicate || predicate(tx.payload)))
                out.push_back({{channel, block.height, i}, tx});
        }
    }
    return out;
}

SubscriptionPtr Ledger::subscribe(Channel channel, TxFilter filter, const OrgIdentity& reader) {
    std::lock_guard lock(m_);
    const auto& who = require_identity(reader);
    if (policy_.get(who.role, channel).read == ReadScope::None)
        throw Error(ErrorCode::PolicyDenied, std::string(to_string(who.role)) + " may not subscribe to " +
                                                 std::string(to_string(channel)));
    auto sub = std::make_shared<Subscription>();
    OrgIdentity reader_copy = who;
    TxFilter scoped = [this, reader_copy, filter = std::move(filter)](const LedgerTransaction& tx) {
        return may_read(reader_copy, tx) && (!filter || filter(tx));
    };
    subscribers_.push_back({channel, std::move(scoped), sub});
    return sub;
}

std::uint64_t Ledger::height(Channel channel) const {
    std::lock_guard lock(m_);
    return chains_.at(channel).size();
}

std::vector<Block> Ledger::blocks(Channel channel) const {
    std::lock_guard lock(m_);
    return chains_.at(channel);
}

std::size_t Ledger::tx_count(Channel channel) const {
    std::lock_guard lock(m_);
    std::size_t n = 0;
    for (const auto& b : chains_.at(channel)) n += b.txs.size();
    return n;
}

bool Ledger::verify_chain(Channel channel) const {
    std::vector<Bytes> encoded;
    for (const auto& b : blocks(channel)) encoded.push_back(b.encode());
    return verify_blocks(channel, encoded).ok;
}

std::vector<std::string> Ledger::snapshot_lines() const {
    std::lock_guard lock(m_);
    std::vector<std::string> lines;
    for (auto ch : kAllChannels)
        for (const auto& b : chains_.at(ch)) lines.push_back(base64_encode(b.encode()));
    return lines;
}

void Ledger::write_snapshot(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write snapshot to " + path);
    for (const auto& line : snapshot_lines()) out << line << '\n';
}

namespace {

ChainVerdict fail(Channel ch, std::uint64_t height, std::string reason) {
    return {false, ch, height, std::nullopt, std::move(reason)};
}

ChainVerdict verify_one_channel(Channel channel, const std::vector<Bytes>& blocks, const Msp* msp) {
    crypto::Digest expected_prev{};
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto height = static_cast<std::uint64_t>(i);
        try {
            Reader r(blocks[i]);
            if (r.u8() != static_cast<std::uint8_t>(channel)) return fail(channel, height, "channel mismatch");
            if (r.u64() != height) return fail(channel, height, "height not contiguous");
            auto prev = r.raw(32);
            if (!std::equal(prev.begin(), prev.end(), expected_prev.begin()))
                return fail(channel, height, "prev_hash does not link to previous block");
            auto n = r.u32();
            if (n > r.remaining()) return fail(channel, height, "transaction count exceeds block size");
            std::vector<Bytes> txs;
            for (std::uint32_t t = 0; t < n; ++t) txs.push_back(r.bytes());
            auto stored = r.raw(32);
            r.finish();
            auto recomputed = Block::compute_hash(expected_prev, txs);
            if (!std::equal(stored.begin(), stored.end(), recomputed.begin()))
                return fail(channel, height, "block hash mismatch");
            for (const auto& raw : txs) {
                auto tx = LedgerTransaction::decode(raw);
                if (tx.channel != channel || home_channel(tx.payload) != channel)
                    return fail(channel, height, "transaction on wrong channel");
                if (!crypto::ed25519_verify(tx.submitter_credential, tx.signing_bytes(), tx.signature))
                    return fail(channel, height, "transaction signature invalid");
                if (msp) {
                    const auto* id = msp->find(tx.submitter);
                    if (!id || id->credential != tx.submitter_credential)
                        return fail(channel, height, "submitter not registered");
                }
            }
            expected_prev = recomputed;
        } catch (const Error& e) {
            return fail(channel, height, std::string("malformed block: ") + e.what());
        }
    }
    return {};
}

} // namespace

ChainVerdict verify_blocks(Channel channel, const std::vector<Bytes>& encoded_blocks) {
    return verify_one_channel(channel, encoded_blocks, nullptr);
}

ChainVerdict verify_snapshot(const std::vector<std::string>& lines, const Msp* msp) {
    std::map<Channel, std::vector<Bytes>> by_channel;
    std::map<Channel, std::vector<std::size_t>> line_of;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        Bytes raw;
        try {
            raw = base64_decode(lines[i]);
        } catch (const Error&) {
            return {false, std::nullopt, std::nullopt, i + 1, "line is not valid base64"};
        }
        if (raw.empty() || raw[0] < 1 || raw[0] > 3)
            return {false, std::nullopt, std::nullopt, i + 1, "unknown channel tag"};
        auto ch = static_cast<Channel>(raw[0]);
        by_channel[ch].push_back(std::move(raw));
        line_of[ch].push_back(i + 1);
    }
    for (const auto& [ch, blocks] : by_channel) {
        auto v = verify_one_channel(ch, blocks, msp);
        if (!v.ok) {
            v.line = line_of[ch][*v.height];
            return v;
        }
    }
    return {};
}

std::vector<std::string> read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

} // namespace onboard::ledger
