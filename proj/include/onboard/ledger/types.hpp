#pragma once

#include "onboard/bytes.hpp"
#include "onboard/crypto/suite.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace onboard::ledger {

enum class OrgRole : std::uint8_t { Server = 1, Manufacturer, Insurer, EmergencyService, RiskEngine };
enum class Channel : std::uint8_t { Identity = 1, Data = 2, RiskManagement = 3 };

inline constexpr Channel kAllChannels[] = {Channel::Identity, Channel::Data, Channel::RiskManagement};
inline constexpr OrgRole kAllRoles[] = {OrgRole::Server, OrgRole::Manufacturer, OrgRole::Insurer,
                                        OrgRole::EmergencyService, OrgRole::RiskEngine};

std::string_view to_string(OrgRole role);
std::string_view to_string(Channel channel);
/// Throws Error(UnknownRole).
OrgRole parse_role(std::string_view name);

struct OrgIdentity {
    std::string org_id;
    OrgRole role{};
    Bytes credential;  // Ed25519 public key

    bool operator==(const OrgIdentity&) const = default;
};

/// An organisation's identity plus its signing key, as held by that
/// organisation's client application.
struct OrgMember {
    OrgIdentity identity;
    Bytes signing_seed;

    static OrgMember create(std::string org_id, OrgRole role, crypto::Rng& rng);
};

/// Stub membership service: maps org ids to registered identities.
class Msp {
public:
    void register_identity(const OrgIdentity& identity);
    const OrgIdentity* find(std::string_view org_id) const;

private:
    std::map<std::string, OrgIdentity, std::less<>> identities_;
};

enum class DeviceStatus : std::uint8_t { Active = 1, Deactivated = 2 };
std::string_view to_string(DeviceStatus s);

/// Identity-channel payload: (T_D, S^D_p, D^S_p, A^S_p, D_u, status).
struct DeviceRecord {
    crypto::LongLivedToken long_lived_token;
    Bytes server_device_public_key;
    Bytes device_public_key;
    Bytes authenticator_public_key;
    crypto::PseudoUuid device_id;
    DeviceStatus status = DeviceStatus::Active;
    std::uint64_t timestamp = 0;

    bool operator==(const DeviceRecord&) const = default;
};

/// Data-channel payload: one device reading.
struct DataEntry {
    crypto::PseudoUuid device_id;
    std::string metric;
    double value = 0;
    std::string unit;
    std::uint64_t timestamp = 0;
    Bytes device_public_key;
    std::string manufacturer;

    bool operator==(const DataEntry&) const = default;
};

enum class Severity : std::uint8_t { Info = 1, Warning, Critical };
std::string_view to_string(Severity s);
Severity parse_severity(std::string_view name);

struct TxLocation {
    Channel channel{};
    std::uint64_t height = 0;
    std::uint32_t index = 0;

    bool operator==(const TxLocation&) const = default;
};

/// Risk-channel payload. `source` points at the Data-channel entry that
/// triggered it.
struct RiskAlert {
    crypto::PseudoUuid device_id;
    std::string metric;
    double observed = 0;
    double threshold = 0;
    Severity severity = Severity::Warning;
    std::vector<OrgRole> notify;
    TxLocation source;

    bool operator==(const RiskAlert&) const = default;
};

using Payload = std::variant<DeviceRecord, DataEntry, RiskAlert>;

/// Which channel a payload type belongs on.
Channel home_channel(const Payload& p);

struct LedgerTransaction {
    Channel channel{};
    Payload payload;
    std::string submitter;
    Bytes submitter_credential;
    std::uint64_t timestamp = 0;
    Bytes signature;

    /// Bytes covered by the submitter signature (everything but the signature).
    Bytes signing_bytes() const;
    Bytes encode() const;
    static LedgerTransaction decode(ByteView in);

    bool operator==(const LedgerTransaction&) const = default;
};

LedgerTransaction make_transaction(const OrgMember& submitter, Channel channel, Payload payload,
                                   std::uint64_t timestamp);

struct Block {
    Channel channel{};
    std::uint64_t height = 0;
    crypto::Digest prev_hash{};
    std::vector<LedgerTransaction> txs;
    crypto::Digest block_hash{};

    /// SHA-256(prev_hash || length-prefixed tx encodings)
    static crypto::Digest compute_hash(const crypto::Digest& prev, const std::vector<Bytes>& tx_bytes);

    Bytes encode() const;
    static Block decode(ByteView in);
};

} // namespace onboard::ledger
