#pragma once

#include "onboard/channels/channel.hpp"
#include "onboard/channels/term.hpp"
#include "onboard/channels/trace.hpp"
#include "onboard/crypto/random.hpp"
#include "onboard/crypto/suite.hpp"
#include "onboard/crypto/totp.hpp"
#include "onboard/error.hpp"
#include "onboard/ledger/ledger.hpp"
#include "onboard/wire/message.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace onboard::roles {

/// Symbolic shadow of concrete ciphertexts: lets a role that forwards an
/// opaque blob (the device forwarding encrypted_token) attach the term the
/// originator built for it.
class TermBook {
public:
    void put(ByteView bytes, channels::TermPtr term);
    /// Falls back to an opaque Data atom for bytes nobody registered.
    channels::TermPtr get(ByteView bytes) const;

private:
    std::map<crypto::Digest, channels::TermPtr> terms_;
};

struct RoleEnv {
    crypto::Rng* rng = nullptr;
    const crypto::Clock* clock = nullptr;
    channels::Trace* trace = nullptr;
    TermBook* terms = nullptr;           // optional
    crypto::Seconds session_key_ttl = 3600;
    crypto::Seconds device_key_ttl = 10LL * 365 * 24 * 3600;
    crypto::Seconds totp_step = crypto::kTotpStep;
};

/// A message ready for a channel: the encoding plus its symbolic term.
struct Outbound {
    wire::Message message;
    Bytes bytes;
    channels::TermPtr term;
};

Outbound make_outbound(wire::Message message, channels::TermPtr term);

/// Domain-separated bytes signed during session establishment.
Bytes session_nonce_message(const crypto::Nonce& nonce);

channels::TermPtr binding_term(const wire::TokenBinding& binding);

// ---------------------------------------------------------------------------

class Authenticator {
public:
    enum class Phase : std::uint8_t { Idle, SessionEstablished, AwaitingToken, TokenForwarded, DeviceConnected };

    Authenticator(std::string name, std::uint32_t account, RoleEnv env);

    /// Fresh session keypair; any previous session state is dropped.
    wire::SessionHello login();
    /// Answers the server's challenge and issues our own.
    std::pair<wire::NonceResponse, wire::NonceChallenge> on_challenge(const wire::SessionHello& server_hello,
                                                                      const wire::NonceChallenge& challenge);
    void on_server_proof(const wire::NonceResponse& proof);

    /// Marks that a token has been requested from the server.
    void request_token();
    void on_token(const wire::TokenDelivery& delivery);
    /// Seals (S_a, S^A_p, encrypted_token, signature) for one device.
    Outbound provision(const crypto::LinkKey& link_key);
    crypto::PseudoUuid on_connected(const wire::ConnectedNotice& notice);
    wire::RevocationRequest revoke(const crypto::PseudoUuid& device_id);

    Phase phase() const { return phase_; }
    std::uint32_t account() const { return account_; }
    const std::string& name() const { return name_; }
    const Bytes& public_key() const { return keys_.public_key; }
    const Bytes& server_public_key() const { return server_pk_; }
    const std::vector<crypto::PseudoUuid>& connected_devices() const { return connected_; }

private:
    void require_phase(std::initializer_list<Phase> allowed, const char* what) const;
    void record(channels::EventKind kind, std::string detail = {}, std::string device = {});

    std::string name_;
    std::uint32_t account_;
    RoleEnv env_;
    Phase phase_ = Phase::Idle;
    crypto::KeyPair keys_;
    bool logged_in_ = false;
    Bytes server_pk_;
    std::optional<crypto::Nonce> own_challenge_;
    std::optional<wire::TokenGrant> grant_;
    std::vector<crypto::PseudoUuid> connected_;
};

std::string_view to_string(Authenticator::Phase p);

// ---------------------------------------------------------------------------

class Device {
public:
    enum class Phase : std::uint8_t { Unprovisioned, Provisioned, RequestSent, Active };

    Device(std::string name, crypto::LinkKey link_key, std::string manufacturer, RoleEnv env,
           int max_retries = 0);

    /// Throws LinkKeyMismatch when the bundle was not sealed with our key.
    void on_provision(const wire::DeviceProvision& provision);
    Outbound build_registration_request();
    /// Re-sends the last request while retries remain.
    std::optional<Outbound> retry();
    void on_activation(const wire::ActivationResponse& response);
    Outbound report(const wire::Reading& reading);

    Phase phase() const { return phase_; }
    const std::string& name() const { return name_; }
    const crypto::PseudoUuid& device_id() const { return device_id_; }
    const Bytes& public_key() const { return keys_.public_key; }
    const std::string& manufacturer() const { return manufacturer_; }
    bool has_long_lived_token() const { return long_lived_token_.has_value(); }
    int retries_left() const { return retries_left_; }

    /// Test fixtures only: hands out D^S_s so a checker can be shown to fail.
    const Bytes& secret_key_for_fixture() const { return keys_.secret_key; }

private:
    void record(channels::EventKind kind, std::string detail = {}, std::string signature_ref = {});

    std::string name_;
    crypto::LinkKey link_key_;
    std::string manufacturer_;
    RoleEnv env_;
    int max_retries_;
    int retries_left_ = 0;
    Phase phase_ = Phase::Unprovisioned;
    crypto::PseudoUuid device_id_;
    crypto::KeyPair keys_;
    std::optional<wire::ProvisionBundle> bundle_;
    std::optional<Outbound> last_request_;
    std::optional<crypto::LongLivedToken> long_lived_token_;
    Bytes server_device_pk_;
};

std::string_view to_string(Device::Phase p);

// ---------------------------------------------------------------------------

struct ServerConfig {
    std::string api_address = "https://api.onboard.example/v1";
};

/// A registration request that passed signature and token checks.
struct AcceptedRequest {
    std::size_t session = 0;
    crypto::PseudoUuid device_id;
    Bytes device_public_key;
    std::string token_ref;
    std::string nonce_ref;
    std::string signature_ref;
};

struct Activation {
    Outbound response;               // to the device, over the public channel
    wire::ConnectedNotice notice;    // to the authenticator, over the secure channel
    std::uint32_t account = 0;
    ledger::TxLocation record;
};

struct Ingested {
    ledger::TxLocation entry;
    std::optional<ledger::RiskAlert> alert;
};

struct RegistryEntry {
    crypto::PseudoUuid device_id;
    crypto::LongLivedToken long_lived_token;
    crypto::KeyPair server_device_keys;  // (S^D_s, S^D_p)
    Bytes device_public_key;
    Bytes authenticator_public_key;
    std::uint32_t owner = 0;
    ledger::DeviceStatus status = ledger::DeviceStatus::Active;
};

class Server {
public:
    Server(RoleEnv env, ledger::Ledger& ledger, ledger::OrgMember identity, ServerConfig config = {});

    // Secure channel.
    std::pair<wire::SessionHello, wire::NonceChallenge> on_hello(std::uint32_t account,
                                                                 const wire::SessionHello& hello);
    /// Verifies the authenticator's signed nonce and answers its challenge.
    wire::NonceResponse on_auth_proof(std::uint32_t account, const wire::NonceResponse& proof,
                                      const wire::NonceChallenge& auth_challenge);
    wire::TokenDelivery issue_transient_token(std::uint32_t account);
    ledger::TxLocation revoke_device(std::uint32_t account, const wire::RevocationRequest& request);

    // Public channel.
    AcceptedRequest validate_registration(const wire::RegistrationRequest& request);
    Activation activate_device(const AcceptedRequest& accepted);
    Ingested ingest_device_data(const wire::DataReport& report);

    bool session_established(std::uint32_t account) const;
    const std::map<crypto::PseudoUuid, RegistryEntry>& registry() const { return registry_; }
    const std::set<Bytes>& crl() const { return crl_; }
    std::size_t pending_tokens() const;
    /// Registry/CRL disjointness and nonce-ledger bookkeeping.
    bool invariants_hold() const;
    const ledger::OrgMember& identity() const { return identity_; }

private:
    struct Session {
        std::uint32_t account = 0;
        Bytes authenticator_pk;
        crypto::KeyPair keys;  // (S^A_s, S^A_p)
        crypto::Nonce challenge;
        bool established = false;
    };
    struct PendingToken {
        std::size_t session = 0;
        Bytes secret;
        std::string token;
        bool consumed = false;
    };

    Session& current_session(std::uint32_t account);
    [[noreturn]] void reject(channels::EventKind kind, ErrorCode code, const std::string& message,
                             std::string device = {});
    void record(channels::EventKind kind, std::string device = {}, std::string token_ref = {},
                std::string nonce_ref = {}, std::string signature_ref = {}, std::string detail = {});

    RoleEnv env_;
    ledger::Ledger& ledger_;
    ledger::OrgMember identity_;
    ServerConfig config_;

    std::vector<Session> sessions_;
    std::map<std::uint32_t, std::size_t> latest_session_;
    std::vector<PendingToken> pending_;
    std::set<crypto::Nonce> nonce_ledger_;
    std::map<crypto::PseudoUuid, RegistryEntry> registry_;
    std::set<Bytes> crl_;
};

/// Runs the mutual signed-nonce exchange over `channel` (when given) or
/// directly. Both sides end in an established session or the call throws.
void establish_session(Authenticator& authenticator, Server& server, channels::SecureChannel* channel = nullptr);

/// Token request and delivery over the secure channel.
void deliver_token(Authenticator& authenticator, Server& server, channels::SecureChannel* channel = nullptr);

} // namespace onboard::roles
