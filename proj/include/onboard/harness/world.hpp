#pragma once

#include "onboard/channels/channel.hpp"
#include "onboard/harness/lemmas.hpp"
#include "onboard/harness/scenario.hpp"
#include "onboard/roles/roles.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace onboard::harness {

enum class ForgeKind : std::uint8_t { Registration, TokenSwap, DataReport, Provision, Activation };

std::string_view to_string(ForgeKind kind);
/// Throws Error(ScenarioInvalid).
ForgeKind parse_forge(std::string_view name);

/// Public keys seen so far, labelled by role. Public keys are not secret, so
/// the adversary gets this directory for free.
struct PublicDirectory {
    std::vector<Bytes> server_session_keys;  // S^A_p
    std::vector<Bytes> server_device_keys;   // S^D_p
    std::vector<Bytes> device_keys;          // D^S_p
    std::vector<Bytes> authenticator_keys;   // A^S_p
};

/// Builds adversary messages from its own key material, the public
/// directory and whatever the knowledge closure exposes. It never touches
/// honest secrets.
class Forger {
public:
    Forger(crypto::Rng& rng, const crypto::Clock& clock, channels::AdversaryKnowledge& knowledge,
           const PublicDirectory& directory);

    /// nullopt when the directory has nothing to aim at yet.
    std::optional<channels::Envelope> forge(ForgeKind kind, const std::vector<channels::Endpoint>& devices);

    const Bytes& public_key() const { return keys_.public_key; }
    const std::vector<crypto::PseudoUuid>& claimed_ids() const { return claimed_; }

private:
    channels::Envelope to(channels::Endpoint dest, roles::Outbound out);
    std::optional<channels::Envelope> registration(bool try_swap);

    crypto::Rng& rng_;
    const crypto::Clock& clock_;
    channels::AdversaryKnowledge& knowledge_;
    const PublicDirectory& directory_;
    crypto::KeyPair keys_;
    crypto::LinkKey link_key_;
    std::vector<crypto::PseudoUuid> claimed_;
};

/// Decision with no injected envelope.
inline channels::AdversaryDecision act(channels::ActionKind kind, std::uint64_t target = 0) {
    channels::AdversaryDecision d;
    d.kind = kind;
    d.target = target;
    return d;
}

struct AdversaryView {
    const channels::PublicChannel& channel;
    Forger& forger;
    crypto::Rng& rng;
    const std::vector<channels::Endpoint>& devices;
};

class Strategy {
public:
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;
    /// nullopt means "nothing more to do"; only honoured when the strategy
    /// is happy to let the current phase end.
    virtual std::optional<channels::AdversaryDecision> decide(AdversaryView& view) = 0;
};

class DeliverAll final : public Strategy {
public:
    std::string name() const override { return "deliver-all"; }
    std::optional<channels::AdversaryDecision> decide(AdversaryView& view) override;
};

struct ActionWeights {
    double deliver = 6, drop = 1, replay = 1, tamper = 1, inject = 1, delay = 1;
    std::size_t budget = 12;  // non-deliver actions per run

    /// "deliver=6,drop=1,...,budget=12"; throws Error(ConfigInvalid).
    static ActionWeights parse(std::string_view spec);
    std::string to_string() const;
};

class Randomized final : public Strategy {
public:
    explicit Randomized(ActionWeights weights) : weights_(weights), budget_(weights.budget) {}
    std::string name() const override { return "randomized"; }
    std::optional<channels::AdversaryDecision> decide(AdversaryView& view) override;

private:
    ActionWeights weights_;
    std::size_t budget_;
};

/// One scripted adversary step. Targets are public-channel message indices.
struct ScriptStep {
    channels::ActionKind action = channels::ActionKind::Deliver;
    std::uint64_t target = 0;
    std::size_t bit = 0;
    std::int64_t delay_seconds = 0;
    ForgeKind forge = ForgeKind::Registration;
};

class Scripted final : public Strategy {
public:
    Scripted(std::string name, std::vector<ScriptStep> steps) : name_(std::move(name)), steps_(std::move(steps)) {}
    std::string name() const override { return name_; }
    std::optional<channels::AdversaryDecision> decide(AdversaryView& view) override;
    std::size_t skipped() const { return skipped_; }

private:
    std::string name_;
    std::vector<ScriptStep> steps_;
    std::size_t next_ = 0;
    std::size_t skipped_ = 0;
    DeliverAll fallback_;
};

struct Rejection {
    std::string receiver;
    ErrorCode code{};
    std::string message;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::string strategy;
    channels::Trace trace;
    channels::AdversaryKnowledge knowledge;
    SecretTargets targets;
    std::vector<Rejection> rejections;
    std::vector<std::string> transcript;
    std::vector<std::string> snapshot;
    std::vector<crypto::PseudoUuid> honest_devices;
    std::vector<crypto::PseudoUuid> adversary_devices;
    std::size_t public_messages = 0;

    bool rejected_with(ErrorCode code) const;
    std::vector<LemmaVerdict> verdicts() const;
    bool lemmas_hold() const;
};

/// Everything one run needs: roles, channels, ledger, adversary. Deterministic
/// for a given (scenario, seed, strategy).
class World {
public:
    World(Scenario scenario, std::uint64_t seed);
    ~World();

    RunResult run(Strategy& strategy);

    ledger::Ledger& ledger() { return *ledger_; }
    roles::Server& server() { return *server_; }
    roles::Device& device(std::size_t i) { return *devices_.at(i); }
    roles::Authenticator& authenticator(std::size_t i) { return *authenticators_.at(i); }
    const ledger::OrgMember& member(ledger::OrgRole role) const;
    crypto::ManualClock& clock() { return clock_; }

    /// Extra transcript sink, called for every transcript line as it is produced.
    void on_transcript(std::function<void(const std::string&)> sink) { sink_ = std::move(sink); }

    /// Test fixtures only: adds a term to adversary knowledge before the run.
    void grant_adversary(channels::TermPtr term);

private:
    void log(std::string line);
    void drive(Strategy& strategy, const char* phase);
    void dispatch(const channels::Delivery& delivery);
    void to_server(const channels::Delivery& delivery, const wire::Message& message);
    void to_device(std::size_t index, const channels::Delivery& delivery, const wire::Message& message);
    void note_rejection(const std::string& receiver, const Error& e);
    void publish_keys();
    void send_public(channels::Endpoint from, channels::Endpoint to, const roles::Outbound& out);
    void capture_targets(const crypto::PseudoUuid& device_id);

    Scenario scenario_;
    std::uint64_t seed_;
    crypto::SeededRng root_;
    crypto::SeededRng role_rng_;
    crypto::SeededRng adversary_rng_;
    crypto::ManualClock clock_;
    channels::Trace trace_;
    roles::TermBook book_;
    roles::RoleEnv env_;

    std::vector<ledger::OrgMember> members_;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::unique_ptr<roles::Server> server_;
    std::vector<std::unique_ptr<roles::Authenticator>> authenticators_;
    std::vector<channels::SecureChannel> secure_;
    std::vector<std::unique_ptr<roles::Device>> devices_;
    std::vector<crypto::LinkKey> link_keys_;
    std::vector<channels::Endpoint> device_endpoints_;

    channels::PublicChannel public_;
    PublicDirectory directory_;
    std::unique_ptr<Forger> forger_;

    std::vector<Rejection> rejections_;
    std::vector<std::string> transcript_;
    SecretTargets targets_;
    std::set<crypto::Digest> target_ids_;
    std::function<void(const std::string&)> sink_;
    bool ran_ = false;
};

} // namespace onboard::harness
