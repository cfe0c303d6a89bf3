#include "onboard/harness/lemmas.hpp"

#include <map>
#include <tuple>

namespace onboard::harness {

using channels::EventKind;
using channels::TraceEvent;

std::string_view to_string(Lemma lemma) {
    switch (lemma) {
    case Lemma::Authentication: return "Authentication";
    case Lemma::TokenIntegrity: return "TokenIntegrity";
    case Lemma::KeypairConfidentiality: return "KeypairConfidentiality";
    }
    return "?";
}

LemmaVerdict check_authentication(const channels::Trace& trace) {
    LemmaVerdict v{Lemma::Authentication};
    std::vector<const TraceEvent*> accepted;
    for (const auto& e : trace.events()) {
        if (e.kind == EventKind::DeviceRequestAccepted) accepted.push_back(&e);
        if (e.kind != EventKind::RegistrationSuccess) continue;
        bool matched = false;
        for (const auto* a : accepted)
            if (a->time < e.time && a->token_ref == e.token_ref && a->nonce_ref == e.nonce_ref &&
                !e.token_ref.empty())
                matched = true;
        if (!matched) {
            v.holds = false;
            v.witness.push_back(e);
            v.reason = "registration success for " + e.device_id + " without an earlier accepted request";
            return v;
        }
    }
    return v;
}

LemmaVerdict check_token_integrity(const channels::Trace& trace) {
    LemmaVerdict v{Lemma::TokenIntegrity};
    std::map<std::tuple<std::string, std::string, std::string>, const TraceEvent*> first;
    for (const auto& e : trace.events()) {
        if (e.kind != EventKind::DeviceRequestAccepted) continue;
        auto key = std::make_tuple(e.token_ref, e.nonce_ref, e.signature_ref);
        auto [it, fresh] = first.emplace(key, &e);
        if (!fresh && it->second->device_id != e.device_id) {
            v.holds = false;
            v.witness = {*it->second, e};
            v.reason = "token " + e.token_ref + " accepted for " + it->second->device_id + " and " + e.device_id;
            return v;
        }
    }
    return v;
}

LemmaVerdict check_keypair_confidentiality(const channels::Trace& trace,
                                           const channels::AdversaryKnowledge& knowledge,
                                           const SecretTargets& targets) {
    LemmaVerdict v{Lemma::KeypairConfidentiality};
    auto closure = channels::derive_closure(knowledge);
    for (const auto& t : targets.terms) {
        bool leaked = closure.knows(t) || (t->kind == channels::TermKind::Atom && closure.knows_value(t->value));
        if (!leaked) continue;
        v.holds = false;
        v.reason = "adversary derives " + t->describe();
        for (const auto& e : trace.events())
            if (e.kind == EventKind::AdversaryAction) v.witness.push_back(e);
        TraceEvent marker;
        marker.time = trace.now() + 1;
        marker.role = "adversary";
        marker.kind = EventKind::AdversaryAction;
        marker.detail = v.reason;
        v.witness.push_back(marker);
        return v;
    }
    return v;
}

} // namespace onboard::harness
