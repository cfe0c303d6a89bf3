#pragma once

#include "onboard/channels/term.hpp"

#include <map>
#include <vector>

namespace onboard::channels {

/// Dolev-Yao attacker knowledge. add() only records; derive_closure() runs
/// the destructor rules to a fixpoint:
///   pair           -> each component
///   hybrid(pk, m)  -> m, if a secret key whose partner is pk is known
///   sealed(k, m)   -> m, if the link key k is known
///   sig(pk, m)     -> m (signatures do not hide their message)
/// There are no constructor rules: the attacker cannot forge signatures or
/// invert hashes, and builds new terms only through explicit helpers.
class AdversaryKnowledge {
public:
    void add(const TermPtr& term);
    bool knows(const TermPtr& term) const;
    bool knows_atom(AtomKind kind, ByteView value) const;
    /// True if any known term (atom or compound) has this exact value.
    bool knows_value(ByteView value) const;

    std::size_t size() const { return terms_.size(); }
    const std::map<crypto::Digest, TermPtr>& terms() const { return terms_; }

    /// Secret key atom whose partner public key is `pk`, if known.
    TermPtr secret_for(ByteView public_key) const;

    bool operator==(const AdversaryKnowledge& other) const;

    /// True when every term of this set is also in `other`.
    bool subset_of(const AdversaryKnowledge& other) const;

private:
    std::map<crypto::Digest, TermPtr> terms_;
};

AdversaryKnowledge derive_closure(const AdversaryKnowledge& knowledge);

} // namespace onboard::channels
