#include "onboard/channels/knowledge.hpp"

#include <algorithm>
#include <deque>

namespace onboard::channels {

void AdversaryKnowledge::add(const TermPtr& term) {
    if (term) terms_.emplace(term->id, term);
}

bool AdversaryKnowledge::knows(const TermPtr& term) const {
    return term && terms_.contains(term->id);
}

bool AdversaryKnowledge::knows_atom(AtomKind kind, ByteView value) const {
    return std::any_of(terms_.begin(), terms_.end(), [&](const auto& kv) {
        const auto& t = *kv.second;
        return t.kind == TermKind::Atom && t.atom == kind && std::ranges::equal(t.value, value);
    });
}

bool AdversaryKnowledge::knows_value(ByteView value) const {
    return std::any_of(terms_.begin(), terms_.end(),
                       [&](const auto& kv) { return std::ranges::equal(kv.second->value, value); });
}

TermPtr AdversaryKnowledge::secret_for(ByteView public_key) const {
    for (const auto& [id, t] : terms_)
        if (t->kind == TermKind::Atom && t->atom == AtomKind::SecretKey &&
            std::ranges::equal(t->key, public_key))
            return t;
    return nullptr;
}

bool AdversaryKnowledge::operator==(const AdversaryKnowledge& other) const {
    if (terms_.size() != other.terms_.size()) return false;
    return std::equal(terms_.begin(), terms_.end(), other.terms_.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; });
}

bool AdversaryKnowledge::subset_of(const AdversaryKnowledge& other) const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [&](const auto& kv) { return other.terms_.contains(kv.first); });
}

AdversaryKnowledge derive_closure(const AdversaryKnowledge& knowledge) {
    AdversaryKnowledge out = knowledge;
    std::deque<TermPtr> work;
    for (const auto& [id, t] : knowledge.terms()) work.push_back(t);
    // Encryptions we could not open yet; retried whenever a new key appears.
    std::vector<TermPtr> locked;

    auto learn = [&](const TermPtr& t) {
        if (!out.knows(t)) {
            out.add(t);
            work.push_back(t);
        }
    };
    auto can_open = [&](const Term& t) {
        if (t.kind == TermKind::HybridEnc) return out.secret_for(t.key) != nullptr;
        if (t.kind == TermKind::LinkSealed) return out.knows_atom(AtomKind::LinkKey, t.key);
        return false;
    };

    while (!work.empty()) {
        auto t = work.front();
        work.pop_front();
        switch (t->kind) {
        case TermKind::Atom:
            if (t->atom == AtomKind::SecretKey || t->atom == AtomKind::LinkKey) {
                std::vector<TermPtr> still_locked;
                for (auto& l : locked) {
                    if (can_open(*l))
                        learn(l->children[0]);
                    else
                        still_locked.push_back(l);
                }
                locked = std::move(still_locked);
            }
            break;
        case TermKind::Pair:
        case TermKind::Signature:
            for (const auto& c : t->children) learn(c);
            break;
        case TermKind::HybridEnc:
        case TermKind::LinkSealed:
            if (can_open(*t))
                learn(t->children[0]);
            else
                locked.push_back(t);
            break;
        }
    }
    return out;
}

} // namespace onboard::channels
