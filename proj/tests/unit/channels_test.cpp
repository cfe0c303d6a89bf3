#include "doctest.h"

#include "onboard/channels/channel.hpp"
#include "onboard/channels/trace.hpp"
#include "onboard/error.hpp"

#include <variant>

using namespace onboard;
using namespace onboard::channels;

namespace {

const Endpoint kAuth{Party::Authenticator, 0};
const Endpoint kServer{Party::Server, 0};
const Endpoint kDevice{Party::Device, 0};

wire::Message challenge(std::uint8_t fill) {
    wire::NonceChallenge c;
    c.nonce.value.fill(fill);
    return c;
}

TermPtr atom(AtomKind k, std::uint8_t v) { return make_atom(k, Bytes(8, v)); }

} // namespace

TEST_CASE("secure channel is FIFO per direction and closes cleanly") {
    SecureChannel ch(kAuth, kServer);
    ch.send(kAuth, challenge(1));
    ch.send(kAuth, challenge(2));
    ch.send(kServer, challenge(9));
    CHECK(ch.pending(kServer) == 2);
    auto first = ch.recv(kServer);
    REQUIRE(first);
    CHECK(std::get<wire::NonceChallenge>(*first).nonce.value[0] == 1);
    CHECK(std::get<wire::NonceChallenge>(*ch.recv(kServer)).nonce.value[0] == 2);
    CHECK_FALSE(ch.recv(kServer));
    CHECK(std::get<wire::NonceChallenge>(*ch.recv(kAuth)).nonce.value[0] == 9);
    ch.close();
    CHECK_THROWS_AS(ch.recv(kAuth), Error);
}

TEST_CASE("public channel custody, delivery, replay, drop") {
    PublicChannel pub;
    auto i0 = pub.send(kDevice, kServer, Bytes{1, 2, 3}, atom(AtomKind::Data, 1));
    auto i1 = pub.send(kServer, kDevice, Bytes{4, 5}, atom(AtomKind::Data, 2));
    CHECK(pub.in_custody().size() == 2);
    CHECK(pub.knowledge().knows_value(Bytes{1, 2, 3}));

    auto d = pub.apply({ActionKind::Deliver, i0});
    REQUIRE(d.size() == 1);
    CHECK(d[0].to == kServer);
    CHECK(d[0].bytes == Bytes{1, 2, 3});
    CHECK(pub.in_custody().size() == 1);

    auto r = pub.apply({ActionKind::Replay, i0});
    REQUIRE(r.size() == 1);
    CHECK(r[0].bytes == Bytes{1, 2, 3});
    CHECK(r[0].via == ActionKind::Replay);

    CHECK(pub.apply({ActionKind::Drop, i1}).empty());
    CHECK(pub.in_custody().empty());
    CHECK(pub.sent_count() == 2);
}

TEST_CASE("tamper flips exactly one bit") {
    PublicChannel pub;
    Bytes original{0x00, 0xf0, 0x0f};
    for (std::size_t bit = 0; bit < original.size() * 8; ++bit) {
        auto i = pub.send(kDevice, kServer, original, atom(AtomKind::Data, 3));
        AdversaryDecision dec{ActionKind::TamperBit, i};
        dec.bit = bit;
        auto out = pub.apply(dec);
        REQUIRE(out.size() == 1);
        int diff = 0;
        for (std::size_t b = 0; b < original.size(); ++b)
            diff += __builtin_popcount(static_cast<unsigned>(out[0].bytes[b] ^ original[b]));
        CHECK(diff == 1);
        CHECK(((out[0].bytes[bit / 8] ^ original[bit / 8]) >> (bit % 8)) == 1);
    }
}

TEST_CASE("inject delivers the forged envelope") {
    PublicChannel pub;
    Envelope forged{0, {Party::Adversary, 0}, kServer, Bytes{7, 7}, atom(AtomKind::Data, 7)};
    AdversaryDecision dec{ActionKind::Inject};
    dec.injected = forged;
    auto out = pub.apply(dec);
    REQUIRE(out.size() == 1);
    CHECK(out[0].bytes == Bytes{7, 7});
    pub.close();
    CHECK_THROWS_AS(pub.apply(dec), Error);
}

TEST_CASE("closure opens only what the keys allow") {
    auto pk = Bytes(32, 0xaa);
    auto sk = make_atom(AtomKind::SecretKey, Bytes(32, 0xbb), pk);
    auto secret = atom(AtomKind::LongLivedToken, 0x42);
    auto nonce = atom(AtomKind::Nonce, 0x43);
    auto enc = make_hybrid(pk, Bytes{1, 1, 1}, make_pair({secret, nonce}));

    AdversaryKnowledge k;
    k.add(enc);
    auto c = derive_closure(k);
    CHECK_FALSE(c.knows(secret));
    CHECK_FALSE(c.knows(nonce));

    k.add(sk);
    c = derive_closure(k);
    CHECK(c.knows(secret));
    CHECK(c.knows(nonce));

    // Key learned only from inside another ciphertext still unlocks.
    auto link = Bytes(32, 0xcc);
    auto sealed_key = make_sealed(link, Bytes{2}, sk);
    AdversaryKnowledge k2;
    k2.add(enc);
    k2.add(sealed_key);
    CHECK_FALSE(derive_closure(k2).knows(secret));
    k2.add(make_atom(AtomKind::LinkKey, link));
    CHECK(derive_closure(k2).knows(secret));

    // Signatures reveal their message.
    AdversaryKnowledge k3;
    k3.add(make_signature(pk, Bytes(64, 1), nonce));
    CHECK(derive_closure(k3).knows(nonce));
}

TEST_CASE("closure is monotone and idempotent") {
    crypto::SeededRng rng(11);
    for (int round = 0; round < 200; ++round) {
        std::vector<TermPtr> pool;
        std::vector<Bytes> pks;
        for (int i = 0; i < 4; ++i) pks.push_back(rng.bytes(4));
        for (int i = 0; i < 6; ++i) pool.push_back(make_atom(AtomKind::Data, rng.bytes(3)));
        for (int i = 0; i < 12; ++i) {
            auto a = pool[rng.below(pool.size())];
            auto b = pool[rng.below(pool.size())];
            switch (rng.below(4)) {
            case 0: pool.push_back(make_pair({a, b})); break;
            case 1: pool.push_back(make_hybrid(pks[rng.below(4)], rng.bytes(5), a)); break;
            case 2: pool.push_back(make_atom(AtomKind::SecretKey, rng.bytes(4), pks[rng.below(4)])); break;
            default: pool.push_back(make_signature(pks[rng.below(4)], rng.bytes(5), a)); break;
            }
        }
        AdversaryKnowledge small, big;
        for (const auto& t : pool) {
            if (rng.below(2)) small.add(t);
            big.add(t);
        }
        auto cs = derive_closure(small);
        auto cb = derive_closure(big);
        CHECK(small.subset_of(cs));
        CHECK(cs.subset_of(cb));
        CHECK(derive_closure(cs) == cs);
    }
}

TEST_CASE("trace clock is strictly increasing and text is stable") {
    Trace t;
    for (int i = 0; i < 5; ++i) t.append({0, "server", EventKind::TokenIssued, "", "", "", "", "", "n"});
    std::uint64_t prev = 0;
    for (const auto& e : t.events()) {
        CHECK(e.time > prev);
        prev = e.time;
    }
    CHECK(t.count(EventKind::TokenIssued) == 5);
    Trace u;
    for (int i = 0; i < 5; ++i) u.append({0, "server", EventKind::TokenIssued, "", "", "", "", "", "n"});
    CHECK(t.to_text() == u.to_text());
    CHECK(t.digest() == u.digest());
    CHECK(digest_ref(Bytes{}).size() == 16);
}
