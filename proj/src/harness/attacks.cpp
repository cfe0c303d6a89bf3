#include "onboard/harness/attacks.hpp"

#include "onboard/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace onboard::harness {

using channels::ActionKind;
using channels::EventKind;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ScenarioInvalid, what); }

ActionKind parse_action(std::string_view name) {
    for (auto k : {ActionKind::Deliver, ActionKind::Drop, ActionKind::Replay, ActionKind::TamperBit, ActionKind::Inject,
                   ActionKind::Delay})
        if (channels::to_string(k) == name) return k;
    invalid("unknown action '" + std::string(name) + "'");
}

ErrorCode parse_error_code(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::ConfigInvalid); ++i) {
        auto code = static_cast<ErrorCode>(i);
        if (to_string(code) == name) return code;
    }
    invalid("unknown error code '" + std::string(name) + "'");
}

ScriptStep step(ActionKind action, std::uint64_t target) { return {action, target, 0, 0, ForgeKind::Registration}; }

ScriptStep inject(ForgeKind kind) {
    ScriptStep s{ActionKind::Inject};
    s.forge = kind;
    return s;
}

std::vector<AttackScript> make_builtins() {
    std::vector<AttackScript> out;
    // honest(1): #0 provision, #1 registration request, #2 activation.
    {
        AttackScript a{"replay-device-request", "deliver the registration request, then replay it",
                       Scenario::honest(1), {}, ErrorCode::TokenConsumed};
        a.steps = {step(ActionKind::Deliver, 0), step(ActionKind::Deliver, 1), step(ActionKind::Replay, 1)};
        out.push_back(std::move(a));
    }
    {
        AttackScript a{"replay-stale-token", "withhold the request and replay it after the TOTP window",
                       Scenario::honest(1), {}, ErrorCode::TokenExpired};
        auto late = step(ActionKind::Replay, 1);
        late.delay_seconds = 31;
        a.steps = {step(ActionKind::Deliver, 0), step(ActionKind::Drop, 1), late};
        out.push_back(std::move(a));
    }
    {
        AttackScript a{"tamper-ciphertext-bit", "flip one bit inside the request's KEM encapsulation",
                       Scenario::honest(1), {}, ErrorCode::Malformed};
        auto flip = step(ActionKind::TamperBit, 1);
        flip.bit = 8 * 20 + 3;
        a.steps = {step(ActionKind::Deliver, 0), flip};
        out.push_back(std::move(a));
    }
    {
        // honest(2): #0 and #1 are provisions, #2 and #3 the two requests.
        AttackScript a{"token-swap-across-devices",
                       "lift one device's encrypted token and signature into a request for an attacker device",
                       Scenario::honest(2), {}, ErrorCode::SignatureInvalid};
        a.steps = {step(ActionKind::Deliver, 0), step(ActionKind::Deliver, 1), inject(ForgeKind::TokenSwap)};
        out.push_back(std::move(a));
    }
    {
        AttackScript a{"inject-forged-registration", "register an attacker device with a guessed token",
                       Scenario::honest(1), {}, ErrorCode::SignatureInvalid};
        a.steps = {step(ActionKind::Deliver, 0), inject(ForgeKind::Registration)};
        out.push_back(std::move(a));
    }
    {
        AttackScript a{"drop-activation", "drop the activation response; the device is left without T_D",
                       Scenario::honest(1), {}, std::nullopt};
        a.steps = {step(ActionKind::Deliver, 0), step(ActionKind::Deliver, 1), step(ActionKind::Drop, 2)};
        out.push_back(std::move(a));
    }
    return out;
}

std::string words(std::string_view camel) {
    std::string out;
    for (char c : camel) {
        if (std::isupper(static_cast<unsigned char>(c)) && !out.empty()) out += ' ';
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

} // namespace

AttackScript AttackScript::from_json(std::string_view text) {
    try {
        auto doc = nlohmann::json::parse(text);
        AttackScript a;
        a.name = doc.at("name").get<std::string>();
        a.description = doc.value("description", "");
        const auto& sc = doc.at("scenario");
        if (sc.is_string()) {
            auto s = sc.get<std::string>();
            if (s == "demo") a.scenario = Scenario::demo();
            else if (s == "campaign") a.scenario = Scenario::campaign();
            else if (s.rfind("honest", 0) == 0) {
                std::size_t n = 1;
                if (s.size() > 7 && s[6] == ':') n = std::stoul(s.substr(7));
                else if (s != "honest") invalid("bad scenario '" + s + "'");
                a.scenario = Scenario::honest(n);
            } else {
                invalid("unknown scenario '" + s + "'");
            }
        } else {
            a.scenario = Scenario::from_json(sc.dump());
        }
        for (const auto& j : doc.at("steps")) {
            ScriptStep s;
            s.action = parse_action(j.at("action").get<std::string>());
            s.target = j.value("target", std::uint64_t{0});
            s.bit = j.value("bit", std::size_t{0});
            s.delay_seconds = j.value("delay", std::int64_t{0});
            if (j.contains("forge")) s.forge = parse_forge(j["forge"].get<std::string>());
            a.steps.push_back(s);
        }
        if (doc.contains("expected") && !doc["expected"].is_null())
            a.expected = parse_error_code(doc["expected"].get<std::string>());
        return a;
    } catch (const nlohmann::json::exception& e) {
        invalid(e.what());
    } catch (const std::invalid_argument& e) {
        invalid(e.what());
    }
}

AttackScript AttackScript::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

const std::vector<AttackScript>& builtin_scripts() {
    static const std::vector<AttackScript> scripts = make_builtins();
    return scripts;
}

const AttackScript& builtin_script(std::string_view name) {
    for (const auto& s : builtin_scripts())
        if (s.name == name) return s;
    invalid("no built-in attack named '" + std::string(name) + "'");
}

bool AttackReport::defeated() const {
    bool lemmas = std::all_of(verdicts.begin(), verdicts.end(), [](const LemmaVerdict& v) { return v.holds; });
    return (!expected || expected_seen) && !attacker_registered && lemmas;
}

std::string AttackReport::summary() const {
    std::string s;
    if (!expected) s = "no rejection expected";
    else if (expected_seen) s = "rejected: " + words(to_string(*expected));
    else s = "NOT rejected with " + std::string(to_string(*expected));
    if (attacker_registered) s += "; attacker device registered";
    for (const auto& v : verdicts)
        if (!v.holds) s += "; " + std::string(to_string(v.lemma)) + " violated";
    return s;
}

namespace {

bool attacker_registered(const RunResult& r) {
    std::map<std::string, int> seen;
    for (const auto& e : r.trace.events())
        if (e.kind == EventKind::RegistrationSuccess) ++seen[e.device_id];
    for (const auto& [id, n] : seen) {
        bool honest = std::any_of(r.honest_devices.begin(), r.honest_devices.end(),
                                  [&](const crypto::PseudoUuid& d) { return d.hex() == id; });
        if (!honest || n > 1) return true;
    }
    return false;
}

} // namespace

AttackReport run_attack(const AttackScript& script, std::uint64_t seed) {
    World world(script.scenario, seed);
    Scripted strategy(script.name, script.steps);
    AttackReport rep;
    rep.script = script.name;
    rep.expected = script.expected;
    rep.run = world.run(strategy);
    rep.expected_seen = script.expected && rep.run.rejected_with(*script.expected);
    rep.attacker_registered = attacker_registered(rep.run);
    rep.verdicts = rep.run.verdicts();
    return rep;
}

std::string CampaignRecord::to_json() const {
    nlohmann::json j{{"seed", seed},
                     {"authentication", authentication},
                     {"token_integrity", token_integrity},
                     {"confidentiality", confidentiality},
                     {"trace_digest", trace_digest},
                     {"rejections", rejections},
                     {"registered", registered}};
    return j.dump();
}

namespace {

CampaignRecord campaign_run(const CampaignOptions& o, std::uint64_t seed) {
    World world(o.scenario, seed);
    Randomized strategy(o.weights);
    auto r = world.run(strategy);
    CampaignRecord rec;
    rec.seed = seed;
    auto v = r.verdicts();
    rec.authentication = v[0].holds;
    rec.token_integrity = v[1].holds;
    rec.confidentiality = v[2].holds;
    rec.trace_digest = to_hex(r.trace.digest());
    rec.rejections = r.rejections.size();
    rec.registered = r.trace.count(EventKind::RegistrationSuccess);
    return rec;
}

} // namespace

CampaignSummary run_campaign(const CampaignOptions& options,
                             const std::function<void(const CampaignRecord&)>& on_record) {
    const auto t0 = std::chrono::steady_clock::now();
    CampaignSummary sum;
    sum.records.resize(options.runs);
    const unsigned threads = std::max(1u, options.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < options.runs; ++i) {
            sum.records[i] = campaign_run(options, options.first_seed + i);
            if (on_record) on_record(sum.records[i]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < options.runs;)
                    sum.records[i] = campaign_run(options, options.first_seed + i);
            });
        for (auto& t : pool) t.join();
        if (on_record)
            for (const auto& r : sum.records) on_record(r);
    }
    sum.runs = options.runs;
    for (const auto& r : sum.records) {
        if (!r.clean()) ++sum.violations;
        sum.rejections += r.rejections;
    }
    sum.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sum;
}

namespace {

/// Replays a recorded prefix of choices, then takes option 0 everywhere,
/// remembering how many options each decision point had.
class Odometer final : public Strategy {
public:
    Odometer(std::vector<std::size_t> prefix, const ExhaustiveOptions& o) : prefix_(std::move(prefix)), o_(o) {}
    std::string name() const override { return "exhaustive"; }

    std::optional<channels::AdversaryDecision> decide(AdversaryView& view) override {
        const auto& custody = view.channel.in_custody();
        const auto history = view.channel.sent_count();
        if (history > o_.max_public_messages) {
            // Past the bound: stop branching, just let traffic through.
            if (custody.empty()) return std::nullopt;
            return act(ActionKind::Deliver, custody.front());
        }
        const std::size_t replays = replays_used_ < o_.replay_budget ? history : 0;
        const std::size_t per = 4;
        const std::size_t n = custody.empty() ? 1 + replays : custody.size() * per + replays;
        const std::size_t pick = depth_ < prefix_.size() ? prefix_[depth_] : 0;
        choices_.push_back({pick, n});
        ++depth_;

        if (custody.empty()) {
            if (pick == 0) return std::nullopt;
            ++replays_used_;
            return act(ActionKind::Replay, pick - 1);
        }
        if (pick >= custody.size() * per) {
            ++replays_used_;
            return act(ActionKind::Replay, pick - custody.size() * per);
        }
        const auto target = custody[pick / per];
        switch (pick % per) {
        case 0: return act(ActionKind::Deliver, target);
        case 1: return act(ActionKind::Drop, target);
        case 2: {
            auto d = act(ActionKind::TamperBit, target);
            d.bit = std::min<std::size_t>(8 * 20 + 3, view.channel.envelope(target).bytes.size() * 8 - 1);
            return d;
        }
        default: {
            auto d = act(ActionKind::Delay, target);
            d.delay_seconds = o_.stale_delay;
            return d;
        }
        }
    }

    const std::vector<std::pair<std::size_t, std::size_t>>& choices() const { return choices_; }

private:
    std::vector<std::size_t> prefix_;
    const ExhaustiveOptions& o_;
    std::size_t depth_ = 0;
    std::size_t replays_used_ = 0;
    std::vector<std::pair<std::size_t, std::size_t>> choices_;
};

} // namespace

ExhaustiveSummary run_exhaustive(const Scenario& scenario, std::uint64_t seed, const ExhaustiveOptions& options) {
    ExhaustiveSummary sum;
    std::vector<std::size_t> prefix;
    while (sum.runs < options.max_runs) {
        World world(scenario, seed);
        Odometer strategy(prefix, options);
        auto r = world.run(strategy);
        ++sum.runs;
        sum.max_messages_seen = std::max(sum.max_messages_seen, r.public_messages);
        const auto& ch = strategy.choices();
        std::vector<std::size_t> path;
        for (const auto& c : ch) path.push_back(c.first);
        if (!r.lemmas_hold()) {
            ++sum.violations;
            if (sum.violating_paths.size() < 16) sum.violating_paths.push_back(path);
        }
        // Advance to the next unexplored branch.
        std::size_t i = ch.size();
        while (i > 0 && ch[i - 1].first + 1 >= ch[i - 1].second) --i;
        if (i == 0) {
            sum.complete = true;
            break;
        }
        path.resize(i);
        ++path[i - 1];
        prefix = std::move(path);
    }
    return sum;
}

} // namespace onboard::harness
