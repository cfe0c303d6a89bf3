#include "cli.hpp"

#include "onboard/bench/bench.hpp"
#include "onboard/error.hpp"
#include "onboard/harness/attacks.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace onboardctl {

using namespace onboard;
using channels::EventKind;
using ledger::Channel;
using ledger::OrgRole;

namespace {

/// Command-line values that override the config file.
struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> snapshot;
    std::optional<std::string> transcript;
    std::optional<Seconds> totp_step;
    std::optional<Seconds> provisioning_delay;
    bool quiet = false;

    std::string script, script_file, report;
    bool all_scripts = false, list_scripts = false;

    std::size_t runs = 10000;
    unsigned threads = 1;
    std::string weights, records, scenario_file;

    std::string rates = "30:300:25";
    std::optional<double> mu;
    double duration = 30;
    std::string out = "results.csv";
    std::string arrival = "poisson";
    std::string mode = "simulated";
    std::string mix;

    std::string snapshot_in;
};

harness::Scenario scenario_from(const Config& c, harness::Scenario s) {
    s.totp_step = c.totp_step;
    s.session_key_ttl = c.session_key_ttl;
    s.device_key_ttl = c.device_key_ttl;
    s.provisioning_delay = c.provisioning_delay;
    s.ledger = c.ledger;
    s.access = c.policy();
    if (!c.risk_rules.empty()) s.rules = risk::RuleSet::load(c.risk_rules);
    return s;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + '\n';
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_demo(const Config& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
    auto scenario = scenario_from(cfg, harness::Scenario::demo());
    harness::World world(scenario, cfg.seed);

    // Risk channel subscribers, in a fixed order.
    const std::vector<std::pair<std::string, OrgRole>> watchers{
        {"emergency", OrgRole::EmergencyService}, {"insurer", OrgRole::Insurer}, {"server", OrgRole::Server}};
    std::vector<ledger::SubscriptionPtr> subs;
    std::vector<std::string> denied;
    for (const auto& [name, role] : watchers) {
        try {
            subs.push_back(world.ledger().subscribe(Channel::RiskManagement, {}, world.member(role).identity));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PolicyDenied) throw;
            subs.push_back(nullptr);
            denied.push_back(name);
        }
    }

    std::vector<std::string> transcript;
    world.on_transcript([&](const std::string& line) {
        transcript.push_back(line);
        if (!f.quiet) out << line << '\n';
    });
    harness::DeliverAll strategy;
    auto result = world.run(strategy);

    auto emit = [&](const std::string& line) {
        transcript.push_back(line);
        if (!f.quiet) out << line << '\n';
    };
    emit("-- notifications");
    for (const auto& name : denied) emit("  " + name + ": not permitted to read RiskManagement");
    for (std::size_t i = 0; i < subs.size(); ++i)
        for (const auto& c : subs[i] ? subs[i]->poll() : std::vector<ledger::CommittedTx>{}) {
            const auto& a = std::get<ledger::RiskAlert>(c.tx.payload);
            emit("  " + watchers[i].first + ": " + std::string(ledger::to_string(a.severity)) + " " + a.metric + " " +
                 fmt(a.observed) + " vs " + fmt(a.threshold) + " (RiskManagement block " +
                 std::to_string(c.location.height) + ")");
        }
    emit("-- identity channel");
    const auto& server_id = world.member(OrgRole::Server).identity;
    auto records = world.ledger().query(
        Channel::Identity, [](const ledger::Payload& p) { return std::holds_alternative<ledger::DeviceRecord>(p); },
        server_id);
    for (const auto& c : records) {
        const auto& r = std::get<ledger::DeviceRecord>(c.tx.payload);
        emit("  block " + std::to_string(c.location.height) + ": " + r.device_id.hex() + " " +
             std::string(ledger::to_string(r.status)));
    }
    emit("-- chains");
    bool chains_ok = true;
    for (auto ch : ledger::kAllChannels) {
        bool ok = world.ledger().verify_chain(ch);
        chains_ok = chains_ok && ok;
        emit("  " + std::string(ledger::to_string(ch)) + ": " + std::to_string(world.ledger().height(ch)) +
             " blocks, " + (ok ? "verified" : "BROKEN"));
    }

    std::string snapshot_path = f.snapshot.value_or(cfg.snapshot);
    if (!snapshot_path.empty()) {
        write_file(snapshot_path, join_lines(result.snapshot));
        if (!f.quiet) out << "snapshot written to " << snapshot_path << '\n';
    }

    // The first protocol step that never happened.
    const auto& tr = result.trace;
    struct Step {
        const char* name;
        bool done;
    };
    const Step steps[] = {
        {"session", tr.count(EventKind::SessionEstablished) > 0},
        {"token", tr.count(EventKind::TokenIssued) > 0},
        {"provision", tr.count(EventKind::DeviceProvisioned) > 0},
        {"registration", tr.count(EventKind::RegistrationSuccess) > 0},
        {"activation", tr.count(EventKind::DeviceActivated) > 0},
        {"data report", tr.count(EventKind::DataCommitted) > 0},
        {"risk alert", tr.count(EventKind::RiskAlertRaised) > 0},
        {"revocation", tr.count(EventKind::DeviceRevoked) > 0},
        {"post-revocation rejection", result.rejected_with(ErrorCode::RevokedDevice)},
        {"chain verification", chains_ok},
    };
    int status = kOk;
    for (const auto& s : steps) {
        if (s.done) continue;
        std::string why = result.rejections.empty() ? "not reached"
                                                    : std::string(to_string(result.rejections.front().code));
        emit(std::string("demo failed at step '") + s.name + "': " + why);
        err << "demo failed at step '" << s.name << "': " << why << '\n';
        status = kDemoFailed;
        break;
    }
    if (status == kOk) emit("demo complete");
    if (f.transcript) write_file(*f.transcript, join_lines(transcript));
    return status;
}

int report_attack(const harness::AttackReport& rep, std::ostream& out, nlohmann::json& doc) {
    out << rep.script << ": " << rep.summary() << '\n';
    nlohmann::json j{{"script", rep.script},
                     {"expected", rep.expected ? std::string(to_string(*rep.expected)) : ""},
                     {"expected_seen", rep.expected_seen},
                     {"attacker_registered", rep.attacker_registered},
                     {"defeated", rep.defeated()},
                     {"rejections", nlohmann::json::array()},
                     {"lemmas", nlohmann::json::object()}};
    for (const auto& r : rep.run.rejections)
        j["rejections"].push_back({{"receiver", r.receiver}, {"code", std::string(to_string(r.code))}});
    for (const auto& v : rep.verdicts) j["lemmas"][std::string(harness::to_string(v.lemma))] = v.holds;
    doc.push_back(j);
    bool lemmas = std::all_of(rep.verdicts.begin(), rep.verdicts.end(), [](const auto& v) { return v.holds; });
    if (!lemmas || rep.attacker_registered) return kLemmaViolated;
    if (!rep.defeated()) return kNotRejected;
    return kOk;
}

int cmd_attack(const Config& cfg, const Flags& f, std::ostream& out) {
    if (f.list_scripts) {
        for (const auto& s : harness::builtin_scripts())
            out << std::left << std::setw(28) << s.name << s.description << '\n';
        return kOk;
    }
    std::vector<harness::AttackScript> scripts;
    if (f.all_scripts) scripts = harness::builtin_scripts();
    if (!f.script.empty()) scripts.push_back(harness::builtin_script(f.script));
    if (!f.script_file.empty()) {
        if (!std::filesystem::exists(f.script_file)) throw std::runtime_error("cannot open " + f.script_file);
        scripts.push_back(harness::AttackScript::load(f.script_file));
    }
    if (scripts.empty()) throw CLI::ValidationError("attack", "give --script, --file, --all or --list");
    nlohmann::json doc = nlohmann::json::array();
    int worst = kOk;
    for (auto& s : scripts) {
        s.scenario = scenario_from(cfg, s.scenario);
        int code = report_attack(harness::run_attack(s, cfg.seed), out, doc);
        if (code == kLemmaViolated || worst == kOk) worst = std::max(worst, code);
    }
    if (!f.report.empty()) write_file(f.report, doc.dump(2) + '\n');
    return worst;
}

int cmd_campaign(const Config& cfg, const Flags& f, std::ostream& out) {
    harness::CampaignOptions o;
    o.runs = f.runs;
    o.first_seed = cfg.seed;
    o.threads = f.threads;
    if (!f.weights.empty()) o.weights = harness::ActionWeights::parse(f.weights);
    auto base = f.scenario_file.empty() ? harness::Scenario::campaign() : [&] {
        if (!std::filesystem::exists(f.scenario_file)) throw std::runtime_error("cannot open " + f.scenario_file);
        return harness::Scenario::load(f.scenario_file);
    }();
    o.scenario = scenario_from(cfg, base);

    std::ofstream records;
    if (!f.records.empty()) {
        records.open(f.records, std::ios::binary);
        if (!records) throw std::runtime_error("cannot write " + f.records);
    }
    auto sum = harness::run_campaign(o, [&](const harness::CampaignRecord& r) {
        if (records) records << r.to_json() << '\n';
    });
    out << sum.violations << " violations / " << sum.runs << " runs (" << std::fixed << std::setprecision(1)
        << sum.seconds << " s, " << sum.rejections << " rejections, weights " << o.weights.to_string() << ")\n";
    for (const auto& r : sum.records)
        if (!r.clean())
            out << "  seed " << r.seed << ": authentication=" << r.authentication
                << " token_integrity=" << r.token_integrity << " confidentiality=" << r.confidentiality << '\n';
    return sum.violations == 0 ? kOk : kLemmaViolated;
}

bench::TxMix parse_mix(const std::string& spec) {
    bench::TxMix mix{0, 0, 0};
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "mix entry '" + item + "' needs key=value");
        double v = 0;
        try {
            v = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigInvalid, "mix entry '" + item + "' is not a number");
        }
        auto key = item.substr(0, eq);
        if (key == "identity") mix.identity = v;
        else if (key == "data") mix.data = v;
        else if (key == "risk") mix.risk = v;
        else throw Error(ErrorCode::ConfigInvalid, "unknown mix channel '" + key + "'");
    }
    return mix;
}

int cmd_bench(const Config& cfg, const Flags& f, std::ostream& out) {
    auto ledger_cfg = cfg.ledger;
    if (f.mu) ledger_cfg.service_rate = *f.mu;
    bench::LoadProfile p;
    p.duration = f.duration;
    p.arrival = bench::parse_arrival(f.arrival);
    if (!f.mix.empty()) p.mix = parse_mix(f.mix);
    p.validate();
    auto mode = bench::parse_mode(f.mode);
    auto rates = bench::parse_rates(f.rates);
    auto rep = bench::sweep(rates, p, ledger_cfg, cfg.seed, mode);
    out << rep.to_table();
    if (auto knee = bench::find_knee(rep)) out << "knee (mean latency > 2x lowest-rate mean): " << *knee << " tx/s\n";
    else out << "knee: not reached in this sweep\n";
    write_file(f.out, rep.to_csv());
    out << "wrote " << f.out << '\n';
    return kOk;
}

int cmd_verify(const Flags& f, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::exists(f.snapshot_in)) {
        err << "verify-ledger: no such file " << f.snapshot_in << '\n';
        return kNoFile;
    }
    auto lines = ledger::read_snapshot(f.snapshot_in);
    auto v = ledger::verify_snapshot(lines);
    if (v.ok) {
        out << "ok: " << lines.size() << " blocks verified\n";
        return kOk;
    }
    std::ostringstream os;
    os << "corrupt:";
    if (v.channel) os << " channel " << ledger::to_string(*v.channel);
    if (v.height) os << " block " << *v.height;
    if (v.line) os << " (line " << *v.line << ")";
    os << ": " << v.reason;
    out << os.str() << '\n';
    err << os.str() << '\n';
    return kLedgerCorrupt;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"onboardctl: IoT onboarding protocol, ledger, adversary harness and benchmark"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;
    app.add_option("--config", f.config, "INI config file");
    app.add_option("--seed", f.seed, "RNG seed (overrides [run] seed)");

    auto* demo = app.add_subcommand("demo", "run the full onboarding lifecycle and print the transcript");
    demo->add_option("--snapshot", f.snapshot, "write the ledger snapshot here");
    demo->add_option("--transcript", f.transcript, "also write the transcript here");
    demo->add_option("--totp-step", f.totp_step, "TOTP step in seconds");
    demo->add_option("--provisioning-delay", f.provisioning_delay, "seconds the device waits before registering");
    demo->add_flag("-q,--quiet", f.quiet, "print nothing on success");

    auto* attack = app.add_subcommand("attack", "run adversary scripts");
    attack->add_option("--script", f.script, "built-in script name");
    attack->add_option("--file", f.script_file, "JSON attack script");
    attack->add_flag("--all", f.all_scripts, "run every built-in script");
    attack->add_flag("--list", f.list_scripts, "list built-in scripts");
    attack->add_option("--report", f.report, "write a JSON report here");

    auto* campaign = app.add_subcommand("campaign", "randomized adversary campaign with lemma checks");
    campaign->add_option("--runs", f.runs, "number of runs (seeds seed..seed+runs-1)")->check(CLI::PositiveNumber);
    campaign->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    campaign->add_option("--weights", f.weights, "e.g. deliver=6,drop=1,replay=1,tamper=1,inject=1,delay=1,budget=12");
    campaign->add_option("--records", f.records, "write one JSON record per run here");
    campaign->add_option("--scenario", f.scenario_file, "JSON scenario instead of the built-in one");

    auto* bench_cmd = app.add_subcommand("bench", "latency/throughput sweep against the ledger");
    bench_cmd->add_option("--rates", f.rates, "start:end:step (end inclusive) or a comma list");
    bench_cmd->add_option("--mu", f.mu, "orderer service rate, tx/s");
    bench_cmd->add_option("--duration", f.duration, "seconds of arrivals per rate");
    bench_cmd->add_option("--out", f.out, "CSV output path");
    bench_cmd->add_option("--arrival", f.arrival, "poisson or uniform");
    bench_cmd->add_option("--mode", f.mode, "simulated or live");
    bench_cmd->add_option("--mix", f.mix, "channel mix, e.g. identity=1,data=8,risk=1");

    auto* verify = app.add_subcommand("verify-ledger", "check every block of a snapshot");
    verify->add_option("snapshot", f.snapshot_in, "snapshot file")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kUsage;
    }

    try {
        if (verify->parsed()) return cmd_verify(f, out, err);
        auto cfg = load_config(f.config, env);
        if (f.seed) cfg.seed = *f.seed;
        if (f.totp_step) cfg.totp_step = *f.totp_step;
        if (f.provisioning_delay) cfg.provisioning_delay = *f.provisioning_delay;
        cfg.validate();
        if (demo->parsed()) return cmd_demo(cfg, f, out, err);
        if (attack->parsed()) return cmd_attack(cfg, f, out);
        if (campaign->parsed()) return cmd_campaign(cfg, f, out);
        if (bench_cmd->parsed()) return cmd_bench(cfg, f, out);
    } catch (const CLI::ValidationError& e) {
        err << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << " [" << to_string(e.code()) << "]\n";
        switch (e.code()) {
        case ErrorCode::ConfigInvalid:
        case ErrorCode::ScenarioInvalid:
        case ErrorCode::UnknownRole: return kBadConfig;
        default: return kInternal;
        }
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return kNoFile;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

} // namespace onboardctl
