// calign_cli: bounds sweeps, network simulation and per-module diagnostics.
//
// Every subcommand writes its artifacts plus manifest.json into --out. A --config file
// holds flat "key = value" lines whose keys are the long option names; flags given on
// the command line win over the file.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "calign/bounds.hpp"
#include "calign/lattice_codec.hpp"
#include "calign/matcher.hpp"
#include "calign/netsim.hpp"
#include "calign/quantizer.hpp"
#include "calign/report.hpp"

using namespace calign;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const char* what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw UsageError(fmt::format("{}: '{}' is not a number", what, s));
    }
    if (pos != s.size() || !std::isfinite(v)) throw UsageError(fmt::format("{}: '{}' is not a number", what, s));
    return v;
}

long long parse_integer(const std::string& s, const char* what) {
    const double v = parse_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw UsageError(fmt::format("{}: '{}' is not an integer", what, s));
    return static_cast<long long>(v);
}

// "a,b,c", "lo:hi:step" or "lo:hi:log" (decades lo, 10 lo, ... up to hi).
std::vector<double> parse_grid(const std::string& spec, const char* what) {
    std::vector<double> out;
    if (spec.find(':') == std::string::npos) {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), what));
    } else {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(trim(item));
        if (parts.size() != 3) throw UsageError(fmt::format("{}: grid '{}' must be lo:hi:step", what, spec));
        const double lo = parse_double(parts[0], what);
        const double hi = parse_double(parts[1], what);
        if (hi < lo) throw UsageError(fmt::format("{}: empty grid '{}'", what, spec));
        if (parts[2] == "log") {
            if (!(lo > 0.0)) throw UsageError(fmt::format("{}: log grid needs lo > 0", what));
            for (int i = 0;; ++i) {
                const double v = lo * std::pow(10.0, i);
                if (v > hi * (1.0 + 1e-12)) break;
                out.push_back(v);
            }
        } else {
            const double step = parse_double(parts[2], what);
            if (!(step > 0.0)) throw UsageError(fmt::format("{}: step must be positive", what));
            const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
            for (long long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
        }
    }
    if (out.empty()) throw UsageError(fmt::format("{}: empty grid", what));
    return out;
}

std::vector<int> parse_int_list(const std::string& spec, const char* what) {
    std::vector<int> out;
    for (double v : parse_grid(spec, what)) {
        if (v != std::floor(v)) throw UsageError(fmt::format("{}: {} is not an integer", what, v));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError(fmt::format("cannot read config file {}", path));
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(fmt::format("{}:{}: expected key = value", path, lineno));
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Fills options that were not given on the command line from the config file.
void apply_config(CLI::App& app, CLI::App& sub, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "config") continue;
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) opt = app.get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError(fmt::format("config: unknown key '{}' for '{}'", key, sub.get_name()));
        if (opt->count() > 0) continue;
        if (opt->get_type_size() == 0) {
            if (value != "true" && value != "false") throw UsageError(fmt::format("config: '{}' must be true or false", key));
            if (value == "false") continue;
            opt->add_result("true");
        } else {
            opt->add_result(value);
        }
        opt->run_callback();
    }
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(fmt::format("{} is required", flag));
}

struct Common {
    std::string config;
    std::string out = "calign_out";
    std::string seed = "1";
};

int finish(const Common& common, const std::string& subcommand, std::uint64_t seed,
           const std::vector<Artifact>& artifacts) {
    RunManifest m;
    m.subcommand = subcommand;
    m.config_path = common.config;
    m.output_dir = common.out;
    m.seed = seed;
    write_artifacts(common.out, artifacts, m);
    return 0;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
    std::string k, p = "1:1e6:log", d = "1";
};

int cmd_bounds(const Common& common, const BoundsArgs& a) {
    require(a.k, "--k");
    const auto Ks = parse_int_list(a.k, "--k");
    const auto Ps = parse_grid(a.p, "--p");
    const auto Ds = parse_int_list(a.d, "--d");
    for (int K : Ks) {
        if (K < 2) throw UsageError(fmt::format("--k: K = {} must be at least 2", K));
    }
    for (double P : Ps) {
        if (!(P >= 1.0)) throw UsageError(fmt::format("--p: P = {} must be at least 1", P));
    }
    for (int D : Ds) {
        if (D < 1) throw UsageError(fmt::format("--d: D = {} must be at least 1", D));
    }
    std::string csv = std::string(bound_csv_header()) + "\n";
    std::string wf = "K,P,mu,mu_lower,waterfill_rate,closed_form,relaxed\n";
    for (int K : Ks) {
        for (double P : Ps) {
            for (int D : Ds) csv += bound_csv_row(make_bound_report(K, P, D)) + "\n";
            const WaterfillSolution s = waterfill(K, P);
            wf += fmt::format("{},{},{},{},{},{},{}\n", K, format_number(P), format_number(s.mu),
                              format_number(1.0 / (4.0 * K * P)), format_number(s.rate),
                              format_number(cutset_upper(K, P, CutsetMode::closed_form)),
                              format_number(cutset_relaxed(K, P)));
        }
    }
    std::cout << csv;
    return finish(common, "bounds", 0, {{"bounds.csv", csv}, {"waterfill.csv", wf}});
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    int k = 2, d = 1, l = 4, i = 1, nu = 64, trials = 1, bootstrap = 1000;
    std::string p = "100", t = "1e5", tuples = "1000", q = "0";
    std::string mode = "two_user", matching = "synthetic", fading = "iid";
    double eta = 0.1, correlation = 0.0, error_target = 1e-2;
    bool noiseless = false, representative = false, enforce_typicality = false;
};

int cmd_simulate(const Common& common, const SimulateArgs& a) {
    ExperimentConfig c;
    c.K = a.k;
    c.D = a.d;
    c.P = parse_double(a.p, "--p");
    c.mode = a.mode == "general" ? PatternMode::general : PatternMode::two_user;
    c.L = a.l;
    c.I = a.i;
    c.nu = a.nu;
    c.eta = a.eta;
    c.q = parse_integer(a.q, "--q");
    c.seed = static_cast<std::uint64_t>(parse_integer(common.seed, "--seed"));
    c.trials = a.trials;
    c.matching = a.matching == "greedy" ? MatchingMode::greedy : MatchingMode::synthetic;
    c.T = static_cast<std::size_t>(parse_integer(a.t, "--t"));
    c.tuples = static_cast<std::size_t>(parse_integer(a.tuples, "--tuples"));
    c.fading = a.fading == "ar1" ? ProcessKind::ar1 : ProcessKind::iid;
    c.correlation = a.correlation;
    c.noiseless = a.noiseless;
    c.representative_gains = a.representative;
    c.enforce_typicality = a.enforce_typicality;
    c.error_target = a.error_target;
    c.bootstrap_resamples = a.bootstrap;
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    std::cerr << fmt::format("[simulate] K={} D={} P={} trials={}\n", c.K, c.D, c.P, c.trials);
    const NetworkReport r = run_multilayer(c);
    for (const auto& t : r.trials) {
        std::cerr << fmt::format("[simulate] trial {} rate {:.4f} e2e error {:.4g}\n", t.trial, t.end_to_end_rate,
                                 t.end_to_end_error);
    }
    const std::string json = to_json(r).dump(2) + "\n";
    std::cout << fmt::format("end_to_end_rate={} formula_rate={} end_to_end_error={}\n",
                             format_number(r.end_to_end_rate.estimate), format_number(r.trials[0].formula_rate),
                             format_number(r.mean_end_to_end_error));
    return finish(common, "simulate", c.seed, {{"report.json", json}, {"layers.csv", network_csv(r)}});
}

// ---------------------------------------------------------------------------

struct CodecArgs {
    std::string sinr_db = "0:30:2";
    int q = 5;
    int n = 1000;
    int blocks = 100;
};

int cmd_codec(const Common& common, const CodecArgs& a) {
    const auto grid = parse_grid(a.sinr_db, "--sinr-db");
    if (a.blocks < 1) throw UsageError("--blocks must be positive");
    if (a.n < 2 || a.n % 2 != 0) throw UsageError("--n must be positive and even");
    const auto seed = static_cast<std::uint64_t>(parse_integer(common.seed, "--seed"));
    std::vector<CodecSweepRow> rows;
    try {
        rows = codec_sweep(grid, a.q, static_cast<std::size_t>(a.n), static_cast<std::size_t>(a.blocks), seed);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const std::string csv = codec_csv(rows);
    std::cout << csv;
    return finish(common, "codec", seed, {{"codec.csv", csv}});
}

// ---------------------------------------------------------------------------

struct MatchArgs {
    int k = 2, l = 2, i = 1, nu = 2;
    std::string t = "4e5", mode = "two_user", fading = "iid";
    double eta = 0.1, correlation = 0.0;
};

int cmd_match(const Common& common, const MatchArgs& a) {
    const auto seed = static_cast<std::uint64_t>(parse_integer(common.seed, "--seed"));
    const auto T = parse_integer(a.t, "--t");
    if (T < 1) throw UsageError("--t must be positive");
    MatchPattern pattern;
    try {
        if (a.mode == "general") {
            pattern = MatchPattern::general(a.k, a.i);
        } else {
            if (a.k != 2) throw ConfigError("two-user matching needs --k 2");
            pattern = MatchPattern::two_user(a.l);
        }
        pattern.validate();
        QuantizerConfig(a.nu, pattern.L).validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const QuantizerConfig qc(a.nu, pattern.L);
    FadingConfig fc;
    fc.K = a.k;
    fc.T = static_cast<std::size_t>(T);
    fc.kind = a.fading == "ar1" ? ProcessKind::ar1 : ProcessKind::iid;
    fc.correlation = a.correlation;
    fc.seed = seed;
    const GainSequence seq = generate_process(fc);
    std::cerr << fmt::format("[match] matching {} slots, L = {}\n", T, pattern.L);
    const MatchResult mr = match(seq, qc, pattern);
    const bool verified = verify_matching(mr, seq, qc, pattern);
    const TypicalityReport typ = check_typicality(seq, qc, pattern.L, a.eta);
    const double target = 0.9 * (1.0 - mr.delta_matrix) * (1.0 - mr.delta_matrix);

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["K"] = a.k;
    j["L"] = pattern.L;
    j["nu"] = a.nu;
    j["T"] = mr.T;
    j["T_used"] = mr.T_used;
    j["tuples"] = mr.tuples.size();
    j["matched_fraction"] = mr.matched_fraction;
    j["delta_gain"] = mr.delta_gain;
    j["delta_matrix"] = mr.delta_matrix;
    j["fraction_target"] = target;
    j["verified"] = verified;
    j["typicality"] = {{"eta", typ.eta}, {"distinct_matrices", typ.distinct_matrices},
                       {"violations", typ.violations}, {"min_ratio", format_number(typ.min_ratio)},
                       {"pass", typ.pass}};
    const std::string csv = fmt::format(
        "K,L,nu,T,T_used,tuples,matched_fraction,delta_gain,delta_matrix,fraction_target,verified,typicality_pass\n"
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        a.k, pattern.L, a.nu, mr.T, mr.T_used, mr.tuples.size(), format_number(mr.matched_fraction),
        format_number(mr.delta_gain), format_number(mr.delta_matrix), format_number(target), verified ? 1 : 0,
        typ.pass ? 1 : 0);
    std::cout << csv;
    return finish(common, "match", seed, {{"match.csv", csv}, {"match.json", j.dump(2) + "\n"}});
}

// ---------------------------------------------------------------------------

struct QuantizerArgs {
    int nu = 2, l = 2;
    std::string samples = "1e5";
    bool check_all = false;
};

int cmd_quantizer(const Common& common, const QuantizerArgs& a) {
    const auto seed = static_cast<std::uint64_t>(parse_integer(common.seed, "--seed"));
    const auto samples = parse_integer(a.samples, "--samples");
    if (samples < 1) throw UsageError("--samples must be positive");
    try {
        QuantizerConfig(a.nu, a.l).validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const QuantizerConfig qc(a.nu, a.l);
    const std::int64_t cells = qc.finite_cells() + 1;

    CounterRng rng(stream_key(seed, StreamTag::monte_carlo, 0x71));
    double max_error = 0.0;
    long long in_range = 0;
    for (long long s = 0; s < samples; ++s) {
        const cplx h = rng.complex_normal();
        const QuantizedGain g = quantize(h, qc);
        if (g.is_infinity()) continue;
        ++in_range;
        max_error = std::max(max_error, std::abs(h - representative(g, qc)));
    }
    const bool error_pass = max_error <= qc.error_bound();

    bool rotation = true, roundtrip = true;
    double prob_sum = rayleigh_cell_probability(QuantizedGain::infinity(), qc);
    if (a.check_all) {
        for (int r = 1; r <= qc.rings(); ++r) {
            for (int s = 0; s < qc.sectors(); ++s) {
                const QuantizedGain g = QuantizedGain::cell(r, s);
                roundtrip = roundtrip && quantize(representative(g, qc), qc) == g;
                rotation = rotation && rotate(g, a.l, qc) == g && rotate(rotate(g, 1, qc), -1, qc) == g;
                prob_sum += rayleigh_cell_probability(g, qc);
            }
        }
    }
    std::cout << fmt::format("cells: {}\n", cells);
    std::cout << fmt::format("max-error bound: {} ({} <= {})\n", error_pass ? "pass" : "fail",
                             format_number(max_error), format_number(qc.error_bound()));
    if (a.check_all) {
        std::cout << fmt::format("rotation closure: {}\nrepresentative round trip: {}\nprobability sum: {}\n",
                                 rotation ? "pass" : "fail", roundtrip ? "pass" : "fail", format_number(prob_sum));
    }
    const std::string csv = fmt::format(
        "nu,L,cells,samples,in_range,max_error,error_bound,error_pass,check_all,rotation_closure,round_trip,"
        "probability_sum\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        a.nu, a.l, cells, samples, in_range, format_number(max_error), format_number(qc.error_bound()),
        error_pass ? 1 : 0, a.check_all ? 1 : 0, rotation ? 1 : 0, roundtrip ? 1 : 0,
        a.check_all ? format_number(prob_sum) : std::string(""));
    const bool ok = error_pass && rotation && roundtrip;
    finish(common, "quantizer", seed, {{"quantizer.csv", csv}});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Computation alignment simulator: bounds, network simulation and module diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config, "flat key = value file; command-line flags win");
    app.add_option("--out", common.out, "output directory for artifacts and manifest.json")->capture_default_str();
    app.add_option("--seed", common.seed, "master seed")->capture_default_str();

    BoundsArgs ba;
    auto* bounds = app.add_subcommand("bounds", "closed-form bound sweep (bounds.csv, waterfill.csv)");
    bounds->add_option("--k", ba.k, "user counts, e.g. 2,3,4 (required)");
    bounds->add_option("--p", ba.p, "power grid: list or lo:hi:log / lo:hi:step")->capture_default_str();
    bounds->add_option("--d", ba.d, "layer counts")->capture_default_str();

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "end-to-end network simulation (report.json, layers.csv)");
    sim->add_option("--k", sa.k, "users per layer")->capture_default_str();
    sim->add_option("--d", sa.d, "layers")->capture_default_str();
    sim->add_option("--p", sa.p, "power per transmitter")->capture_default_str();
    sim->add_option("--mode", sa.mode, "two_user or general")->check(CLI::IsMember({"two_user", "general"}))->capture_default_str();
    sim->add_option("--l", sa.l, "time expansion L (two_user)")->capture_default_str();
    sim->add_option("--i", sa.i, "exponent range I (general)")->capture_default_str();
    sim->add_option("--nu", sa.nu, "quantizer range")->capture_default_str();
    sim->add_option("--eta", sa.eta, "typicality slack")->capture_default_str();
    sim->add_option("--q", sa.q, "field size, 0 = smallest safe prime")->capture_default_str();
    sim->add_option("--trials", sa.trials, "independent trials")->capture_default_str();
    sim->add_option("--matching", sa.matching, "synthetic or greedy")->check(CLI::IsMember({"synthetic", "greedy"}))->capture_default_str();
    sim->add_option("--t", sa.t, "greedy: slots per layer")->capture_default_str();
    sim->add_option("--tuples", sa.tuples, "synthetic: tuples per layer")->capture_default_str();
    sim->add_option("--fading", sa.fading, "iid or ar1")->check(CLI::IsMember({"iid", "ar1"}))->capture_default_str();
    sim->add_option("--correlation", sa.correlation, "AR(1) correlation")->capture_default_str();
    sim->add_flag("--noiseless", sa.noiseless, "drop receiver noise");
    sim->add_flag("--representative", sa.representative, "set true gains to cell representatives");
    sim->add_flag("--enforce-typicality", sa.enforce_typicality, "greedy: typicality failure is an outage");
    sim->add_option("--error-target", sa.error_target, "end-to-end block error target")->capture_default_str();
    sim->add_option("--bootstrap", sa.bootstrap, "bootstrap resamples")->capture_default_str();

    CodecArgs ca;
    auto* codec = app.add_subcommand("codec", "lattice codec AWGN sweep (codec.csv)");
    codec->add_option("--sinr-db", ca.sinr_db, "SINR grid in dB")->capture_default_str();
    codec->add_option("--q", ca.q, "prime field size")->capture_default_str();
    codec->add_option("--n", ca.n, "real dimensions per block")->capture_default_str();
    codec->add_option("--blocks", ca.blocks, "blocks per SINR point")->capture_default_str();

    MatchArgs ma;
    auto* match_cmd = app.add_subcommand("match", "greedy matching statistics (match.csv, match.json)");
    match_cmd->add_option("--k", ma.k, "users")->capture_default_str();
    match_cmd->add_option("--mode", ma.mode, "two_user or general")->check(CLI::IsMember({"two_user", "general"}))->capture_default_str();
    match_cmd->add_option("--l", ma.l, "time expansion L (two_user)")->capture_default_str();
    match_cmd->add_option("--i", ma.i, "exponent range I (general)")->capture_default_str();
    match_cmd->add_option("--nu", ma.nu, "quantizer range")->capture_default_str();
    match_cmd->add_option("--t", ma.t, "slots")->capture_default_str();
    match_cmd->add_option("--eta", ma.eta, "typicality slack")->capture_default_str();
    match_cmd->add_option("--fading", ma.fading, "iid or ar1")->check(CLI::IsMember({"iid", "ar1"}))->capture_default_str();
    match_cmd->add_option("--correlation", ma.correlation, "AR(1) correlation")->capture_default_str();

    QuantizerArgs qa;
    auto* quant = app.add_subcommand("quantizer", "quantizer property checks (quantizer.csv)");
    quant->add_option("--nu", qa.nu, "quantizer range")->capture_default_str();
    quant->add_option("--l", qa.l, "angular multiplier L")->capture_default_str();
    quant->add_option("--samples", qa.samples, "Rayleigh samples for the error check")->capture_default_str();
    quant->add_flag("--check-all", qa.check_all, "exhaustive per-cell checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!common.config.empty()) apply_config(app, *sub, read_config(common.config));
        if (sub == bounds) return cmd_bounds(common, ba);
        if (sub == sim) return cmd_simulate(common, sa);
        if (sub == codec) return cmd_codec(common, ca);
        if (sub == match_cmd) return cmd_match(common, ma);
        if (sub == quant) return cmd_quantizer(common, qa);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
