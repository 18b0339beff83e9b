#include "calign/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/core.h>
#include <openssl/evp.h>

namespace calign {
namespace {

ordered_json number(double x) {
    if (std::isfinite(x)) return x;
    return format_number(x);
}

const char* mode_name(PatternMode m) { return m == PatternMode::two_user ? "two_user" : "general"; }

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

std::string bound_csv_row(const BoundReport& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{}", r.K, format_number(r.P), r.D, format_number(r.lower),
                       format_number(r.upper_exact), format_number(r.upper), format_number(r.achievable),
                       format_number(r.gap), format_number(r.cf_gap));
}

std::string codec_csv(const std::vector<CodecSweepRow>& rows) {
    std::string out = "sinr_db,q,n,error_rate,computation_rate,codec_rate,oracle\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{}\n", format_number(r.sinr_db), r.q, r.n,
                           format_number(r.error_rate), format_number(r.rate_bound),
                           format_number(r.codec_rate), format_number(r.oracle));
    }
    return out;
}

ordered_json to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["K"] = c.K;
    j["D"] = c.D;
    j["P"] = c.P;
    j["mode"] = mode_name(c.mode);
    j["L"] = c.mode == PatternMode::two_user ? c.L : c.pattern().L;
    j["I"] = c.I;
    j["nu"] = c.nu;
    j["eta"] = c.eta;
    j["q"] = c.q;
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["matching"] = c.matching == MatchingMode::greedy ? "greedy" : "synthetic";
    j["T"] = c.T;
    j["tuples"] = c.tuples;
    j["fading"] = c.fading == ProcessKind::iid ? "iid" : "ar1";
    j["correlation"] = c.correlation;
    j["noiseless"] = c.noiseless;
    j["representative_gains"] = c.representative_gains;
    j["enforce_typicality"] = c.enforce_typicality;
    j["error_target"] = c.error_target;
    j["bootstrap_resamples"] = c.bootstrap_resamples;
    return j;
}

ordered_json to_json(const LayerReport& r) {
    ordered_json j;
    j["layer"] = r.layer;
    j["tuples"] = r.tuples;
    j["channel_uses"] = r.channel_uses;
    j["matched_fraction"] = number(r.matched_fraction);
    j["delta"] = number(r.delta);
    j["typicality_checked"] = r.typicality_checked;
    j["typicality_pass"] = r.typicality_pass;
    j["outage"] = r.outage;
    j["q"] = r.q;
    j["streams_per_transmitter"] = r.streams_per_transmitter;
    j["formula_rate"] = number(r.formula_rate);
    j["empirical_rate"] = number(r.empirical_rate);
    ordered_json per_tx = ordered_json::array();
    for (double v : r.per_transmitter_rate) per_tx.push_back(number(v));
    j["per_transmitter_rate"] = per_tx;
    j["sinr"] = {{"subchannels", r.sinr.subchannels}, {"min", number(r.sinr.min)},
                 {"mean", number(r.sinr.mean)},       {"mean_db", number(r.sinr.mean_db)},
                 {"max", number(r.sinr.max)},         {"bound_violations", r.sinr.bound_violations}};
    j["codec_tuples"] = r.codec_tuples;
    j["invertible_tuples"] = r.invertible_tuples;
    j["modulus_outages"] = r.modulus_outages;
    j["block_errors"] = r.block_errors;
    j["symbol_errors"] = r.symbol_errors;
    j["symbols"] = r.symbols;
    j["error_rate"] = number(r.error_rate);
    j["error_budget"] = number(r.error_budget);
    j["meets_error_target"] = r.meets_error_target;
    return j;
}

ordered_json to_json(const NetworkReport& r) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = to_json(r.config);
    ordered_json trials = ordered_json::array();
    for (const auto& t : r.trials) {
        ordered_json tj;
        tj["trial"] = t.trial;
        tj["blocks"] = t.blocks;
        tj["end_to_end_block_errors"] = t.end_to_end_block_errors;
        tj["end_to_end_error"] = number(t.end_to_end_error);
        tj["union_bound"] = number(t.union_bound);
        tj["end_to_end_rate"] = number(t.end_to_end_rate);
        tj["formula_rate"] = number(t.formula_rate);
        tj["mean_sinr_db"] = number(t.mean_sinr_db);
        ordered_json layers = ordered_json::array();
        for (const auto& l : t.layers) layers.push_back(to_json(l));
        tj["layers"] = layers;
        trials.push_back(tj);
    }
    j["trials"] = trials;
    auto interval = [](const Interval& iv) {
        return ordered_json{{"estimate", number(iv.estimate)}, {"lo", number(iv.lo)}, {"hi", number(iv.hi)}};
    };
    j["sinr_db_ci95"] = interval(r.sinr_db);
    j["end_to_end_rate_ci95"] = interval(r.end_to_end_rate);
    j["mean_end_to_end_error"] = number(r.mean_end_to_end_error);
    return j;
}

ordered_json to_json(const EquationSystem& s) {
    ordered_json j;
    j["q"] = s.q;
    ordered_json cols = ordered_json::array();
    for (const auto& c : s.columns) cols.push_back({c.k, c.index});
    j["columns"] = cols;
    ordered_json rows = ordered_json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"receiver", r.receiver}, {"subchannel", r.subchannel}, {"coefficients", r.coefficients}});
    }
    j["rows"] = rows;
    return j;
}

ordered_json to_json(const SubchannelSpec& s) {
    ordered_json j;
    j["receiver"] = s.receiver;
    j["filter_id"] = s.filter_id;
    j["filter_power"] = s.filter_power;
    j["coefficients"] = s.coefficients;
    ordered_json streams = ordered_json::array();
    for (const auto& st : s.streams) streams.push_back({st.k, st.index});
    j["streams"] = streams;
    j["beta"] = number(s.beta);
    j["post_scale"] = s.post_scale.to_string();
    j["gamma2"] = number(s.gamma2);
    j["sigma2_bound"] = number(s.sigma2_bound);
    j["flagged"] = s.flagged;
    return j;
}

std::string network_csv(const NetworkReport& r) {
    std::string out =
        "trial,layer,tuples,q,formula_rate,empirical_rate,sinr_min,sinr_mean_db,bound_violations,"
        "error_rate,meets_error_target,end_to_end_error\n";
    for (const auto& t : r.trials) {
        for (const auto& l : t.layers) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", t.trial, l.layer, l.tuples, l.q,
                               format_number(l.formula_rate), format_number(l.empirical_rate),
                               format_number(l.sinr.min), format_number(l.sinr.mean_db), l.sinr.bound_violations,
                               format_number(l.error_rate), l.meets_error_target ? 1 : 0,
                               format_number(t.end_to_end_error));
        }
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericError("sha256_hex: digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

ordered_json to_json(const RunManifest& m) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["subcommand"] = m.subcommand;
    j["config"] = m.config_path;
    j["output_dir"] = m.output_dir;
    j["seed"] = m.seed;
    ordered_json arts = ordered_json::array();
    for (const auto& [name, hash] : m.artifacts) arts.push_back({{"name", name}, {"sha256", hash}});
    j["artifacts"] = arts;
    return j;
}

RunManifest write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts,
                            RunManifest manifest) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError(fmt::format("cannot open {} for writing", (dir / name).string()));
        f << content;
        f.flush();
        if (!f) throw ConfigError(fmt::format("failed writing {}", (dir / name).string()));
    };
    manifest.artifacts.clear();
    for (const auto& a : artifacts) {
        write(a.name, a.content);
        manifest.artifacts.emplace_back(a.name, sha256_hex(a.content));
    }
    write("manifest.json", to_json(manifest).dump(2) + "\n");
    return manifest;
}

}  // namespace calign
