#include "vlqkd/runner.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vlqkd/errors.hpp"
#include "vlqkd/rng.hpp"

namespace vlqkd {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_double(double x) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{})
        throw numeric_error("cannot format double");
    return std::string(buf, end);
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path())
        fs::create_directories(target.parent_path(), ec);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw config_error("cannot open for writing: " + tmp.string());
        out << bytes;
        out.flush();
        if (!out)
            throw config_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec)
        throw config_error("cannot move " + tmp.string() + " into place: " +
                           ec.message());
}

namespace {

std::uint64_t subseed(std::uint64_t master, std::uint64_t stream) {
    return CounterRng::child(master, stream).key();
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const json kColumns = json::array({"t", "R_fixed", "Rbar_fixed",
                                   "Rbar_fixed_stderr", "Rbar_variable",
                                   "Rbar_variable_stderr"});

// One row per acceptance radius; the scalar variable-length estimate is
// repeated so every row is a self-contained record.
std::string rate_csv(const std::vector<double>& t_grid,
                     const std::vector<LadderRung>& rungs,
                     const std::vector<RateEstimate>& fixed_expected,
                     const RateEstimate& variable) {
    std::string csv = "t,R_fixed,Rbar_fixed,Rbar_fixed_stderr,"
                      "Rbar_variable,Rbar_variable_stderr\n";
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        csv += format_double(t_grid[i]);
        csv += ',';
        csv += format_double(rungs[i].rate);
        csv += ',';
        csv += format_double(fixed_expected[i].rate);
        csv += ',';
        csv += format_double(fixed_expected[i].stderr_);
        csv += ',';
        csv += format_double(variable.rate);
        csv += ',';
        csv += format_double(variable.stderr_);
        csv += '\n';
    }
    return csv;
}

RunArtifacts write_rate_artifacts(const ExperimentConfig& cfg,
                                  const std::string& name,
                                  const std::string& csv, json extra) {
    RunArtifacts files;
    files.csv_hash = fnv1a64(csv);
    files.csv_path = (fs::path(cfg.out_dir) / (name + ".csv")).string();
    files.manifest_path =
        (fs::path(cfg.out_dir) / (name + ".manifest.json")).string();

    json manifest = {{"artifact", name + ".csv"},
                     {"columns", kColumns},
                     {"config", cfg.to_json()},
                     {"config_fnv1a64", hash_hex(fnv1a64(cfg.to_json().dump()))},
                     {"csv_fnv1a64", hash_hex(files.csv_hash)},
                     {"rows", cfg.t_grid.size()},
                     {"version", std::string(kVlqkdVersion)}};
    manifest.update(extra);

    write_file_atomic(files.csv_path, csv);
    write_file_atomic(files.manifest_path, manifest.dump(2) + "\n");
    return files;
}

} // namespace

Fig1Run run_fig1(const ExperimentConfig& cfg, bool full) {
    cfg.validate();
    Fig1Run run;
    run.trials = full ? cfg.trials_full : cfg.trials;
    run.rates = known_channel_rates(cfg.honest, cfg.t_grid, cfg.protocol(),
                                    cfg.fixed_budget, cfg.variable_budget,
                                    run.trials, subseed(cfg.seed, 1),
                                    cfg.ladder_opts);
    auto csv = rate_csv(cfg.t_grid, run.rates.fixed.rungs,
                        run.rates.fixed_expected, run.rates.variable_expected);
    run.files = write_rate_artifacts(
        cfg, "fig1", csv, json{{"full", full}, {"trials", run.trials}});
    return run;
}

Fig2Run run_fig2(const ExperimentConfig& cfg) {
    cfg.validate();
    Fig2Run run;
    run.rates = ensemble_rates(cfg.ensemble, cfg.t_grid, cfg.protocol(),
                               cfg.fixed_budget, cfg.variable_budget,
                               cfg.runs_per_channel, subseed(cfg.seed, 2),
                               cfg.ladder_opts, cfg.sample_opts);
    auto csv = rate_csv(cfg.t_grid, run.rates.fixed.rungs,
                        run.rates.fixed_expected, run.rates.variable_expected);
    run.files = write_rate_artifacts(
        cfg, "fig2", csv,
        json{{"runs_per_channel", cfg.runs_per_channel},
             {"ensemble_size", cfg.ensemble.members.size()}});
    return run;
}

HashRun run_hash_report(const ExperimentConfig& cfg) {
    cfg.validate();
    const HashingConfig& h = cfg.hashing;
    HashRun run;

    CounterRng pair_rng = CounterRng::child(cfg.seed, 3);
    BitVec z1 = BitVec::random(h.in_len, pair_rng);
    BitVec z2 = BitVec::random(h.in_len, pair_rng);
    if (z1 == z2)
        z2.set(0, !z2.get(0));
    run.same_length = same_length_collision_experiment(z1, z2, h.out_len,
                                                       h.draws,
                                                       subseed(cfg.seed, 4));

    BitVec zeros_short(h.zero_len_short);
    BitVec zeros_long(h.zero_len_long);
    run.naive_variable = naive_collision_experiment(zeros_short, zeros_long,
                                                    h.out_len, h.draws,
                                                    subseed(cfg.seed, 5));
    run.virtual_variable = virtual_collision_experiment(zeros_short, zeros_long,
                                                        h.out_len, h.draws,
                                                        subseed(cfg.seed, 6));

    CounterRng uni_rng = CounterRng::child(cfg.seed, 7);
    BitVec u = BitVec::random(h.uniformity_len, uni_rng);
    run.uniformity = virtual_uniformity_experiment(u, h.uniformity_out, h.draws,
                                                   subseed(cfg.seed, 8));

    run.ok = run.same_length.pass && !run.naive_variable.pass &&
             run.virtual_variable.pass && run.uniformity.pass;

    auto collision_json = [](const CollisionStats& s, const std::string& pair) {
        return json{{"pair", pair},
                    {"draws", s.draws},
                    {"collisions", s.collisions},
                    {"rate", s.rate},
                    {"bound", s.bound},
                    {"sigma", s.sigma},
                    {"verdict", s.pass ? "PASS" : "VIOLATION"}};
    };
    std::string zero_pair = "0^" + std::to_string(h.zero_len_short) + " vs 0^" +
                            std::to_string(h.zero_len_long);
    run.report = json{
        {"config", cfg.to_json()["hashing"]},
        {"seed", cfg.seed},
        {"version", std::string(kVlqkdVersion)},
        {"same_length",
         collision_json(run.same_length,
                        "two distinct random " + std::to_string(h.in_len) +
                            "-bit strings")},
        {"naive_variable", collision_json(run.naive_variable, zero_pair)},
        {"virtual_variable", collision_json(run.virtual_variable, zero_pair)},
        {"uniformity",
         {{"input",
           "fixed random " + std::to_string(h.uniformity_len) + "-bit string"},
          {"draws", run.uniformity.draws},
          {"bins", run.uniformity.bins},
          {"statistic", run.uniformity.statistic},
          {"p_value", run.uniformity.p_value},
          {"verdict", run.uniformity.pass ? "PASS" : "FAIL"}}},
        {"ok", run.ok}};

    run.report_path = (fs::path(cfg.out_dir) / "hash_report.json").string();
    write_file_atomic(run.report_path, run.report.dump(2) + "\n");
    return run;
}

} // namespace vlqkd
