#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vlqkd/config.hpp"
#include "vlqkd/engine.hpp"
#include "vlqkd/hashing.hpp"

namespace vlqkd {

inline constexpr std::string_view kVlqkdVersion = "1.0.0";

// 64-bit FNV-1a over raw bytes; manifests record the CSV hash so two runs
// can be compared without diffing the files.
std::uint64_t fnv1a64(std::string_view bytes);

// Shortest decimal that round-trips the double (std::to_chars).
std::string format_double(double x);

// Write to <path>.tmp then rename, so readers never observe a partial file.
// Creates parent directories as needed. Throws config_error on IO failure.
void write_file_atomic(const std::string& path, const std::string& bytes);

struct RunArtifacts {
    std::string csv_path;
    std::string manifest_path;
    std::uint64_t csv_hash = 0;
};

// Known-channel comparison over cfg.t_grid, written to <out_dir>/fig1.csv
// plus a manifest echoing the full configuration. Columns: t, R_fixed,
// Rbar_fixed, Rbar_fixed_stderr, Rbar_variable, Rbar_variable_stderr. The
// variable-length estimate is a scalar and is repeated on every row.
struct Fig1Run {
    KnownChannelRates rates;
    std::uint64_t trials = 0;
    RunArtifacts files;
};

Fig1Run run_fig1(const ExperimentConfig& cfg, bool full = false);

// Channel-ensemble comparison, same column layout, <out_dir>/fig2.csv.
struct Fig2Run {
    EnsembleRates rates;
    RunArtifacts files;
};

Fig2Run run_fig2(const ExperimentConfig& cfg);

// Collision and uniformity harness, written to <out_dir>/hash_report.json.
// `ok` means every section behaved as the theory predicts: the same-length
// and mask-corrected variable-length rates sit at the two-universality
// bound, the uncorrected per-length scheme collides on the all-zero pair,
// and the output histogram is uniform.
struct HashRun {
    CollisionStats same_length;
    CollisionStats naive_variable;
    CollisionStats virtual_variable;
    UniformityStats uniformity;
    nlohmann::json report;
    std::string report_path;
    bool ok = false;
};

HashRun run_hash_report(const ExperimentConfig& cfg);

} // namespace vlqkd
