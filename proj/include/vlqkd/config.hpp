#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlqkd/engine.hpp"
#include "vlqkd/finite_size.hpp"

namespace vlqkd {

// Hashing-experiment knobs for the hash-report pipeline.
struct HashingConfig {
    std::size_t in_len = 64;        // same-length collision pair length
    std::size_t out_len = 16;       // hash width l
    std::size_t zero_len_short = 10; // the all-zero counterexample pair
    std::size_t zero_len_long = 20;
    std::size_t uniformity_len = 32; // fixed input for the chi-square test
    std::size_t uniformity_out = 8;
    std::uint64_t draws = 1000000;

    void validate() const;
};

// Everything one batch run needs; loaded from a single JSON file and echoed
// canonically into the run manifest.
struct ExperimentConfig {
    // protocol
    std::int64_t n_total = 1000000;
    double m_fraction = 0.05;
    double p_z = 0.5;
    double f_ec = 1.16;
    int d_z = 2;
    CorrectionBase base = CorrectionBase::TwoDzPlusOne;

    // security budgets
    double eps_secure = 1e-12;
    SecurityBudget fixed_budget{5e-13, 5e-13, 5e-13};
    SecurityBudget variable_budget{2.5e-13, 2.5e-13, 5e-13};

    // acceptance ladder grid
    std::vector<double> t_grid;

    // channels
    ChannelParams honest{0.02, 2.0};
    ChannelEnsemble ensemble;

    // Monte Carlo
    std::uint64_t trials = 10000;         // known-channel acceptance trials
    std::uint64_t trials_full = 100000;   // used when --full is given
    std::uint64_t runs_per_channel = 50;  // ensemble runs
    std::uint64_t seed = 20250825;

    // optimizer effort: ladders get the tight settings, per-sample decisions
    // the cheaper ones (their certificates stay valid at any iteration cap)
    OptOptions ladder_opts{1e-5, 500, 1e-9};
    OptOptions sample_opts{1e-5, 60, 1e-9};

    HashingConfig hashing;

    std::string out_dir = "out";

    ProtocolParams protocol() const;
    void validate() const;

    nlohmann::json to_json() const; // canonical (sorted keys) echo
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig defaults();
};

// Parse + validate; config_error carries field-level messages.
ExperimentConfig load_config(const std::string& path);

} // namespace vlqkd
