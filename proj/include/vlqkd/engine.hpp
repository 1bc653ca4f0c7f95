#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "vlqkd/bb84.hpp"
#include "vlqkd/entropy_opt.hpp"
#include "vlqkd/finite_size.hpp"

namespace vlqkd {

// Nested family of acceptance tests || fobs - center ||_1 <= t_i.
struct AcceptanceLadder {
    FrequencyVector center;
    std::vector<double> radii; // t_1 <= t_2 <= ..., all >= 0

    void validate() const;
};

// Smallest rung whose ball contains fobs, or nullopt = abort. Because the
// radii nest, {accept_index == i} are exactly the disjoint partition cells
// of the acceptance region.
std::optional<std::size_t> accept_index(const FrequencyVector& fobs,
                                        const AcceptanceLadder& ladder);

// One fixed-length protocol: accept within radius t, key length from the
// certified entropy bound over the radius-(t + mu) feasible set.
struct LadderRung {
    double t = 0.0;
    double entropy_lb = 0.0; // bits/signal, non-increasing across rungs
    std::int64_t l = 0;
    std::int64_t leak = 0;
    double rate = 0.0; // l / n_total
};

// Key-length decisions for every rung of one acceptance ladder under one
// budget. Certificates are monotonized across the nested feasible sets (a
// bound for a larger set is also valid for any smaller one), which makes
// l_i + leak_i non-increasing by construction.
struct DecisionLadder {
    AcceptanceLadder acceptance;
    std::vector<LadderRung> rungs;

    void validate() const;
};

DecisionLadder build_decision_ladder(const FrequencyVector& center,
                                     const std::vector<double>& radii,
                                     const ProtocolParams& params,
                                     const SecurityBudget& budget,
                                     const OptOptions& opts = {});

struct RateEstimate {
    double rate = 0.0;
    double stderr_ = 0.0;
    std::uint64_t trials = 0;
};

// Known-channel comparison: the fixed-length curve over the rung grid vs the
// per-rung variable-length protocol assembled from the same acceptance
// ladder. `fixed_expected[i]` is (empirical acceptance fraction at rung i) x
// rate-on-acceptance with binomial stderr; `variable_expected` averages the
// rate of the first accepting rung (0 on abort) with sample stderr. Both use
// the same per-trial statistics.
struct KnownChannelRates {
    DecisionLadder fixed;    // built with fixed_budget
    DecisionLadder variable; // built with variable_budget
    std::vector<RateEstimate> fixed_expected;
    RateEstimate variable_expected;
};

KnownChannelRates known_channel_rates(const ChannelParams& honest,
                                      const std::vector<double>& radii,
                                      const ProtocolParams& params,
                                      const SecurityBudget& fixed_budget,
                                      const SecurityBudget& variable_budget,
                                      std::uint64_t trials, std::uint64_t seed,
                                      const OptOptions& opts = {});

struct WeightedChannel {
    ChannelParams channel;
    double weight = 0.0;
};

struct ChannelEnsemble {
    std::vector<WeightedChannel> members;

    void validate() const; // weights nonnegative, sum 1 within 1e-12
    // Uniform grid over depol {0.02..0.05} x misalignment {2..10 degrees}.
    static ChannelEnsemble bb84_grid();
    // Member with the least depolarization, ties broken by least angle.
    const WeightedChannel& best_member() const;
};

// Unpredictable-channel comparison. The fixed-length baseline is one ladder
// centered on the statistics of the best ensemble member; its expected rate
// averages per-member acceptance fractions with the ensemble weights. The
// variable side decides a key length per sampled statistic (adaptive leak)
// and averages l/N the same way. sample_opts trades optimizer effort per
// sample against runtime; every certificate stays a valid lower bound.
struct EnsembleRates {
    DecisionLadder fixed;
    std::vector<RateEstimate> fixed_expected;
    RateEstimate variable_expected;
};

EnsembleRates ensemble_rates(const ChannelEnsemble& ensemble,
                             const std::vector<double>& radii,
                             const ProtocolParams& params,
                             const SecurityBudget& fixed_budget,
                             const SecurityBudget& variable_budget,
                             std::uint64_t runs_per_channel, std::uint64_t seed,
                             const OptOptions& ladder_opts = {},
                             const OptOptions& sample_opts = {});

// Per-sample comparison of the two decision paths under one shared budget
// and one shared (constant) error-correction allowance: whenever the ladder
// accepts at rung i, the per-statistic decision must produce l >= l_i. The
// per-statistic certificate may fall back on the rung certificate (valid for
// the smaller feasible set by containment); `clamped` counts how often that
// fallback engaged.
struct DominanceReport {
    std::uint64_t samples = 0;
    std::uint64_t accepted = 0;
    std::uint64_t violations = 0;
    std::uint64_t clamped = 0;
    std::int64_t min_margin = std::numeric_limits<std::int64_t>::max();
};

DominanceReport per_sample_dominance(const ChannelParams& honest,
                                     const std::vector<double>& radii,
                                     const ProtocolParams& params,
                                     const SecurityBudget& budget,
                                     std::uint64_t samples, std::uint64_t seed,
                                     const OptOptions& ladder_opts = {},
                                     const OptOptions& sample_opts = {});

} // namespace vlqkd
