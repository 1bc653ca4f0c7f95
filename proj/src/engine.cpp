#include "vlqkd/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "vlqkd/errors.hpp"

namespace vlqkd {

namespace {

// The 1-norm ball of radius 2 already contains every distribution pair.
double clamp_radius(double r) { return std::min(r, 2.0); }

// Memoizes certified entropy lower bounds on the exact (center, radius) bit
// patterns; a rung grid visits the same spec repeatedly.
class CertCache {
  public:
    CertCache(const ProtocolParams& params, const OptOptions& opts)
        : setup_(Bb84Setup::make(params.p_z)), ch_(bb84_key_channel(setup_)),
          opts_(opts) {}

    double cert(const FrequencyVector& center, double radius) {
        std::array<std::uint64_t, 17> key;
        for (int i = 0; i < 16; ++i)
            key[i] = std::bit_cast<std::uint64_t>(center[i]);
        key[16] = std::bit_cast<std::uint64_t>(radius);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        FeasibleSpec spec;
        spec.center = center;
        spec.radius = radius;
        spec.sigma_bar_a = setup_.sigma_bar_a;
        double lb = minimize_entropy(setup_, ch_, spec, opts_).certified_lower;
        memo_.emplace(key, lb);
        return lb;
    }

  private:
    Bb84Setup setup_;
    KrausChannel ch_;
    OptOptions opts_;
    std::map<std::array<std::uint64_t, 17>, double> memo_;
};

FrequencyVector honest_statistics(const ChannelParams& ch, double p_z) {
    auto setup = Bb84Setup::make(p_z);
    return born_distribution(setup, honest_state(ch));
}

double sample_stderr(double sum, double sumsq, std::uint64_t n) {
    if (n < 2)
        return 0.0;
    double mean = sum / double(n);
    double var = (sumsq - double(n) * mean * mean) / double(n - 1);
    return std::sqrt(std::max(0.0, var) / double(n));
}

} // namespace

void AcceptanceLadder::validate() const {
    center.validate();
    if (radii.empty())
        throw config_error("acceptance ladder needs at least one radius");
    double prev = 0.0;
    for (double t : radii) {
        if (!(t >= prev)) // catches NaN and order violations
            throw config_error("acceptance radii must be nonnegative and non-decreasing");
        prev = t;
    }
}

std::optional<std::size_t> accept_index(const FrequencyVector& fobs,
                                        const AcceptanceLadder& ladder) {
    double d = l1_distance(fobs, ladder.center);
    for (std::size_t i = 0; i < ladder.radii.size(); ++i)
        if (d <= ladder.radii[i])
            return i;
    return std::nullopt;
}

void DecisionLadder::validate() const {
    acceptance.validate();
    if (rungs.size() != acceptance.radii.size())
        throw config_error("decision ladder out of step with acceptance ladder");
    for (std::size_t i = 0; i < rungs.size(); ++i) {
        const auto& r = rungs[i];
        if (r.t != acceptance.radii[i])
            throw config_error("rung radius mismatch");
        if (r.l < 0 || r.leak < 0)
            throw config_error("rung with negative length");
        if (i > 0) {
            if (rungs[i - 1].l + rungs[i - 1].leak < r.l + r.leak)
                throw config_error("l + leak must be non-increasing across rungs");
            if (rungs[i - 1].entropy_lb < r.entropy_lb)
                throw config_error("rung certificates must be non-increasing");
        }
    }
}

DecisionLadder build_decision_ladder(const FrequencyVector& center,
                                     const std::vector<double>& radii,
                                     const ProtocolParams& params,
                                     const SecurityBudget& budget,
                                     const OptOptions& opts) {
    params.validate();
    budget.validate();
    DecisionLadder ladder;
    ladder.acceptance = AcceptanceLadder{center, radii};
    ladder.acceptance.validate();

    double mu = mu_radius(params.m_test, 16, budget.eps_at);
    std::int64_t leak = ec_leak_bits(center, params);

    CertCache cache(params, opts);
    std::size_t m = radii.size();
    std::vector<double> certs(m);
    for (std::size_t i = 0; i < m; ++i)
        certs[i] = cache.cert(center, clamp_radius(radii[i] + mu));
    // A certificate for a larger feasible set lower-bounds every nested
    // smaller one, so taking suffix maxima keeps validity and removes any
    // solver-noise inversions.
    for (std::size_t i = m - 1; i-- > 0;)
        certs[i] = std::max(certs[i], certs[i + 1]);

    ladder.rungs.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& rung = ladder.rungs[i];
        rung.t = radii[i];
        rung.entropy_lb = certs[i];
        rung.l = key_length_fixed(certs[i], leak, params, budget).l;
        rung.leak = leak;
        rung.rate = double(rung.l) / double(params.n_total);
    }
    ladder.validate();
    return ladder;
}

KnownChannelRates known_channel_rates(const ChannelParams& honest,
                                      const std::vector<double>& radii,
                                      const ProtocolParams& params,
                                      const SecurityBudget& fixed_budget,
                                      const SecurityBudget& variable_budget,
                                      std::uint64_t trials, std::uint64_t seed,
                                      const OptOptions& opts) {
    if (trials == 0)
        throw config_error("need at least one trial");
    FrequencyVector center = honest_statistics(honest, params.p_z);

    KnownChannelRates out;
    out.fixed = build_decision_ladder(center, radii, params, fixed_budget, opts);
    out.variable =
        build_decision_ladder(center, radii, params, variable_budget, opts);

    std::size_t m = radii.size();
    std::vector<std::uint64_t> accept_counts(m, 0);
    double sum = 0.0, sumsq = 0.0;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        CounterRng rng = CounterRng::child(seed, trial);
        FrequencyVector fobs =
            sample_frequencies(center, std::uint64_t(params.m_test), rng);
        double d = l1_distance(fobs, center);
        std::optional<std::size_t> idx;
        for (std::size_t i = 0; i < m; ++i) {
            if (d <= radii[i]) {
                if (!idx)
                    idx = i;
                ++accept_counts[i];
            }
        }
        double x = idx ? out.variable.rungs[*idx].rate : 0.0;
        sum += x;
        sumsq += x * x;
    }

    out.fixed_expected.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double p = double(accept_counts[i]) / double(trials);
        double r = out.fixed.rungs[i].rate;
        out.fixed_expected[i] = {p * r,
                                 r * std::sqrt(p * (1.0 - p) / double(trials)),
                                 trials};
    }
    out.variable_expected = {sum / double(trials),
                             sample_stderr(sum, sumsq, trials), trials};
    return out;
}

void ChannelEnsemble::validate() const {
    if (members.empty())
        throw config_error("channel ensemble must not be empty");
    double total = 0.0;
    for (const auto& m : members) {
        if (!(m.weight >= 0.0))
            throw config_error("ensemble weights must be nonnegative");
        if (!(m.channel.depol >= 0.0 && m.channel.depol <= 1.0))
            throw config_error("depolarization probability must lie in [0,1]");
        total += m.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw config_error("ensemble weights must sum to 1");
}

ChannelEnsemble ChannelEnsemble::bb84_grid() {
    ChannelEnsemble e;
    for (double q : {0.02, 0.03, 0.04, 0.05})
        for (double deg : {2.0, 4.0, 6.0, 8.0, 10.0})
            e.members.push_back({ChannelParams{q, deg}, 1.0 / 20.0});
    return e;
}

const WeightedChannel& ChannelEnsemble::best_member() const {
    if (members.empty())
        throw config_error("channel ensemble must not be empty");
    const WeightedChannel* best = &members[0];
    for (const auto& m : members) {
        if (m.channel.depol < best->channel.depol ||
            (m.channel.depol == best->channel.depol &&
             m.channel.misalign_deg < best->channel.misalign_deg))
            best = &m;
    }
    return *best;
}

EnsembleRates ensemble_rates(const ChannelEnsemble& ensemble,
                             const std::vector<double>& radii,
                             const ProtocolParams& params,
                             const SecurityBudget& fixed_budget,
                             const SecurityBudget& variable_budget,
                             std::uint64_t runs_per_channel, std::uint64_t seed,
                             const OptOptions& ladder_opts,
                             const OptOptions& sample_opts) {
    ensemble.validate();
    if (runs_per_channel == 0)
        throw config_error("need at least one run per channel");

    auto setup = Bb84Setup::make(params.p_z);
    auto ch = bb84_key_channel(setup);
    FrequencyVector center =
        honest_statistics(ensemble.best_member().channel, params.p_z);

    EnsembleRates out;
    out.fixed =
        build_decision_ladder(center, radii, params, fixed_budget, ladder_opts);

    std::size_t m = radii.size();
    out.fixed_expected.assign(m, RateEstimate{});
    std::vector<double> fixed_var(m, 0.0);
    double var_rate = 0.0, var_var = 0.0;
    std::uint64_t used = 0;

    for (std::size_t j = 0; j < ensemble.members.size(); ++j) {
        const auto& member = ensemble.members[j];
        if (member.weight == 0.0)
            continue; // never sampled; streams stay keyed by (j, run)
        FrequencyVector fbar = honest_statistics(member.channel, params.p_z);

        std::vector<std::uint64_t> counts(m, 0);
        double sum = 0.0, sumsq = 0.0;
        for (std::uint64_t run = 0; run < runs_per_channel; ++run) {
            std::uint64_t unit = j * runs_per_channel + run;
            CounterRng rng_f = CounterRng::child(seed, 2 * unit);
            FrequencyVector fobs =
                sample_frequencies(fbar, std::uint64_t(params.m_test), rng_f);
            double d = l1_distance(fobs, center);
            for (std::size_t i = 0; i < m; ++i)
                if (d <= radii[i])
                    ++counts[i];

            CounterRng rng_v = CounterRng::child(seed, 2 * unit + 1);
            FrequencyVector fobs_v =
                sample_frequencies(fbar, std::uint64_t(params.m_test), rng_v);
            auto decision = variable_length_decision(
                setup, ch, fobs_v, params, variable_budget, sample_opts);
            double x = double(decision.l) / double(params.n_total);
            sum += x;
            sumsq += x * x;
        }
        used += runs_per_channel;

        for (std::size_t i = 0; i < m; ++i) {
            double p = double(counts[i]) / double(runs_per_channel);
            double wr = member.weight * out.fixed.rungs[i].rate;
            out.fixed_expected[i].rate += wr * p;
            fixed_var[i] +=
                wr * wr * p * (1.0 - p) / double(runs_per_channel);
        }
        double mean = sum / double(runs_per_channel);
        double se = sample_stderr(sum, sumsq, runs_per_channel);
        var_rate += member.weight * mean;
        var_var += member.weight * member.weight * se * se;
    }

    for (std::size_t i = 0; i < m; ++i) {
        out.fixed_expected[i].stderr_ = std::sqrt(fixed_var[i]);
        out.fixed_expected[i].trials = used;
    }
    out.variable_expected = {var_rate, std::sqrt(var_var), used};
    return out;
}

DominanceReport per_sample_dominance(const ChannelParams& honest,
                                     const std::vector<double>& radii,
                                     const ProtocolParams& params,
                                     const SecurityBudget& budget,
                                     std::uint64_t samples, std::uint64_t seed,
                                     const OptOptions& ladder_opts,
                                     const OptOptions& sample_opts) {
    if (samples == 0)
        throw config_error("need at least one sample");
    auto setup = Bb84Setup::make(params.p_z);
    auto ch = bb84_key_channel(setup);
    FrequencyVector center = honest_statistics(honest, params.p_z);
    DecisionLadder ladder =
        build_decision_ladder(center, radii, params, budget, ladder_opts);
    // Same budget and same constant error-correction allowance on both
    // paths; the two decisions then differ only in the optimization set.
    std::int64_t leak = ladder.rungs.front().leak;
    double mu = clamp_radius(mu_radius(params.m_test, 16, budget.eps_at));

    DominanceReport rep;
    rep.samples = samples;
    for (std::uint64_t s = 0; s < samples; ++s) {
        CounterRng rng = CounterRng::child(seed, s);
        FrequencyVector fobs =
            sample_frequencies(center, std::uint64_t(params.m_test), rng);
        auto idx = accept_index(fobs, ladder.acceptance);
        if (!idx)
            continue;
        ++rep.accepted;
        const LadderRung& rung = ladder.rungs[*idx];

        double cert;
        try {
            FeasibleSpec spec;
            spec.center = fobs;
            spec.radius = mu;
            spec.sigma_bar_a = setup.sigma_bar_a;
            cert = minimize_entropy(setup, ch, spec, sample_opts).certified_lower;
        } catch (const infeasible_error&) {
            // empty per-statistic set: any bound holds, use the rung's
            cert = rung.entropy_lb;
        }
        if (cert < rung.entropy_lb) {
            // acceptance at rung idx puts the mu-ball inside the rung's
            // feasible set, so the rung certificate is valid here too
            cert = rung.entropy_lb;
            ++rep.clamped;
        }
        std::int64_t l_var = key_length_fixed(cert, leak, params, budget).l;
        std::int64_t margin = l_var - rung.l;
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < 0)
            ++rep.violations;
    }
    return rep;
}

} // namespace vlqkd
