#include "vlqkd/finite_size.hpp"

#include <algorithm>
#include <cmath>

#include "vlqkd/errors.hpp"

namespace vlqkd {

void SecurityBudget::validate() const {
    const auto ok = [](double e) { return e > 0.0 && e < 1.0; };
    if (!ok(eps_at) || !ok(eps_pa) || !ok(eps_ev))
        throw config_error("security budget: each epsilon must lie in (0,1)");
}

void ProtocolParams::validate() const {
    if (n_total < 2) throw config_error("protocol: n_total must be at least 2");
    if (m_test < 1 || m_test >= n_total)
        throw config_error("protocol: m_test must satisfy 1 <= m < n_total");
    if (!(p_z > 0.0 && p_z < 1.0)) throw config_error("protocol: p_z must lie in (0,1)");
    if (!(f_ec >= 1.0)) throw config_error("protocol: f_ec must be >= 1");
    if (d_z < 2) throw config_error("protocol: d_z must be >= 2");
}

double RenyiParams::admissible_upper(int d_z) {
    return 1.0 + 1.0 / std::log2(2.0 * d_z + 1.0);
}

RenyiParams RenyiParams::make(std::int64_t n, int d_z, double eps_pa) {
    if (n < 1) throw config_error("renyi: n must be positive");
    if (d_z < 2) throw config_error("renyi: d_z must be >= 2");
    if (!(eps_pa > 0.0 && eps_pa < 1.0))
        throw config_error("renyi: eps_pa must lie in (0,1)");
    RenyiParams rp;
    rp.d_z = d_z;
    rp.n = n;
    rp.kappa = std::sqrt(std::log2(1.0 / eps_pa)) / std::log2(d_z + 1.0);
    rp.alpha = 1.0 + rp.kappa / std::sqrt(static_cast<double>(n));
    if (!(rp.alpha > 1.0 && rp.alpha < admissible_upper(d_z)))
        throw config_error("renyi: alpha outside its admissible interval (n too small "
                           "for the requested eps_pa)");
    return rp;
}

double mu_radius(std::int64_t m, int sigma_size, double eps_at) {
    if (m < 1) throw config_error("mu: m must be >= 1");
    if (sigma_size < 1) throw config_error("mu: sigma_size must be >= 1");
    if (!(eps_at > 0.0 && eps_at <= 1.0))
        throw config_error("mu: eps_at must lie in (0,1]");
    const double md = static_cast<double>(m);
    return std::sqrt(2.0) *
           std::sqrt((std::log(1.0 / eps_at) + sigma_size * std::log(md + 1.0)) / md);
}

double renyi_correction(std::int64_t n, const RenyiParams& rp, CorrectionBase base) {
    const double b =
        base == CorrectionBase::TwoDzPlusOne ? 2.0 * rp.d_z + 1.0 : rp.d_z + 1.0;
    const double lg = std::log2(b);
    return static_cast<double>(n) * (rp.alpha - 1.0) * lg * lg;
}

double theta_overhead(const RenyiParams& rp, double eps_pa, double eps_ev) {
    if (!(eps_pa > 0.0 && eps_pa < 1.0) || !(eps_ev > 0.0 && eps_ev < 1.0))
        throw config_error("theta: epsilons must lie in (0,1)");
    const double pa_term = rp.alpha / (rp.alpha - 1.0) *
                           (std::log2(1.0 / (4.0 * eps_pa)) + 2.0 / rp.alpha);
    const double ev_term = std::ceil(std::log2(1.0 / eps_ev));
    return pa_term + ev_term;
}

std::int64_t ec_leak_bits(const FrequencyVector& freq, const ProtocolParams& pp) {
    const double h = ec_conditional_entropy(freq);
    // ceiling: disclosing a fraction of a bit still costs a whole one
    return static_cast<std::int64_t>(
        std::ceil(pp.f_ec * static_cast<double>(pp.n_key()) * h));
}

namespace {

std::int64_t floor_clamped(double raw, std::int64_t n) {
    if (!(raw > 0.0)) return 0;
    const double fl = std::floor(raw);
    const double nd = static_cast<double>(n);
    return static_cast<std::int64_t>(std::min(fl, nd));
}

} // namespace

LengthDecision key_length_fixed(double entropy_lb, std::int64_t leak,
                                const ProtocolParams& pp, const SecurityBudget& budget) {
    pp.validate();
    budget.validate();
    if (leak < 0) throw config_error("key_length_fixed: leak must be nonnegative");
    const std::int64_t n = pp.n_key();
    const RenyiParams rp = RenyiParams::make(n, pp.d_z, budget.eps_pa);
    const double raw = static_cast<double>(n) * entropy_lb - static_cast<double>(leak) -
                       renyi_correction(n, rp, pp.base) -
                       theta_overhead(rp, budget.eps_pa, budget.eps_ev);
    return LengthDecision{floor_clamped(raw, n), leak};
}

double b_stat(const Bb84Setup& setup, const KrausChannel& ch, const FrequencyVector& fobs,
              const ProtocolParams& pp, const SecurityBudget& budget,
              const OptOptions& opts, double radius_override) {
    pp.validate();
    budget.validate();
    const std::int64_t n = pp.n_key();
    double radius = radius_override >= 0.0
                        ? radius_override
                        : mu_radius(pp.m_test, 16, budget.eps_at);
    // an L1 ball of radius 2 already contains every distribution
    radius = std::min(radius, 2.0);

    const FeasibleSpec spec{fobs, radius, setup.sigma_bar_a};
    const OptResult res = minimize_entropy(setup, ch, spec, opts);
    const RenyiParams rp = RenyiParams::make(n, pp.d_z, budget.eps_pa);
    return static_cast<double>(n) * res.certified_lower -
           renyi_correction(n, rp, pp.base);
}

LengthDecision variable_length_decision(const Bb84Setup& setup, const KrausChannel& ch,
                                        const FrequencyVector& fobs,
                                        const ProtocolParams& pp,
                                        const SecurityBudget& budget,
                                        const OptOptions& opts) {
    const std::int64_t leak = ec_leak_bits(fobs, pp);
    double b = 0.0;
    try {
        b = b_stat(setup, ch, fobs, pp, budget, opts);
    } catch (const infeasible_error&) {
        // no state reproduces fobs within mu: release nothing
        return LengthDecision{0, leak};
    }
    const RenyiParams rp = RenyiParams::make(pp.n_key(), pp.d_z, budget.eps_pa);
    const double raw =
        b - static_cast<double>(leak) - theta_overhead(rp, budget.eps_pa, budget.eps_ev);
    return LengthDecision{floor_clamped(raw, pp.n_key()), leak};
}

} // namespace vlqkd
