#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "vlqkd/errors.hpp"
#include "vlqkd/finite_size.hpp"

using namespace vlqkd;

namespace {

// Reference experiment: N = 1e6 signals, 5% sacrificed for testing.
ProtocolParams params() {
    ProtocolParams pp;
    pp.n_total = 1000000;
    pp.m_test = 50000;
    pp.p_z = 0.5;
    pp.f_ec = 1.16;
    return pp;
}

SecurityBudget fixed_budget() { return SecurityBudget{5e-13, 5e-13, 5e-13}; }
SecurityBudget variable_budget() { return SecurityBudget{2.5e-13, 2.5e-13, 5e-13}; }

const Bb84Setup& setup() {
    static const Bb84Setup s = Bb84Setup::make(0.5);
    return s;
}

const KrausChannel& channel() {
    static const KrausChannel ch = bb84_key_channel(setup());
    return ch;
}

// Frozen ten-plus-digit reference values, computed with a 50-digit scalar
// evaluation of the same formulas before this module existed.
constexpr double kMuFixed = 0.0897643450026464;       // m=5e4, 16 outcomes, 5e-13
constexpr double kMuVariable = 0.08991864946148;      // m=5e4, 16 outcomes, 2.5e-13
constexpr double kMuCoarse = 0.244694111944913;       // m=1e3, 4 outcomes, 0.1
constexpr double kKappaVar = 4.0822245827695;         // eps_pa=2.5e-13, d_z=2
constexpr double kAlphaVar = 1.00418827405027;        // n=95e4
constexpr double kAlphaFix = 1.00413794828263;        // eps_pa=5e-13
constexpr double kAlphaUpper = 1.43067655807339;      // 1 + 1/log2(5)
constexpr double kRcorrVar = 21451.4290455477;        // base 2d_z+1
constexpr double kRcorrFix = 21193.6714058167;
constexpr double kRcorrVarSmall = 9995.31946481297;   // base d_z+1
constexpr double kThetaVar = 10076.1826019516;        // eps_pa=2.5e-13, eps_ev=5e-13
constexpr double kThetaFix = 9955.08011609214;
constexpr double kEcEntropy2deg = 0.0221515222134342; // H(Z|YC) at q=.02, 2 deg
constexpr double kObj10deg = 0.219628720506549;       // objective at q=.05, 10 deg

} // namespace

TEST_CASE("SecurityBudget: accounting identities and validation") {
    const SecurityBudget f = fixed_budget();
    const SecurityBudget v = variable_budget();
    f.validate();
    v.validate();
    CHECK(f.eps_secure_fixed() == doctest::Approx(1e-12).epsilon(1e-12));
    CHECK(v.eps_secure_variable() == doctest::Approx(1e-12).epsilon(1e-12));

    // the variable-length union bound at most doubles the fixed-length budget
    const double grid[] = {1e-14, 3e-10, 1e-6, 0.2};
    for (double a : grid)
        for (double p : grid)
            for (double e : grid) {
                const SecurityBudget b{a, p, e};
                CHECK(b.eps_secure_variable() <= 2.0 * b.eps_secure_fixed() + 1e-30);
            }

    CHECK_THROWS_AS((SecurityBudget{0.0, 0.5, 0.5}).validate(), config_error);
    CHECK_THROWS_AS((SecurityBudget{0.5, 1.0, 0.5}).validate(), config_error);
    CHECK_THROWS_AS((SecurityBudget{0.5, 0.5, -0.1}).validate(), config_error);
}

TEST_CASE("ProtocolParams: validation and key-round count") {
    ProtocolParams pp = params();
    pp.validate();
    CHECK(pp.n_key() == 950000);

    ProtocolParams bad = params();
    bad.m_test = bad.n_total;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = params();
    bad.p_z = 1.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = params();
    bad.f_ec = 0.99;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = params();
    bad.d_z = 1;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("mu_radius: frozen values, limiting identity, monotonicity") {
    CHECK(mu_radius(50000, 16, 5e-13) == doctest::Approx(kMuFixed).epsilon(1e-10));
    CHECK(mu_radius(50000, 16, 2.5e-13) == doctest::Approx(kMuVariable).epsilon(1e-10));
    CHECK(mu_radius(1000, 4, 0.1) == doctest::Approx(kMuCoarse).epsilon(1e-10));

    // eps_at = 1 removes the ln(1/eps) term entirely
    for (std::int64_t m : {10, 1000, 100000}) {
        const double expect =
            std::sqrt(2.0) * std::sqrt(16.0 * std::log(m + 1.0) / static_cast<double>(m));
        CHECK(mu_radius(m, 16, 1.0) == doctest::Approx(expect).epsilon(1e-14));
    }

    for (std::int64_t m = 4; m <= (1 << 20); m *= 2)
        CHECK(mu_radius(2 * m, 16, 5e-13) < mu_radius(m, 16, 5e-13));

    CHECK_THROWS_AS(mu_radius(0, 16, 0.5), config_error);
    CHECK_THROWS_AS(mu_radius(100, 0, 0.5), config_error);
    CHECK_THROWS_AS(mu_radius(100, 16, 0.0), config_error);
    CHECK_THROWS_AS(mu_radius(100, 16, 1.5), config_error);
}

TEST_CASE("RenyiParams: frozen alpha/kappa and admissibility gate") {
    const RenyiParams var = RenyiParams::make(950000, 2, 2.5e-13);
    CHECK(var.kappa == doctest::Approx(kKappaVar).epsilon(1e-10));
    CHECK(var.alpha == doctest::Approx(kAlphaVar).epsilon(1e-10));

    const RenyiParams fix = RenyiParams::make(950000, 2, 5e-13);
    CHECK(fix.alpha == doctest::Approx(kAlphaFix).epsilon(1e-10));

    CHECK(RenyiParams::admissible_upper(2) == doctest::Approx(kAlphaUpper).epsilon(1e-10));

    // alpha = 1 + kappa/sqrt(n) crosses the admissible ceiling near n ~ 90
    CHECK_THROWS_AS(RenyiParams::make(89, 2, 2.5e-13), config_error);
    CHECK_NOTHROW(RenyiParams::make(95, 2, 2.5e-13));

    CHECK_THROWS_AS(RenyiParams::make(950000, 2, 0.0), config_error);
    CHECK_THROWS_AS(RenyiParams::make(950000, 2, 1.0), config_error);
    CHECK_THROWS_AS(RenyiParams::make(950000, 1, 0.5), config_error);
}

TEST_CASE("renyi_correction: frozen values, base switch, sqrt-n scaling") {
    const RenyiParams var = RenyiParams::make(950000, 2, 2.5e-13);
    const RenyiParams fix = RenyiParams::make(950000, 2, 5e-13);
    CHECK(renyi_correction(950000, var, CorrectionBase::TwoDzPlusOne) ==
          doctest::Approx(kRcorrVar).epsilon(1e-10));
    CHECK(renyi_correction(950000, fix, CorrectionBase::TwoDzPlusOne) ==
          doctest::Approx(kRcorrFix).epsilon(1e-10));
    CHECK(renyi_correction(950000, var, CorrectionBase::DzPlusOne) ==
          doctest::Approx(kRcorrVarSmall).epsilon(1e-10));

    // n (alpha-1) = kappa sqrt(n): doubling n scales the correction by sqrt(2)
    const RenyiParams a = RenyiParams::make(400000, 2, 2.5e-13);
    const RenyiParams b = RenyiParams::make(800000, 2, 2.5e-13);
    CHECK(renyi_correction(800000, b, CorrectionBase::TwoDzPlusOne) ==
          doctest::Approx(std::sqrt(2.0) *
                          renyi_correction(400000, a, CorrectionBase::TwoDzPlusOne))
              .epsilon(1e-12));
}

TEST_CASE("theta_overhead: frozen values and separable EV term") {
    const RenyiParams var = RenyiParams::make(950000, 2, 2.5e-13);
    const RenyiParams fix = RenyiParams::make(950000, 2, 5e-13);
    CHECK(theta_overhead(var, 2.5e-13, 5e-13) ==
          doctest::Approx(kThetaVar).epsilon(1e-10));
    CHECK(theta_overhead(fix, 5e-13, 5e-13) ==
          doctest::Approx(kThetaFix).epsilon(1e-10));

    // the frozen value carries ceil(log2(1/5e-13)) = 41; eps_ev = 0.5 carries 1
    CHECK(theta_overhead(var, 2.5e-13, 0.5) ==
          doctest::Approx(kThetaVar - 41.0 + 1.0).epsilon(1e-10));

    double prev = theta_overhead(var, 1e-15, 5e-13);
    for (double pa : {1e-12, 1e-9, 1e-6, 1e-3}) {
        const double cur = theta_overhead(var, pa, 5e-13);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("key_length_fixed: perfect-statistics anchor and clamps") {
    const ProtocolParams pp = params();
    const SecurityBudget bud = fixed_budget();

    // noiseless channel: entropy bound 0.25, no error correction
    const LengthDecision perfect = key_length_fixed(0.25, 0, pp, bud);
    CHECK(perfect.l == 206351);
    CHECK(perfect.leak == 0);

    // same number out of the frozen ingredients
    const double raw = 950000.0 * 0.25 - kRcorrFix - kThetaFix;
    CHECK(static_cast<std::int64_t>(std::floor(raw)) == 206351);
    CHECK(raw == doctest::Approx(206351.248478091207).epsilon(1e-10));

    CHECK(key_length_fixed(0.0, 0, pp, bud).l == 0);
    CHECK(key_length_fixed(0.03, 100000, pp, bud).l == 0); // raw negative
    CHECK(key_length_fixed(5.0, 0, pp, bud).l == 950000);  // capped at n

    // halving eps_pa costs key bits, never gains
    const LengthDecision tighter = key_length_fixed(0.25, 0, pp, variable_budget());
    CHECK(tighter.l <= perfect.l);

    CHECK_THROWS_AS(key_length_fixed(0.25, -1, pp, bud), config_error);
}

TEST_CASE("b_stat: point anchor, radius monotonicity, honest-state ceiling") {
    const ProtocolParams pp = params();
    const SecurityBudget bud = variable_budget();

    // radius ~ 0 around the ideal statistics: certified value can only sit
    // below n/4 - correction, and lands within a milli-bit per signal of it
    const Mat bell = bell_phi_plus() * bell_phi_plus().adjoint();
    const FrequencyVector fstar = born_distribution(setup(), bell);
    const double b0 = b_stat(setup(), channel(), fstar, pp, bud, {}, 0.0);
    CHECK(b0 <= 950000.0 * 0.25 - kRcorrVar + 1e-6);
    CHECK(b0 >= 950000.0 * 0.25 - kRcorrVar - 1200.0);

    // growing the ball never raises the certified estimate (nested sets);
    // allow solver tolerance of ~2e-5 bits per signal on each comparison
    const FrequencyVector fobs = born_distribution(setup(), honest_state({0.02, 2.0}));
    const double slack = 950000.0 * 2e-5;
    const double b_small = b_stat(setup(), channel(), fobs, pp, bud, {}, 0.02);
    const double b_mid = b_stat(setup(), channel(), fobs, pp, bud, {}, 0.09);
    const double b_wide = b_stat(setup(), channel(), fobs, pp, bud, {}, 0.3);
    CHECK(b_mid <= b_small + slack);
    CHECK(b_wide <= b_mid + slack);

    // deterministic: same inputs, same certified value
    CHECK(b_stat(setup(), channel(), fobs, pp, bud, {}, 0.09) == b_mid);

    // sampled statistics from a noisy channel: whenever the honest state is
    // inside the ball, its objective value caps the estimate
    const Mat rho_hon = honest_state({0.05, 10.0});
    const FrequencyVector fbar = born_distribution(setup(), rho_hon);
    CounterRng rng(4242);
    for (int rep = 0; rep < 3; ++rep) {
        const FrequencyVector fs = sample_frequencies(fbar, 50000, rng);
        REQUIRE(l1_distance(fs, fbar) <= kMuVariable); // holds w.h.p.; seed fixed
        const double b = b_stat(setup(), channel(), fs, pp, bud);
        CHECK(b <= 950000.0 * kObj10deg - kRcorrVar + 1e-6);
    }
}

TEST_CASE("variable_length_decision: leak accounting, composition, zero floor") {
    const ProtocolParams pp = params();
    const SecurityBudget bud = variable_budget();

    const FrequencyVector fobs = born_distribution(setup(), honest_state({0.02, 2.0}));
    const std::int64_t leak_expect = static_cast<std::int64_t>(
        std::ceil(1.16 * 950000.0 * kEcEntropy2deg));
    CHECK(ec_leak_bits(fobs, pp) == leak_expect);

    const LengthDecision vd = variable_length_decision(setup(), channel(), fobs, pp, bud);
    CHECK(vd.leak == leak_expect);
    CHECK(vd.l > 0);
    CHECK(vd.l <= pp.n_key());

    // the decision is exactly floor(b_stat - leak - theta), clamped at zero
    const double b = b_stat(setup(), channel(), fobs, pp, bud);
    const double raw = b - static_cast<double>(leak_expect) - kThetaVar;
    CHECK(vd.l == static_cast<std::int64_t>(std::floor(raw)));

    // a channel too noisy to certify anything still reports its leak honestly
    const FrequencyVector noisy =
        born_distribution(setup(), honest_state({0.9, 25.0}));
    const LengthDecision zero = variable_length_decision(setup(), channel(), noisy, pp, bud);
    CHECK(zero.l == 0);
    CHECK(zero.leak == ec_leak_bits(noisy, pp));

    // statistics impossible for any state with the pinned marginal: l = 0
    FrequencyVector point{};
    point[0] = 1.0;
    const LengthDecision impossible =
        variable_length_decision(setup(), channel(), point, pp, bud);
    CHECK(impossible.l == 0);
    CHECK(impossible.leak == 0); // error-free point statistics cost nothing
}
