#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>

#include "vlqkd/bb84.hpp"
#include "vlqkd/engine.hpp"
#include "vlqkd/errors.hpp"
#include "vlqkd/finite_size.hpp"

using namespace vlqkd;

namespace {

ProtocolParams desk_params() {
    ProtocolParams pp;
    pp.n_total = 1000000;
    pp.m_test = 50000;
    return pp;
}

SecurityBudget fixed_budget() { return {5e-13, 5e-13, 5e-13}; }
SecurityBudget variable_budget() { return {2.5e-13, 2.5e-13, 5e-13}; }

// enough optimizer effort for meaningful certificates, cheap enough for tests
OptOptions quick_opts() {
    OptOptions o;
    o.tol_bits = 1e-4;
    o.max_iters = 6;
    o.ipm_gap = 1e-7;
    return o;
}

FrequencyVector stats_for(const ChannelParams& ch) {
    auto setup = Bb84Setup::make(0.5);
    return born_distribution(setup, honest_state(ch));
}

// shift mass delta from cell `from` to cell `to`: L1 distance 2*delta
FrequencyVector shifted(const FrequencyVector& f, int from, int to,
                        double delta) {
    FrequencyVector g = f;
    g[from] -= delta;
    g[to] += delta;
    return g;
}

} // namespace

TEST_CASE("acceptance ladder validation") {
    auto center = stats_for({0.02, 2.0});
    AcceptanceLadder ok{center, {0.01, 0.02, 0.04}};
    ok.validate();
    AcceptanceLadder ties{center, {0.01, 0.01}};
    ties.validate(); // non-decreasing allows ties

    CHECK_THROWS_AS((AcceptanceLadder{center, {}}).validate(), config_error);
    CHECK_THROWS_AS((AcceptanceLadder{center, {0.02, 0.01}}).validate(),
                    config_error);
    CHECK_THROWS_AS((AcceptanceLadder{center, {-0.01, 0.02}}).validate(),
                    config_error);
    CHECK_THROWS_AS((AcceptanceLadder{center, {0.01, std::nan("")}}).validate(),
                    config_error);
}

TEST_CASE("accept_index picks the smallest covering rung") {
    auto center = stats_for({0.02, 2.0});
    AcceptanceLadder ladder{center, {0.01, 0.02, 0.04}};
    ladder.validate();

    CHECK(accept_index(center, ladder) == std::size_t{0});
    // distance (t2+t3)/2 = 0.03 lands strictly between rungs 2 and 3
    CHECK(accept_index(shifted(center, 0, 1, 0.015), ladder) == std::size_t{2});
    CHECK(accept_index(shifted(center, 0, 1, 0.0075), ladder) == std::size_t{1});
    CHECK_FALSE(accept_index(shifted(center, 0, 1, 0.025), ladder).has_value());

    // boundary counts as acceptance: radius set to the exact distance
    auto fobs = shifted(center, 0, 1, 0.005);
    double d = l1_distance(fobs, center);
    AcceptanceLadder exact{center, {d, 0.05}};
    exact.validate();
    CHECK(accept_index(fobs, exact) == std::size_t{0});
}

TEST_CASE("accept_index realizes the nested partition") {
    auto center = stats_for({0.03, 4.0});
    CounterRng rng(314);
    for (int rep = 0; rep < 100; ++rep) {
        double t0 = 0.002 + 0.01 * rng.next_double();
        AcceptanceLadder ladder{center, {t0, t0 + 0.005, t0 + 0.011}};
        ladder.validate();
        FrequencyVector fobs = sample_frequencies(center, 2000, rng);
        double d = l1_distance(fobs, center);
        auto idx = accept_index(fobs, ladder);
        if (idx) {
            CHECK(d <= ladder.radii[*idx]);
            for (std::size_t i = 0; i < *idx; ++i)
                CHECK(d > ladder.radii[i]);
        } else {
            CHECK(d > ladder.radii.back());
        }
    }
}

TEST_CASE("decision ladder: monotone certificates and lengths") {
    auto pp = desk_params();
    auto center = stats_for({0.02, 2.0});
    auto ladder = build_decision_ladder(center, {0.0, 0.005, 0.01}, pp,
                                        variable_budget(), quick_opts());
    ladder.validate();
    REQUIRE(ladder.rungs.size() == 3);

    CHECK(ladder.rungs[0].leak == ec_leak_bits(center, pp));
    for (const auto& rung : ladder.rungs) {
        CHECK(rung.leak == ladder.rungs[0].leak); // constant allowance
        CHECK(rung.rate == double(rung.l) / 1e6);
    }
    CHECK(ladder.rungs[0].entropy_lb >= ladder.rungs[1].entropy_lb);
    CHECK(ladder.rungs[1].entropy_lb >= ladder.rungs[2].entropy_lb);
    CHECK(ladder.rungs[0].l >= ladder.rungs[1].l);
    CHECK(ladder.rungs[1].l >= ladder.rungs[2].l);
    // desk-scale parameters keep a real key at these radii
    CHECK(ladder.rungs[2].l > 0);
}

TEST_CASE("decision ladder: radii beyond 2 share the whole-simplex bound") {
    auto pp = desk_params();
    auto center = stats_for({0.02, 2.0});
    auto ladder = build_decision_ladder(center, {2.0, 2.5}, pp, fixed_budget(),
                                        quick_opts());
    CHECK(ladder.rungs[0].entropy_lb == ladder.rungs[1].entropy_lb);
    CHECK(ladder.rungs[0].l == ladder.rungs[1].l);
    CHECK(ladder.rungs[0].l == 0); // unconstrained minimum carries no key
}

TEST_CASE("known-channel rates: single rung ties the two estimators") {
    auto pp = desk_params();
    auto budget = variable_budget();
    auto out = known_channel_rates({0.02, 2.0}, {0.02}, pp, budget, budget, 400,
                                   777, quick_opts());
    REQUIRE(out.fixed_expected.size() == 1);
    // same budget both sides: identical ladders, shared per-trial statistics
    CHECK(out.fixed.rungs[0].l == out.variable.rungs[0].l);
    CHECK(out.variable_expected.rate ==
          doctest::Approx(out.fixed_expected[0].rate).epsilon(1e-12));
    // Bernoulli sample stderr differs from the binomial one by T/(T-1) only
    if (out.fixed_expected[0].stderr_ > 0)
        CHECK(out.variable_expected.stderr_ ==
              doctest::Approx(out.fixed_expected[0].stderr_).epsilon(0.01));
    CHECK(out.variable_expected.trials == 400);

    CHECK_THROWS_AS(known_channel_rates({0.02, 2.0}, {0.02}, pp, budget, budget,
                                        0, 1, quick_opts()),
                    config_error);
}

TEST_CASE("known-channel rates: catch-all rung accepts everything") {
    auto pp = desk_params();
    auto out = known_channel_rates({0.02, 2.0}, {0.01, 2.0}, pp, fixed_budget(),
                                   variable_budget(), 300, 901, quick_opts());
    REQUIRE(out.fixed_expected.size() == 2);
    // the radius-2 rung accepts every sample and carries zero key
    CHECK(out.fixed.rungs[1].l == 0);
    CHECK(out.fixed_expected[1].rate == 0.0);
    CHECK(out.fixed_expected[1].stderr_ == 0.0);
    // inner rung: expected rate = acceptance fraction x rate-on-acceptance
    double r0 = out.fixed.rungs[0].rate;
    CHECK(r0 > 0);
    double phat = out.fixed_expected[0].rate / r0;
    CHECK(phat >= 0.0);
    CHECK(phat <= 1.0);
    // partition: every trial lands on rung 0 or the zero-rate rung 1
    CHECK(out.variable_expected.rate ==
          doctest::Approx(phat * out.variable.rungs[0].rate).epsilon(1e-10));
}

TEST_CASE("known-channel rates: hopeless channel carries no key anywhere") {
    auto pp = desk_params();
    auto out = known_channel_rates({0.9, 25.0}, {2.0}, pp, fixed_budget(),
                                   variable_budget(), 50, 33, quick_opts());
    CHECK(out.fixed.rungs[0].l == 0);
    CHECK(out.variable.rungs[0].l == 0);
    CHECK(out.variable_expected.rate == 0.0);
    CHECK(out.variable_expected.stderr_ == 0.0);
}

TEST_CASE("channel ensemble validation and default grid") {
    auto grid = ChannelEnsemble::bb84_grid();
    grid.validate();
    CHECK(grid.members.size() == 20);
    double total = 0;
    for (const auto& m : grid.members)
        total += m.weight;
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(grid.best_member().channel.depol == 0.02);
    CHECK(grid.best_member().channel.misalign_deg == 2.0);

    ChannelEnsemble bad;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad.members = {{{0.02, 2.0}, 0.6}, {{0.03, 2.0}, 0.5}};
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad.members = {{{0.02, 2.0}, -0.5}, {{0.03, 2.0}, 1.5}};
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad.members = {{{1.5, 2.0}, 1.0}};
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("ensemble rates: zero-weight member changes nothing") {
    auto pp = desk_params();
    ChannelEnsemble solo;
    solo.members = {{{0.02, 2.0}, 1.0}};
    ChannelEnsemble padded;
    padded.members = {{{0.02, 2.0}, 1.0}, {{0.5, 45.0}, 0.0}};

    auto a = ensemble_rates(solo, {0.02}, pp, fixed_budget(), variable_budget(),
                            30, 5555, quick_opts(), quick_opts());
    auto b = ensemble_rates(padded, {0.02}, pp, fixed_budget(),
                            variable_budget(), 30, 5555, quick_opts(),
                            quick_opts());
    CHECK(a.variable_expected.rate == b.variable_expected.rate);
    CHECK(a.variable_expected.stderr_ == b.variable_expected.stderr_);
    CHECK(a.fixed_expected[0].rate == b.fixed_expected[0].rate);
    CHECK(a.variable_expected.trials == 30);

    CHECK_THROWS_AS(ensemble_rates(solo, {0.02}, pp, fixed_budget(),
                                   variable_budget(), 0, 1, quick_opts(),
                                   quick_opts()),
                    config_error);
}

TEST_CASE("ensemble rates: singleton tracks the known-channel pipeline") {
    auto pp = desk_params();
    ChannelEnsemble solo;
    solo.members = {{{0.02, 2.0}, 1.0}};

    auto ens = ensemble_rates(solo, {0.02}, pp, fixed_budget(),
                              variable_budget(), 120, 424242, quick_opts(),
                              quick_opts());
    auto fig1 = known_channel_rates({0.02, 2.0}, {0.02}, pp, fixed_budget(),
                                    variable_budget(), 400, 99, quick_opts());

    // identical fixed-length construction, independent sampling noise
    CHECK(ens.fixed.rungs[0].l == fig1.fixed.rungs[0].l);
    double se = 5.0 * (ens.fixed_expected[0].stderr_ +
                       fig1.fixed_expected[0].stderr_);
    CHECK(std::abs(ens.fixed_expected[0].rate - fig1.fixed_expected[0].rate) <=
          se);

    // per-statistic decisions concentrate around the decision at the center
    auto setup = Bb84Setup::make(pp.p_z);
    auto ch = bb84_key_channel(setup);
    auto at_center = variable_length_decision(
        setup, ch, stats_for({0.02, 2.0}), pp, variable_budget(), quick_opts());
    CHECK(at_center.l > 0);
    double center_rate = double(at_center.l) / double(pp.n_total);
    CHECK(ens.variable_expected.rate ==
          doctest::Approx(center_rate).epsilon(0.10));
    // and beat the rung decision, whose feasible set is strictly larger
    CHECK(ens.variable_expected.rate >
          fig1.variable.rungs[0].rate - 5.0 * ens.variable_expected.stderr_);
}

TEST_CASE("per-sample dominance holds with equal budgets and allowance") {
    auto pp = desk_params();
    auto rep = per_sample_dominance({0.02, 2.0}, {0.01, 0.02, 0.03}, pp,
                                    variable_budget(), 40, 2718, quick_opts(),
                                    quick_opts());
    CHECK(rep.samples == 40);
    CHECK(rep.accepted > 0);
    CHECK(rep.violations == 0);
    CHECK(rep.min_margin >= 0);
    CHECK(rep.clamped <= rep.accepted);

    CHECK_THROWS_AS(per_sample_dominance({0.02, 2.0}, {0.01}, pp,
                                         variable_budget(), 0, 1, quick_opts(),
                                         quick_opts()),
                    config_error);
}
