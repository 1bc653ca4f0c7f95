#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "support/test_util.hpp"
#include "vlqkd/bb84.hpp"

using namespace vlqkd;

namespace {

// Independent reconstruction of the honest state: apply the two channel maps
// elementwise to hard-coded matrices, no library tensor/partial_trace calls.
Mat honest_state_reference(double q, double theta_deg) {
    const double th = theta_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    // |psi> = (I (x) R) |phi+> = (|0>(c|0>+s|1>) + |1>(-s|0>+c|1>))/sqrt(2)
    Eigen::Vector4cd psi;
    psi << c / std::sqrt(2.0), s / std::sqrt(2.0), -s / std::sqrt(2.0), c / std::sqrt(2.0);
    Mat pure = psi * psi.adjoint();
    // Alice marginal of a rotated bell state is I/2; depolarised replacement:
    Mat mixed = Mat::Zero(4, 4);
    mixed(0, 0) = mixed(1, 1) = mixed(2, 2) = mixed(3, 3) = 0.25;
    return (1.0 - q) * pure + q * mixed;
}

} // namespace

TEST_CASE("Bb84Setup: POVM completeness and marginal pin") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    Mat sum = Mat::Zero(2, 2);
    for (const auto& e : s.alice) sum += e;
    CHECK((sum - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((s.sigma_bar_a - Mat::Identity(2, 2) * 0.5).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(Bb84Setup::make(0.0), numeric_error);
    CHECK_THROWS_AS(Bb84Setup::make(1.0), numeric_error);

    // biased basis choice keeps completeness
    const Bb84Setup sb = Bb84Setup::make(0.9);
    Mat sumb = Mat::Zero(2, 2);
    for (const auto& e : sb.bob) sumb += e;
    CHECK((sumb - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("honest_state: limits and validation") {
    const Vec phi = bell_phi_plus();
    const Mat bell = phi * phi.adjoint();
    CHECK((honest_state({0.0, 0.0}) - bell).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((honest_state({1.0, 37.0}) - Mat::Identity(4, 4) * 0.25).cwiseAbs().maxCoeff() <
          1e-15);
    CHECK_THROWS_AS(honest_state({-0.1, 0.0}), numeric_error);
    CHECK_THROWS_AS(honest_state({1.1, 0.0}), numeric_error);
}

TEST_CASE("honest_state: purity 0.9703 at q=0.02 and elementwise cross-check") {
    const Mat rho = honest_state({0.02, 2.0});
    CHECK(std::real((rho * rho).trace()) == doctest::Approx(0.9703).epsilon(1e-12));
    // purity is rotation independent
    const Mat rho2 = honest_state({0.02, 57.0});
    CHECK(std::real((rho2 * rho2).trace()) == doctest::Approx(0.9703).epsilon(1e-12));

    const Mat ref = honest_state_reference(0.02, 2.0);
    CHECK((rho - ref).cwiseAbs().maxCoeff() < 1e-14);

    // Alice marginal stays maximally mixed for any channel
    CounterRng rng(31);
    for (int i = 0; i < 10; ++i) {
        const ChannelParams ch{rng.next_double(), 90.0 * rng.next_double()};
        const Mat m = partial_trace(honest_state(ch), {2, 2}, {1});
        CHECK((m - Mat::Identity(2, 2) * 0.5).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("born_distribution: bell state with p_z = 1/2") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    const Vec phi = bell_phi_plus();
    const FrequencyVector f = born_distribution(s, phi * phi.adjoint());
    // same basis, agreeing outcomes: 0.125 each
    CHECK(f[outcome_index(0, 0, 0, 0)] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(f[outcome_index(0, 1, 0, 1)] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(f[outcome_index(1, 0, 1, 0)] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(f[outcome_index(1, 1, 1, 1)] == doctest::Approx(0.125).epsilon(1e-12));
    // same basis, disagreeing outcomes: 0
    CHECK(f[outcome_index(0, 0, 0, 1)] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f[outcome_index(1, 1, 1, 0)] == doctest::Approx(0.0).epsilon(1e-12));
    // cross basis: 0.0625
    CHECK(f[outcome_index(0, 0, 1, 0)] == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(f[outcome_index(1, 1, 0, 0)] == doctest::Approx(0.0625).epsilon(1e-12));
    f.validate();
}

TEST_CASE("born_distribution: maximally mixed input is flat at p_z = 1/2") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    const FrequencyVector f = born_distribution(s, Mat::Identity(4, 4) * 0.25);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(f[i] == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("born_distribution: frozen cells for q=0.02") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    // theta = 0: double-Z error cell is q/4 * p_z^2 * 2... pinned directly:
    const FrequencyVector f0 = born_distribution(s, honest_state({0.02, 0.0}));
    CHECK(f0[outcome_index(0, 0, 0, 1)] == doctest::Approx(0.00125).epsilon(1e-12));
    const double w = f0[0] + f0[1] + f0[4] + f0[5];
    CHECK((f0[1] + f0[4]) / w == doctest::Approx(0.01).epsilon(1e-12)); // QBER_Z = q/2

    // theta = 2 degrees, frozen from an independent evaluation
    const FrequencyVector f = born_distribution(s, honest_state({0.02, 2.0}));
    CHECK(f[outcome_index(0, 0, 0, 0)] == doctest::Approx(0.123600798078414).epsilon(1e-12));
    CHECK(f[outcome_index(0, 0, 0, 1)] == doctest::Approx(0.00139920192158576).epsilon(1e-12));
    CHECK(f[outcome_index(0, 0, 1, 0)] == doctest::Approx(0.0667725840168276).epsilon(1e-12));
    CHECK(f[outcome_index(1, 1, 1, 1)] == doctest::Approx(0.123600798078414).epsilon(1e-12));
    double sum = 0.0;
    for (std::size_t i = 0; i < 16; ++i) sum += f[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("born_distribution: alice marginal outcome law is channel independent") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    CounterRng rng(37);
    for (int i = 0; i < 8; ++i) {
        const FrequencyVector f =
            born_distribution(s, honest_state({rng.next_double(), 180.0 * rng.next_double()}));
        for (int a = 0; a < 4; ++a) {
            double pa = 0.0;
            for (int b = 0; b < 4; ++b) pa += f[static_cast<std::size_t>(4 * a + b)];
            CHECK(pa == doctest::Approx(0.25).epsilon(1e-10)); // p_z/2 = p_x/2 = 1/4
        }
    }
}

TEST_CASE("sample_counts: exact budget, determinism, degenerate pmf") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    const FrequencyVector fbar = born_distribution(s, honest_state({0.02, 2.0}));
    CounterRng r1 = CounterRng::child(2024, 3);
    CounterRng r2 = CounterRng::child(2024, 3);
    const auto c1 = sample_counts(fbar, 50000, r1);
    const auto c2 = sample_counts(fbar, 50000, r2);
    std::uint64_t tot = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(c1[i] == c2[i]);
        tot += c1[i];
    }
    CHECK(tot == 50000);

    FrequencyVector point{};
    point[3] = 1.0;
    CounterRng r3(9);
    const auto c3 = sample_counts(point, 777, r3);
    CHECK(c3[3] == 777);
}

TEST_CASE("sample_frequencies: fluctuation scale shrinks like 1/sqrt(m)") {
    const Bb84Setup s = Bb84Setup::make(0.5);
    const FrequencyVector fbar = born_distribution(s, honest_state({0.02, 2.0}));
    auto mean_l1 = [&](std::uint64_t m, std::uint64_t stream) {
        double acc = 0.0;
        const int reps = 100;
        for (int r = 0; r < reps; ++r) {
            CounterRng rng = CounterRng::child(515 + stream, static_cast<std::uint64_t>(r));
            acc += l1_distance(sample_frequencies(fbar, m, rng), fbar);
        }
        return acc / reps;
    };
    const double d3 = mean_l1(1000, 0);
    const double d5 = mean_l1(100000, 1);
    CHECK(d3 / d5 > 8.0);  // ideal ratio sqrt(100) = 10
    CHECK(d3 / d5 < 12.0);
}

TEST_CASE("ec_conditional_entropy: pinned values") {
    FrequencyVector flat;
    for (auto& v : flat.p) v = 1.0 / 16.0;
    CHECK(ec_conditional_entropy(flat) == doctest::Approx(0.25).epsilon(1e-12));

    const Bb84Setup s = Bb84Setup::make(0.5);
    const FrequencyVector f0 = born_distribution(s, honest_state({0.02, 0.0}));
    CHECK(ec_conditional_entropy(f0) ==
          doctest::Approx(0.0201982839739778).epsilon(1e-12)); // 0.25 * h2(0.01)
    const FrequencyVector f2 = born_distribution(s, honest_state({0.02, 2.0}));
    CHECK(ec_conditional_entropy(f2) == doctest::Approx(0.0221515222134342).epsilon(1e-12));

    // no double-Z mass -> no key rounds -> zero
    FrequencyVector xonly{};
    xonly[outcome_index(1, 0, 1, 0)] = 0.5;
    xonly[outcome_index(1, 1, 1, 1)] = 0.5;
    CHECK(ec_conditional_entropy(xonly) == 0.0);

    // deterministic double-Z outcomes -> zero
    FrequencyVector det{};
    det[outcome_index(0, 0, 0, 0)] = 0.5;
    det[outcome_index(0, 1, 0, 1)] = 0.5;
    CHECK(ec_conditional_entropy(det) == 0.0);
}

TEST_CASE("FrequencyVector: validation and serialisation") {
    FrequencyVector f{};
    f[0] = 1.0;
    CHECK_NOTHROW(f.validate());
    f[1] = -1e-6;
    CHECK_THROWS_AS(f.validate(), numeric_error);
    FrequencyVector g{};
    g[0] = 0.5;
    CHECK_THROWS_AS(g.validate(), numeric_error);

    FrequencyVector h{};
    h[0] = 0.25;
    h[5] = 0.75;
    const std::string row = h.to_csv_row();
    CHECK(row.substr(0, 9) == "0.25,0,0,");
    CHECK(h.to_json_array().front() == '[');
    CHECK(h.to_json_array().back() == ']');
}
