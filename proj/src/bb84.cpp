#include "vlqkd/bb84.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace vlqkd {

void FrequencyVector::validate() const {
    double sum = 0.0;
    for (double v : p) {
        if (v < -1e-12) throw numeric_error("FrequencyVector: negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw numeric_error("FrequencyVector: sum is not 1");
}

std::string FrequencyVector::to_csv_row() const {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", p[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

std::string FrequencyVector::to_json_array() const {
    return "[" + to_csv_row() + "]";
}

double l1_distance(const FrequencyVector& a, const FrequencyVector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i) d += std::abs(a.p[i] - b.p[i]);
    return d;
}

Bb84Setup Bb84Setup::make(double p_z) {
    if (!(p_z > 0.0 && p_z < 1.0)) throw numeric_error("Bb84Setup: p_z outside (0,1)");
    const double p_x = 1.0 - p_z;
    auto proj = [](const Vec& v) { return Mat(v * v.adjoint()); };
    std::array<Mat, 4> povm = {p_z * proj(ket0()), p_z * proj(ket1()),
                               p_x * proj(ket_plus()), p_x * proj(ket_minus())};
    Bb84Setup s{p_z, povm, povm, Mat::Identity(2, 2) * 0.5};
    return s;
}

Mat honest_state(const ChannelParams& ch) {
    if (ch.depol < 0.0 || ch.depol > 1.0)
        throw numeric_error("honest_state: depolarisation outside [0,1]");
    const double th = ch.misalign_deg * std::numbers::pi / 180.0;
    Mat rot(2, 2);
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Mat u = tensor(Mat::Identity(2, 2), rot);
    const Vec phi = bell_phi_plus();
    Mat rho = u * (phi * phi.adjoint()) * u.adjoint();
    const Mat rho_a = partial_trace(rho, {2, 2}, {1});
    rho = (1.0 - ch.depol) * rho + ch.depol * tensor(rho_a, Mat::Identity(2, 2) * 0.5);
    return symmetrize(rho);
}

FrequencyVector born_distribution(const Bb84Setup& setup, const Mat& rho) {
    FrequencyVector f;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            f[static_cast<std::size_t>(4 * a + b)] =
                std::real((tensor(setup.alice[a], setup.bob[b]) * rho).trace());
    return f;
}

std::array<std::uint64_t, 16> sample_counts(const FrequencyVector& fbar, std::uint64_t m,
                                            CounterRng& rng) {
    fbar.validate();
    std::vector<double> probs(fbar.p.begin(), fbar.p.end());
    for (double& v : probs)
        if (v < 0.0) v = 0.0;
    const std::vector<std::uint64_t> c = multinomial_counts(probs, m, rng);
    std::array<std::uint64_t, 16> out{};
    for (std::size_t i = 0; i < 16; ++i) out[i] = c[i];
    return out;
}

FrequencyVector sample_frequencies(const FrequencyVector& fbar, std::uint64_t m,
                                   CounterRng& rng) {
    if (m == 0) throw numeric_error("sample_frequencies: m must be positive");
    const auto counts = sample_counts(fbar, m, rng);
    FrequencyVector f;
    for (std::size_t i = 0; i < 16; ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(m);
    return f;
}

double ec_conditional_entropy(const FrequencyVector& freq) {
    // Only double-Z rounds carry a non-deterministic key bit. Conditioning on
    // Bob's Z outcome b, the per-signal contribution is w_b * h2(q_{0b}/w_b).
    double h = 0.0;
    for (int b = 0; b < 2; ++b) {
        const double q0 = freq[outcome_index(0, 0, 0, b)];
        const double q1 = freq[outcome_index(0, 1, 0, b)];
        const double w = q0 + q1;
        if (w > 0.0) h += w * binary_entropy(q0 / w);
    }
    return h;
}

} // namespace vlqkd
