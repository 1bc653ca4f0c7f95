#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "vlqkd/linalg.hpp"
#include "vlqkd/rng.hpp"

namespace vlqkd {

// Joint outcome statistics of the 4x4 two-party measurement. Index order is
// frozen: ((alice_basis*2 + alice_bit)*2 + bob_basis)*2 + bob_bit, with
// basis Z before X and bit 0 before 1.
struct FrequencyVector {
    std::array<double, 16> p{};

    double& operator[](std::size_t i) { return p[i]; }
    double operator[](std::size_t i) const { return p[i]; }

    // entries >= -1e-12, sum within 1e-9 of 1
    void validate() const;

    std::string to_csv_row() const;          // 16 comma-separated %.17g values
    std::string to_json_array() const;
};

double l1_distance(const FrequencyVector& a, const FrequencyVector& b);

constexpr std::size_t outcome_index(int alice_basis, int alice_bit, int bob_basis,
                                    int bob_bit) {
    return static_cast<std::size_t>(((alice_basis * 2 + alice_bit) * 2 + bob_basis) * 2 +
                                    bob_bit);
}

// Entanglement-based qubit BB84: each party measures Z with probability p_z
// or X with probability 1-p_z, absorbing the basis choice into a 4-outcome
// POVM per party. Alice's reduced state is pinned to I/2 by the
// source-replacement construction.
struct Bb84Setup {
    double p_z;
    std::array<Mat, 4> alice; // p_z|0><0|, p_z|1><1|, p_x|+><+|, p_x|-><-|
    std::array<Mat, 4> bob;
    Mat sigma_bar_a; // 2x2

    static Bb84Setup make(double p_z);
    double p_x() const { return 1.0 - p_z; }
};

struct ChannelParams {
    double depol;        // q in [0,1]
    double misalign_deg; // rotation angle of the transmitted qubit, degrees
};

// (1-q) * (I (x) R(theta)) |phi+><phi+| (I (x) R(theta))^dag + q * rho_A (x) I/2
Mat honest_state(const ChannelParams& ch);

// Phi(rho): the 16 joint-outcome probabilities Tr[(A_a (x) B_b) rho].
FrequencyVector born_distribution(const Bb84Setup& setup, const Mat& rho);

// m categorical draws from fbar; counts sum to m exactly.
std::array<std::uint64_t, 16> sample_counts(const FrequencyVector& fbar, std::uint64_t m,
                                            CounterRng& rng);
FrequencyVector sample_frequencies(const FrequencyVector& fbar, std::uint64_t m,
                                   CounterRng& rng);

// H(Z|Y,C) per signal in bits for the Z-basis key map: rounds where both
// parties measured Z keep Alice's bit, all other rounds map to a
// deterministic 0 and contribute nothing.
double ec_conditional_entropy(const FrequencyVector& freq);

} // namespace vlqkd
