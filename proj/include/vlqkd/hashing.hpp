#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vlqkd/rng.hpp"

namespace vlqkd {

// Packed bitstring, LSB-first within 64-bit words. Bit i of the string is
// bit (i % 64) of word (i / 64).
class BitVec {
  public:
    BitVec() = default;
    explicit BitVec(std::size_t nbits);

    static BitVec random(std::size_t nbits, CounterRng& rng);
    // "0110..." left to right = bit 0, bit 1, ...
    static BitVec from_string(std::string_view s);

    std::size_t size() const { return nbits_; }
    bool get(std::size_t i) const;
    void set(std::size_t i, bool v);

    // 64 bits starting at `bit`, zero-padded past the end.
    std::uint64_t window(std::size_t bit) const;
    // Value as integer; requires size() <= 64.
    std::uint64_t to_u64() const;

    BitVec operator^(const BitVec& o) const;
    bool operator==(const BitVec& o) const = default;
    bool all_zero() const;
    std::string to_string() const;

    const std::vector<std::uint64_t>& words() const { return words_; }

  private:
    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;

    void mask_top();
};

// Random binary Toeplitz matrix, out_len x in_len, T[i][j] = diag[i - j +
// in_len - 1]. One fresh diagonal = one family member. in_len < out_len is
// allowed (tall matrix): the per-input-length tables used by the
// variable-length hashers need members mapping short inputs to the full
// output width, and the pairwise collision bound for equal-length distinct
// inputs holds either way.
struct ToeplitzFamily {
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    BitVec diagonal; // in_len + out_len - 1 bits

    static ToeplitzFamily draw(std::size_t in_len, std::size_t out_len,
                               CounterRng& rng);
    void validate() const;
};

// Matrix-vector product over GF(2). Throws config_error on length mismatch.
BitVec toeplitz_hash(const ToeplitzFamily& fam, const BitVec& z);

// One independently drawn family member per input length 0..n_max.
std::vector<ToeplitzFamily> draw_length_table(std::size_t n_max,
                                              std::size_t out_len,
                                              CounterRng& rng);

// Hash-by-length: apply table[|z|] to z. Individually two-universal per
// length but NOT two-universal on variable-length inputs: all-zero strings
// of different lengths collide with probability 1 under any linear family.
BitVec naive_variable_hash(const std::vector<ToeplitzFamily>& table,
                           const BitVec& z);

// Repair of naive_variable_hash: per length i keep an independent pair
// (f_i, u_i) and output f_{|z|}(z) XOR u_{|z|}. The fresh masks give every
// length a uniform output, which restores the pairwise collision bound
// across lengths.
struct VirtualHasher {
    std::size_t out_len = 0;
    std::vector<ToeplitzFamily> per_length; // index = input length
    std::vector<BitVec> masks;              // u_i, out_len bits each

    static VirtualHasher draw(std::size_t n_max, std::size_t out_len,
                              CounterRng& rng);
    void validate() const;
};

BitVec virtual_variable_hash(const VirtualHasher& vh, const BitVec& z);

// --- sifting representations ---------------------------------------------

// Per-round symbol: 0, 1, or discarded (basis mismatch etc.).
using Trit = std::uint8_t;
inline constexpr Trit kTritDiscard = 2;

// The three equivalent ways to present a raw string with discards to the
// privacy-amplification hash.
struct SiftedViews {
    std::vector<Trit> with_discards;      // ternary, discards kept in place
    BitVec discards_as_zero;              // binary, discards mapped to 0
    BitVec kept;                          // binary, discards removed
    std::vector<std::size_t> discard_positions; // public announcement record
};

SiftedViews sift_views(const std::vector<Trit>& raw);

// Inverse of the discard view: kept bits + announced positions rebuild the
// ternary string exactly.
std::vector<Trit> unsift(const BitVec& kept,
                         const std::vector<std::size_t>& discard_positions);

// --- statistical harnesses -------------------------------------------------

struct CollisionStats {
    std::uint64_t draws = 0;
    std::uint64_t collisions = 0;
    double rate = 0.0;
    double bound = 0.0; // two-universality target 2^-out_len
    double sigma = 0.0; // binomial stderr at the target rate
    bool pass = false;  // rate <= bound + 5 sigma
};

// Fresh family per draw; count hash(z1) == hash(z2). Requires equal lengths
// and z1 != z2.
CollisionStats same_length_collision_experiment(const BitVec& z1,
                                                const BitVec& z2,
                                                std::size_t out_len,
                                                std::uint64_t draws,
                                                std::uint64_t seed);

// Fresh per-length table per draw; z1 and z2 may differ in length.
CollisionStats naive_collision_experiment(const BitVec& z1, const BitVec& z2,
                                          std::size_t out_len,
                                          std::uint64_t draws,
                                          std::uint64_t seed);

// Fresh VirtualHasher per draw.
CollisionStats virtual_collision_experiment(const BitVec& z1, const BitVec& z2,
                                            std::size_t out_len,
                                            std::uint64_t draws,
                                            std::uint64_t seed);

struct UniformityStats {
    std::uint64_t draws = 0;
    std::size_t bins = 0;
    double statistic = 0.0;
    double p_value = 0.0;
    bool pass = false; // p_value >= 0.01
};

// Histogram virtual_variable_hash(z) over fresh hasher draws and chi-square
// it against uniform. Requires out_len <= 16.
UniformityStats virtual_uniformity_experiment(const BitVec& z,
                                              std::size_t out_len,
                                              std::uint64_t draws,
                                              std::uint64_t seed);

// Upper tail Q(stat; dof) of the chi-square distribution.
double chi_square_tail(double statistic, double dof);

} // namespace vlqkd
