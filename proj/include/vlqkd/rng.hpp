#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace vlqkd {

// Counter-based deterministic generator. Output for a given (key, counter)
// pair is platform independent, and independent streams are derived by
// hashing (master, stream) rather than by jumping a stateful engine, so a
// trial's randomness never depends on how many draws earlier trials made.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    // Derive an independent child stream, e.g. one per Monte Carlo trial.
    static CounterRng child(std::uint64_t master, std::uint64_t stream);

    std::uint64_t next_u64();

    // 53-bit mantissa uniform in [0, 1).
    double next_double();

    std::uint64_t key() const { return key_; }

  private:
    static std::uint64_t mix(std::uint64_t z);

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

// m independent categorical draws from `probs` (need not be exactly
// normalised; entries must be >= 0 and sum to something positive), binned by
// inverse-CDF walk. Returns counts summing to m exactly.
std::vector<std::uint64_t> multinomial_counts(const std::vector<double>& probs,
                                              std::uint64_t m, CounterRng& rng);

} // namespace vlqkd
