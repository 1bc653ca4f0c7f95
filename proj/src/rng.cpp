#include "vlqkd/rng.hpp"

#include <stdexcept>

namespace vlqkd {

std::uint64_t CounterRng::mix(std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CounterRng CounterRng::child(std::uint64_t master, std::uint64_t stream) {
    return CounterRng(mix(master ^ mix(stream + 0x632be59bd9b4e019ULL)));
}

std::uint64_t CounterRng::next_u64() { return mix(key_ ^ mix(ctr_++)); }

double CounterRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::vector<std::uint64_t> multinomial_counts(const std::vector<double>& probs,
                                              std::uint64_t m, CounterRng& rng) {
    if (probs.empty()) throw std::invalid_argument("multinomial_counts: empty pmf");
    std::vector<double> cum(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0) throw std::invalid_argument("multinomial_counts: negative mass");
        acc += probs[i];
        cum[i] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("multinomial_counts: zero mass");

    std::vector<std::uint64_t> counts(probs.size(), 0);
    const std::size_t last = probs.size() - 1;
    for (std::uint64_t k = 0; k < m; ++k) {
        const double u = rng.next_double() * acc;
        std::size_t i = 0;
        while (i < last && u >= cum[i]) ++i;
        ++counts[i];
    }
    return counts;
}

} // namespace vlqkd
