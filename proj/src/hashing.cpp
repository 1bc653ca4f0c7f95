#include "vlqkd/hashing.hpp"

#include <bit>
#include <cmath>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "vlqkd/errors.hpp"

namespace vlqkd {

namespace {

constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t nbits) {
    return (nbits + kWordBits - 1) / kWordBits;
}

std::size_t diagonal_bits(std::size_t in_len, std::size_t out_len) {
    std::size_t total = in_len + out_len;
    return total == 0 ? 0 : total - 1;
}

// Chunked parallel tally over independent draws. Thread t owns draws
// d = t, t + T, t + 2T, ...; determinism is carried by per-draw child
// streams, not by the schedule.
template <typename PerDraw>
std::uint64_t parallel_count(std::uint64_t draws, const PerDraw& hit) {
    unsigned nthreads = std::max(1u, std::thread::hardware_concurrency());
    if (nthreads == 1 || draws < 4096) {
        std::uint64_t count = 0;
        for (std::uint64_t d = 0; d < draws; ++d)
            count += hit(d) ? 1 : 0;
        return count;
    }
    std::vector<std::uint64_t> local(nthreads, 0);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            std::uint64_t count = 0;
            for (std::uint64_t d = t; d < draws; d += nthreads)
                count += hit(d) ? 1 : 0;
            local[t] = count;
        });
    }
    for (auto& th : pool)
        th.join();
    std::uint64_t count = 0;
    for (auto c : local)
        count += c;
    return count;
}

CollisionStats finish_collision(std::uint64_t draws, std::uint64_t collisions,
                                std::size_t out_len) {
    CollisionStats st;
    st.draws = draws;
    st.collisions = collisions;
    st.rate = draws == 0 ? 0.0 : double(collisions) / double(draws);
    st.bound = std::ldexp(1.0, -int(out_len));
    st.sigma = draws == 0
                   ? 0.0
                   : std::sqrt(st.bound * (1.0 - st.bound) / double(draws));
    st.pass = st.rate <= st.bound + 5.0 * st.sigma;
    return st;
}

} // namespace

// --- BitVec ----------------------------------------------------------------

BitVec::BitVec(std::size_t nbits) : nbits_(nbits), words_(word_count(nbits), 0) {}

void BitVec::mask_top() {
    std::size_t rem = nbits_ % kWordBits;
    if (rem != 0 && !words_.empty())
        words_.back() &= (std::uint64_t{1} << rem) - 1;
}

BitVec BitVec::random(std::size_t nbits, CounterRng& rng) {
    BitVec v(nbits);
    for (auto& w : v.words_)
        w = rng.next_u64();
    v.mask_top();
    return v;
}

BitVec BitVec::from_string(std::string_view s) {
    BitVec v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            v.set(i, true);
        else if (s[i] != '0')
            throw config_error("bitstring literal may contain only 0 and 1");
    }
    return v;
}

bool BitVec::get(std::size_t i) const {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1;
}

void BitVec::set(std::size_t i, bool v) {
    std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
    if (v)
        words_[i / kWordBits] |= mask;
    else
        words_[i / kWordBits] &= ~mask;
}

std::uint64_t BitVec::window(std::size_t bit) const {
    std::size_t q = bit / kWordBits;
    std::size_t r = bit % kWordBits;
    std::uint64_t lo = q < words_.size() ? words_[q] : 0;
    if (r == 0)
        return lo;
    std::uint64_t hi = q + 1 < words_.size() ? words_[q + 1] : 0;
    return (lo >> r) | (hi << (kWordBits - r));
}

std::uint64_t BitVec::to_u64() const {
    if (nbits_ > kWordBits)
        throw config_error("BitVec::to_u64 needs size <= 64");
    return words_.empty() ? 0 : words_[0];
}

BitVec BitVec::operator^(const BitVec& o) const {
    if (nbits_ != o.nbits_)
        throw config_error("BitVec xor needs equal lengths");
    BitVec v(nbits_);
    for (std::size_t w = 0; w < words_.size(); ++w)
        v.words_[w] = words_[w] ^ o.words_[w];
    return v;
}

bool BitVec::all_zero() const {
    for (auto w : words_)
        if (w != 0)
            return false;
    return true;
}

std::string BitVec::to_string() const {
    std::string s;
    s.reserve(nbits_);
    for (std::size_t i = 0; i < nbits_; ++i)
        s.push_back(get(i) ? '1' : '0');
    return s;
}

// --- Toeplitz hashing --------------------------------------------------------

ToeplitzFamily ToeplitzFamily::draw(std::size_t in_len, std::size_t out_len,
                                    CounterRng& rng) {
    ToeplitzFamily fam;
    fam.in_len = in_len;
    fam.out_len = out_len;
    fam.diagonal = BitVec::random(diagonal_bits(in_len, out_len), rng);
    return fam;
}

void ToeplitzFamily::validate() const {
    if (out_len == 0)
        throw config_error("ToeplitzFamily: out_len must be >= 1");
    if (diagonal.size() != diagonal_bits(in_len, out_len))
        throw config_error("ToeplitzFamily: diagonal has wrong length");
}

BitVec toeplitz_hash(const ToeplitzFamily& fam, const BitVec& z) {
    if (z.size() != fam.in_len)
        throw config_error("toeplitz_hash: input length does not match family");
    // Row i of T[i][j] = diag[i - j + in_len - 1] is the window
    // diag[i .. i + in_len - 1] read against z reversed, so each output bit
    // is one sliding-window AND/parity pass.
    BitVec zrev(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
        zrev.set(k, z.get(z.size() - 1 - k));
    BitVec out(fam.out_len);
    const auto& zw = zrev.words();
    for (std::size_t i = 0; i < fam.out_len; ++i) {
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < zw.size(); ++w)
            acc ^= zw[w] & fam.diagonal.window(i + w * kWordBits);
        out.set(i, std::popcount(acc) & 1);
    }
    return out;
}

std::vector<ToeplitzFamily> draw_length_table(std::size_t n_max,
                                              std::size_t out_len,
                                              CounterRng& rng) {
    std::vector<ToeplitzFamily> table;
    table.reserve(n_max + 1);
    for (std::size_t i = 0; i <= n_max; ++i)
        table.push_back(ToeplitzFamily::draw(i, out_len, rng));
    return table;
}

BitVec naive_variable_hash(const std::vector<ToeplitzFamily>& table,
                           const BitVec& z) {
    if (z.size() >= table.size())
        throw config_error("naive_variable_hash: input longer than table");
    return toeplitz_hash(table[z.size()], z);
}

VirtualHasher VirtualHasher::draw(std::size_t n_max, std::size_t out_len,
                                  CounterRng& rng) {
    VirtualHasher vh;
    vh.out_len = out_len;
    vh.per_length.reserve(n_max + 1);
    vh.masks.reserve(n_max + 1);
    for (std::size_t i = 0; i <= n_max; ++i) {
        vh.per_length.push_back(ToeplitzFamily::draw(i, out_len, rng));
        vh.masks.push_back(BitVec::random(out_len, rng));
    }
    return vh;
}

void VirtualHasher::validate() const {
    if (out_len == 0)
        throw config_error("VirtualHasher: out_len must be >= 1");
    if (per_length.size() != masks.size() || per_length.empty())
        throw config_error("VirtualHasher: per-length tables out of step");
    for (std::size_t i = 0; i < per_length.size(); ++i) {
        per_length[i].validate();
        if (per_length[i].in_len != i || per_length[i].out_len != out_len ||
            masks[i].size() != out_len)
            throw config_error("VirtualHasher: entry shape mismatch");
    }
}

BitVec virtual_variable_hash(const VirtualHasher& vh, const BitVec& z) {
    if (z.size() >= vh.per_length.size())
        throw config_error("virtual_variable_hash: input longer than table");
    return toeplitz_hash(vh.per_length[z.size()], z) ^ vh.masks[z.size()];
}

// --- sifting representations -------------------------------------------------

SiftedViews sift_views(const std::vector<Trit>& raw) {
    std::size_t kept_count = 0;
    for (Trit t : raw) {
        if (t > kTritDiscard)
            throw config_error("sift_views: symbols must be 0, 1 or discard");
        if (t != kTritDiscard)
            ++kept_count;
    }
    SiftedViews v;
    v.with_discards = raw;
    v.discards_as_zero = BitVec(raw.size());
    v.kept = BitVec(kept_count);
    v.discard_positions.reserve(raw.size() - kept_count);
    std::size_t k = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == kTritDiscard) {
            v.discard_positions.push_back(i);
        } else {
            v.discards_as_zero.set(i, raw[i] == 1);
            v.kept.set(k++, raw[i] == 1);
        }
    }
    return v;
}

std::vector<Trit> unsift(const BitVec& kept,
                         const std::vector<std::size_t>& discard_positions) {
    std::size_t total = kept.size() + discard_positions.size();
    std::vector<Trit> raw(total, 0);
    for (std::size_t p = 0; p < discard_positions.size(); ++p) {
        std::size_t pos = discard_positions[p];
        if (pos >= total || (p > 0 && discard_positions[p - 1] >= pos))
            throw config_error("unsift: positions must be increasing and in range");
        raw[pos] = kTritDiscard;
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < total; ++i)
        if (raw[i] != kTritDiscard)
            raw[i] = kept.get(k++) ? 1 : 0;
    return raw;
}

// --- statistical harnesses ---------------------------------------------------

CollisionStats same_length_collision_experiment(const BitVec& z1,
                                                const BitVec& z2,
                                                std::size_t out_len,
                                                std::uint64_t draws,
                                                std::uint64_t seed) {
    if (z1.size() != z2.size())
        throw config_error("same-length experiment needs equal lengths");
    if (z1 == z2)
        throw config_error("collision experiment needs distinct inputs");
    std::uint64_t collisions = parallel_count(draws, [&](std::uint64_t d) {
        CounterRng rng = CounterRng::child(seed, d);
        auto fam = ToeplitzFamily::draw(z1.size(), out_len, rng);
        return toeplitz_hash(fam, z1) == toeplitz_hash(fam, z2);
    });
    return finish_collision(draws, collisions, out_len);
}

CollisionStats naive_collision_experiment(const BitVec& z1, const BitVec& z2,
                                          std::size_t out_len,
                                          std::uint64_t draws,
                                          std::uint64_t seed) {
    if (z1 == z2)
        throw config_error("collision experiment needs distinct inputs");
    std::size_t n_max = std::max(z1.size(), z2.size());
    std::uint64_t collisions = parallel_count(draws, [&](std::uint64_t d) {
        CounterRng rng = CounterRng::child(seed, d);
        auto table = draw_length_table(n_max, out_len, rng);
        return naive_variable_hash(table, z1) == naive_variable_hash(table, z2);
    });
    return finish_collision(draws, collisions, out_len);
}

CollisionStats virtual_collision_experiment(const BitVec& z1, const BitVec& z2,
                                            std::size_t out_len,
                                            std::uint64_t draws,
                                            std::uint64_t seed) {
    if (z1 == z2)
        throw config_error("collision experiment needs distinct inputs");
    std::size_t n_max = std::max(z1.size(), z2.size());
    std::uint64_t collisions = parallel_count(draws, [&](std::uint64_t d) {
        CounterRng rng = CounterRng::child(seed, d);
        auto vh = VirtualHasher::draw(n_max, out_len, rng);
        return virtual_variable_hash(vh, z1) == virtual_variable_hash(vh, z2);
    });
    return finish_collision(draws, collisions, out_len);
}

UniformityStats virtual_uniformity_experiment(const BitVec& z,
                                              std::size_t out_len,
                                              std::uint64_t draws,
                                              std::uint64_t seed) {
    if (out_len == 0 || out_len > 16)
        throw config_error("uniformity experiment needs 1 <= out_len <= 16");
    if (draws == 0)
        throw config_error("uniformity experiment needs draws >= 1");
    std::size_t bins = std::size_t{1} << out_len;
    std::vector<std::uint64_t> hist(bins, 0);
    for (std::uint64_t d = 0; d < draws; ++d) {
        CounterRng rng = CounterRng::child(seed, d);
        auto vh = VirtualHasher::draw(z.size(), out_len, rng);
        ++hist[virtual_variable_hash(vh, z).to_u64()];
    }
    UniformityStats st;
    st.draws = draws;
    st.bins = bins;
    double expected = double(draws) / double(bins);
    for (auto o : hist) {
        double dlt = double(o) - expected;
        st.statistic += dlt * dlt / expected;
    }
    st.p_value = chi_square_tail(st.statistic, double(bins - 1));
    st.pass = st.p_value >= 0.01;
    return st;
}

double chi_square_tail(double statistic, double dof) {
    if (statistic <= 0.0)
        return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

} // namespace vlqkd
