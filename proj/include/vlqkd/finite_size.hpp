#pragma once

#include <cstdint>

#include "vlqkd/bb84.hpp"
#include "vlqkd/entropy_opt.hpp"

namespace vlqkd {

// Failure probabilities of the three classical post-processing stages:
// acceptance test, privacy amplification, error verification.
struct SecurityBudget {
    double eps_at = 0.0;
    double eps_pa = 0.0;
    double eps_ev = 0.0;

    void validate() const; // each in (0,1), throws config_error

    // A fixed-length protocol either aborts or delivers one length, so the
    // AT and PA failures never stack; the variable-length union bound does.
    double eps_secure_fixed() const { return std::max(eps_at, eps_pa) + eps_ev; }
    double eps_secure_variable() const { return eps_at + eps_pa + eps_ev; }
};

// Base of the squared-log continuity correction. The conservative default
// charges log2^2(2 d_z + 1); the smaller log2^2(d_z + 1) variant is kept
// selectable for comparison runs.
enum class CorrectionBase { TwoDzPlusOne, DzPlusOne };

struct ProtocolParams {
    std::int64_t n_total = 0; // signals sent (N)
    std::int64_t m_test = 0;  // rounds sacrificed for statistics (m)
    double p_z = 0.5;
    double f_ec = 1.16; // error-correction inefficiency
    int d_z = 2;        // key register dimension
    CorrectionBase base = CorrectionBase::TwoDzPlusOne;

    std::int64_t n_key() const { return n_total - m_test; }
    void validate() const; // throws config_error
};

// Renyi order used by the entropy accounting. alpha = 1 + kappa/sqrt(n) with
// kappa = sqrt(log2(1/eps_pa)) / log2(d_z + 1); construction fails outside the
// admissible interval (1, 1 + 1/log2(2 d_z + 1)).
struct RenyiParams {
    double alpha = 0.0;
    double kappa = 0.0;
    int d_z = 0;
    std::int64_t n = 0;

    static RenyiParams make(std::int64_t n, int d_z, double eps_pa);
    static double admissible_upper(int d_z);
};

// Statistical radius of the acceptance-test confidence region:
// sqrt(2) * sqrt[(ln(1/eps_at) + sigma_size ln(m+1)) / m].
double mu_radius(std::int64_t m, int sigma_size, double eps_at);

// n (alpha - 1) log2^2(base) bits subtracted for the Renyi-order shift.
double renyi_correction(std::int64_t n, const RenyiParams& rp, CorrectionBase base);

// PA + EV overhead: (alpha/(alpha-1)) (log2(1/(4 eps_pa)) + 2/alpha)
//                   + ceil(log2(1/eps_ev)).
double theta_overhead(const RenyiParams& rp, double eps_pa, double eps_ev);

// ceil(f_ec * n_key * H(Z|YC)) bits disclosed for error correction, from the
// observed (or design-basis) outcome frequencies.
std::int64_t ec_leak_bits(const FrequencyVector& freq, const ProtocolParams& pp);

struct LengthDecision {
    std::int64_t l = 0;    // final key bits
    std::int64_t leak = 0; // error-correction bits disclosed
};

// l = max(0, floor(n * entropy_lb - leak - renyi_correction - theta)).
LengthDecision key_length_fixed(double entropy_lb, std::int64_t leak,
                                const ProtocolParams& pp, const SecurityBudget& budget);

// n * certified_lower(min H(Z|CE) over the mu-ball around fobs) minus the
// Renyi correction, in bits. Throws infeasible_error when no state matches
// fobs within mu (the decision layer maps that to l = 0).
// radius_override >= 0 replaces mu (used by tests and the engine's clamps).
double b_stat(const Bb84Setup& setup, const KrausChannel& ch, const FrequencyVector& fobs,
              const ProtocolParams& pp, const SecurityBudget& budget,
              const OptOptions& opts = {}, double radius_override = -1.0);

// Variable-length output: leak from the observed statistics, l from b_stat
// minus leak and theta, floored at zero.
LengthDecision variable_length_decision(const Bb84Setup& setup, const KrausChannel& ch,
                                        const FrequencyVector& fobs,
                                        const ProtocolParams& pp,
                                        const SecurityBudget& budget,
                                        const OptOptions& opts = {});

} // namespace vlqkd
