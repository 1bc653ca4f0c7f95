#pragma once

#include <vector>

#include "vlqkd/bb84.hpp"
#include "vlqkd/linalg.hpp"

namespace vlqkd {

// Trace-nonincreasing CP map plus a pinching that dephases the key register.
struct KrausChannel {
    std::vector<Mat> kraus;    // each out_dim x in_dim
    std::vector<Mat> pinching; // orthogonal projectors summing to identity
    int in_dim = 0;
    int out_dim = 0;

    Mat apply(const Mat& rho) const;     // G(rho) = sum K rho K^dag
    Mat pinch(const Mat& x) const;       // Z(x)   = sum P x P
    Mat adjoint_apply(const Mat& y) const;
    void validate() const; // throws numeric_error on structural problems
};

// Key map for the Z-basis protocol: double-Z rounds write Alice's bit into
// the key register; every other announcement pattern yields a deterministic
// key bit and drops out of the entropy, so a single Kraus block suffices.
// Output order: key (x) alice (x) bob (x) announcement, 16-dimensional.
KrausChannel bb84_key_channel(const Bb84Setup& setup);

inline constexpr double kEpsPerturb = 1e-12; // mixed toward I/d before logs
inline constexpr double kRadiusFloor = 1e-6; // keeps the barrier interior nonempty

// f(rho) = D( G(rho) || Z(G(rho)) ) in bits, evaluated on the perturbed
// state (1-eps) rho + eps I/d. Equals H(Z|CE) of the post-measurement state.
double objective(const KrausChannel& ch, const Mat& rho);

// Gradient of the objective, the hermitian matrix G^dag(log2 G - log2 Z(G)).
Mat objective_gradient(const KrausChannel& ch, const Mat& rho);

// { sigma >= 0, Tr sigma = 1, Tr_B sigma = sigma_bar_a,
//   || Phi(sigma) - center ||_1 <= radius }
struct FeasibleSpec {
    FrequencyVector center;
    double radius = 0.0;
    Mat sigma_bar_a; // 2x2, strictly positive definite

    void validate() const;
};

struct LinearSolveResult {
    Mat sigma;         // strictly feasible primal point
    double primal;     // <grad, sigma>
    double dual_lower; // certified lower bound on min <grad, sigma> over the set
};

// min Tr(grad sigma) over the feasible spec via a log-barrier path-following
// method. dual_lower comes from an explicit dual-feasible point, so it is a
// true bound even if the primal iterate is slightly off-optimal.
LinearSolveResult linear_subproblem(const Bb84Setup& setup, const FeasibleSpec& spec,
                                    const Mat& grad, double gap_req = 1e-9);

enum class OptStatus { Converged, IterationCap };

struct OptResult {
    double upper_value = 0.0;     // objective at the best feasible iterate
    double certified_lower = 0.0; // best convexity-certificate lower bound
    Mat rho_star;
    OptStatus status = OptStatus::Converged;
    int iterations = 0;

    double gap() const { return upper_value - certified_lower; }
};

struct OptOptions {
    double tol_bits = 1e-5;
    int max_iters = 500;
    double ipm_gap = 1e-9;
};

// Frank-Wolfe minimisation of the objective over the feasible spec. Each
// iteration lower-bounds the true minimum by f(rho_k) + min <grad_k, sigma -
// rho_k>, with the inner min itself dual-certified; certified_lower is the
// best such bound and stays valid when the iteration cap triggers.
// Throws infeasible_error when the spec admits no state.
OptResult minimize_entropy(const Bb84Setup& setup, const KrausChannel& ch,
                           const FeasibleSpec& spec, const OptOptions& opts = {});

} // namespace vlqkd
