#pragma once

#include <array>

#include "vlqkd/entropy_opt.hpp"
#include "vlqkd/linalg.hpp"

// Dense log-barrier path-following solver for the one shape of conic LP this
// project needs:
//
//   variables  sigma (4x4 hermitian), s in R^16   [phase-1 adds a scalar u]
//   min <grad, sigma>                             [phase-1: max u]
//   s.t.  Tr sigma = 1,  Tr_B sigma = sigma_bar_a
//         sigma >= 0 (psd)            [>= u I]
//         s_j -+ (Phi(sigma)_j - c_j) >= 0 (both signs)   [>= u]
//         radius - sum_j s_j >= 0     [>= u]
//
// Every exit is accompanied by an explicitly-verified dual point, so the
// reported bounds hold regardless of how converged the primal is.
namespace vlqkd::detail {

struct IpmProblem {
    std::array<Mat, 16> gamma; // Gamma_j = A_a (x) B_b in frozen outcome order
    FrequencyVector center;
    double radius = 0.0;
    Mat sigma_bar_a;
};

IpmProblem make_ipm_problem(const Bb84Setup& setup, const FeasibleSpec& spec);

struct IpmSolution {
    Mat sigma;            // strictly feasible
    Eigen::VectorXd s;    // slacks at exit
    double primal = 0.0;  // <grad, sigma>
    double dual_lower = 0.0;
};

// Requires a strictly feasible sigma0 (use ipm_phase1 to produce one).
IpmSolution ipm_minimize(const IpmProblem& p, const Mat& grad, const Mat& sigma0,
                         double gap_req);

struct Phase1Result {
    bool feasible = false;  // margin > 0 attained
    double u_achieved = 0.0;
    double u_upper = 0.0;   // certified upper bound on the best possible margin
    Mat sigma;              // strictly feasible when feasible == true
};

// Maximises the joint interior margin u; stops early once u >= target_margin.
Phase1Result ipm_phase1(const IpmProblem& p, double target_margin);

} // namespace vlqkd::detail
