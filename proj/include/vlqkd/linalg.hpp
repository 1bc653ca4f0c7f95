#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "vlqkd/errors.hpp"

namespace vlqkd {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Numerical policy, shared project-wide.
inline constexpr double kHermTol = 1e-12;     // allowed |M - M^dag| per entry
inline constexpr double kEigFloor = -1e-10;   // eigenvalues below this are an error
inline constexpr double kEigZero = 1e-14;     // |lambda| <= this counts as zero support
inline constexpr double kSupportTol = 1e-8;   // allowed mass outside support in rel. entropy
inline constexpr double kTraceTol = 1e-10;

bool is_hermitian(const Mat& m, double tol = kHermTol);

// (M + M^dag)/2, cheap insurance against rounding drift.
Mat symmetrize(const Mat& m);

// Kronecker product, first factor most significant (lexicographic index order).
Mat tensor(const Mat& a, const Mat& b);
Mat tensor(const Mat& a, const Mat& b, const Mat& c);
Mat tensor(const Mat& a, const Mat& b, const Mat& c, const Mat& d);

// Trace out the subsystems listed in `traced` (0-based positions into `dims`),
// keeping the remaining factors in their original order.
Mat partial_trace(const Mat& rho, const std::vector<int>& dims,
                  const std::vector<int>& traced);

struct EigH {
    Eigen::VectorXd values; // ascending
    Mat vectors;            // columns
};

// Hermitian eigendecomposition; throws numeric_error on non-hermitian input.
EigH eigh(const Mat& m);

// Validated density operator on a tensor-product space.
struct DensityOperator {
    Mat rho;
    std::vector<int> dims;

    int dim() const { return static_cast<int>(rho.rows()); }
};

// Throws numeric_error if rho is not hermitian, not unit trace, has an
// eigenvalue below kEigFloor, or dims do not multiply to its size.
DensityOperator make_density(Mat rho, std::vector<int> dims);

// -sum lambda log2 lambda over the clamped spectrum, in bits.
// Eigenvalues in [kEigFloor, kEigZero] are treated as exact zeros; anything
// below kEigFloor throws numeric_error.
double von_neumann_entropy(const Mat& rho);

// Tr[x log2 x] - Tr[x log2 y] for PSD x, y (trace need not be 1), in bits.
// Throws support_violation if more than kSupportTol of x's mass lies outside
// the support of y.
double quantum_relative_entropy(const Mat& x, const Mat& y);

// h2(p) in bits; p in [0,1], endpoints give 0.
double binary_entropy(double p);

// Standard 1-qubit states and Pauli matrices, handy in tests and model setup.
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Vec ket0();
Vec ket1();
Vec ket_plus();
Vec ket_minus();
Vec bell_phi_plus(); // (|00> + |11>)/sqrt(2)

} // namespace vlqkd
