#include "vlqkd/linalg.hpp"

#include <cmath>
#include <numeric>

namespace vlqkd {

bool is_hermitian(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Mat tensor(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat tensor(const Mat& a, const Mat& b, const Mat& c) { return tensor(tensor(a, b), c); }

Mat tensor(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
    return tensor(tensor(a, b), tensor(c, d));
}

Mat partial_trace(const Mat& rho, const std::vector<int>& dims,
                  const std::vector<int>& traced) {
    const int k = static_cast<int>(dims.size());
    int total = 1;
    for (int d : dims) {
        if (d <= 0) throw numeric_error("partial_trace: non-positive dimension");
        total *= d;
    }
    if (rho.rows() != total || rho.cols() != total)
        throw numeric_error("partial_trace: dims do not match matrix size");

    std::vector<bool> is_traced(k, false);
    for (int t : traced) {
        if (t < 0 || t >= k) throw numeric_error("partial_trace: subsystem index out of range");
        if (is_traced[t]) throw numeric_error("partial_trace: repeated subsystem index");
        is_traced[t] = true;
    }

    // strides for the full space, lexicographic with first factor most significant
    std::vector<int> stride(k, 1);
    for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];

    std::vector<int> kept, tr;
    for (int i = 0; i < k; ++i) (is_traced[i] ? tr : kept).push_back(i);

    int dk = 1, dt = 1;
    for (int i : kept) dk *= dims[i];
    for (int i : tr) dt *= dims[i];

    // enumerate multi-indices of the kept/traced groups
    auto offsets = [&](const std::vector<int>& group, int count) {
        std::vector<int> off(count, 0);
        for (int flat = 0; flat < count; ++flat) {
            int rem = flat, o = 0;
            for (auto it = group.rbegin(); it != group.rend(); ++it) {
                const int d = dims[*it];
                o += (rem % d) * stride[*it];
                rem /= d;
            }
            off[flat] = o;
        }
        return off;
    };
    const std::vector<int> off_k = offsets(kept, dk);
    const std::vector<int> off_t = offsets(tr, dt);

    Mat out = Mat::Zero(dk, dk);
    for (int r = 0; r < dk; ++r)
        for (int c = 0; c < dk; ++c) {
            cplx acc(0.0, 0.0);
            for (int t = 0; t < dt; ++t) acc += rho(off_k[r] + off_t[t], off_k[c] + off_t[t]);
            out(r, c) = acc;
        }
    return out;
}

EigH eigh(const Mat& m) {
    if (!is_hermitian(m, 1e-10))
        throw numeric_error("eigh: input is not hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw numeric_error("eigh: eigensolver failed");
    return EigH{es.eigenvalues(), es.eigenvectors()};
}

DensityOperator make_density(Mat rho, std::vector<int> dims) {
    int total = 1;
    for (int d : dims) total *= d;
    if (rho.rows() != rho.cols() || rho.rows() != total)
        throw numeric_error("make_density: dims do not match matrix size");
    if (!is_hermitian(rho))
        throw numeric_error("make_density: matrix is not hermitian");
    if (std::abs(rho.trace().real() - 1.0) > kTraceTol || std::abs(rho.trace().imag()) > kTraceTol)
        throw numeric_error("make_density: trace is not 1");
    const EigH e = eigh(rho);
    if (e.values.minCoeff() < kEigFloor)
        throw numeric_error("make_density: eigenvalue below tolerance floor");
    return DensityOperator{symmetrize(rho), std::move(dims)};
}

namespace {

// clamp policy for spectra of nominally-PSD operators
double clamp_eig(double lambda) {
    if (lambda < kEigFloor)
        throw numeric_error("eigenvalue below tolerance floor");
    return lambda <= kEigZero ? 0.0 : lambda;
}

} // namespace

double von_neumann_entropy(const Mat& rho) {
    const EigH e = eigh(rho);
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
        const double l = clamp_eig(e.values[i]);
        if (l > 0.0) s -= l * std::log2(l);
    }
    return s;
}

double quantum_relative_entropy(const Mat& x, const Mat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw numeric_error("quantum_relative_entropy: size mismatch");
    const EigH ex = eigh(x);
    const EigH ey = eigh(y);

    double tr_x_log_x = 0.0;
    for (Eigen::Index i = 0; i < ex.values.size(); ++i) {
        const double l = clamp_eig(ex.values[i]);
        if (l > 0.0) tr_x_log_x += l * std::log2(l);
    }

    // mass of x outside supp(y), and Tr[x log2 y] on supp(y)
    double outside = 0.0;
    double tr_x_log_y = 0.0;
    for (Eigen::Index i = 0; i < ey.values.size(); ++i) {
        const double mu = clamp_eig(ey.values[i]);
        const Vec v = ey.vectors.col(i);
        const double w = std::real((v.adjoint() * x * v)(0, 0));
        if (mu > 0.0)
            tr_x_log_y += w * std::log2(mu);
        else
            outside += w;
    }
    if (outside > kSupportTol)
        throw support_violation("quantum_relative_entropy: first argument has mass outside support of second");
    return tr_x_log_x - tr_x_log_y;
}

double binary_entropy(double p) {
    if (p < 0.0 || p > 1.0) throw numeric_error("binary_entropy: p outside [0,1]");
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat pauli_y() {
    Mat m(2, 2);
    m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
    return m;
}

Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Vec ket0() {
    Vec v(2);
    v << 1, 0;
    return v;
}

Vec ket1() {
    Vec v(2);
    v << 0, 1;
    return v;
}

Vec ket_plus() {
    Vec v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return v;
}

Vec ket_minus() {
    Vec v(2);
    v << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    return v;
}

Vec bell_phi_plus() {
    Vec v(4);
    v << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
    return v;
}

} // namespace vlqkd
