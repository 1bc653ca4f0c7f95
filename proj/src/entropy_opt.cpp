#include "vlqkd/entropy_opt.hpp"

#include <cmath>
#include <limits>

#include "vlqkd/detail/ipm.hpp"

namespace vlqkd {

Mat KrausChannel::apply(const Mat& rho) const {
    Mat out = Mat::Zero(out_dim, out_dim);
    for (const Mat& k : kraus) out += k * rho * k.adjoint();
    return out;
}

Mat KrausChannel::pinch(const Mat& x) const {
    Mat out = Mat::Zero(out_dim, out_dim);
    for (const Mat& p : pinching) out += p * x * p;
    return out;
}

Mat KrausChannel::adjoint_apply(const Mat& y) const {
    Mat out = Mat::Zero(in_dim, in_dim);
    for (const Mat& k : kraus) out += k.adjoint() * y * k;
    return out;
}

void KrausChannel::validate() const {
    if (kraus.empty() || pinching.empty()) throw numeric_error("KrausChannel: empty");
    for (const Mat& k : kraus)
        if (k.rows() != out_dim || k.cols() != in_dim)
            throw numeric_error("KrausChannel: Kraus block has wrong shape");
    Mat ktk = Mat::Zero(in_dim, in_dim);
    for (const Mat& k : kraus) ktk += k.adjoint() * k;
    const EigH e = eigh(ktk);
    if (e.values.maxCoeff() > 1.0 + 1e-10)
        throw numeric_error("KrausChannel: map increases trace");
    Mat psum = Mat::Zero(out_dim, out_dim);
    for (std::size_t i = 0; i < pinching.size(); ++i) {
        const Mat& p = pinching[i];
        if (p.rows() != out_dim || p.cols() != out_dim)
            throw numeric_error("KrausChannel: pinching block has wrong shape");
        if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10)
            throw numeric_error("KrausChannel: pinching block is not a projector");
        for (std::size_t j = i + 1; j < pinching.size(); ++j)
            if ((p * pinching[j]).cwiseAbs().maxCoeff() > 1e-10)
                throw numeric_error("KrausChannel: pinching blocks overlap");
        psum += p;
    }
    if ((psum - Mat::Identity(out_dim, out_dim)).cwiseAbs().maxCoeff() > 1e-10)
        throw numeric_error("KrausChannel: pinching blocks do not resolve identity");
}

KrausChannel bb84_key_channel(const Bb84Setup& setup) {
    KrausChannel ch;
    ch.in_dim = 4;
    ch.out_dim = 16;
    // rows indexed (key, alice, bob, announcement), columns (alice, bob)
    Mat k = Mat::Zero(16, 4);
    for (int z = 0; z < 2; ++z)
        for (int b = 0; b < 2; ++b)
            k(((z * 2 + z) * 2 + b) * 2 + 0, z * 2 + b) = setup.p_z;
    ch.kraus.push_back(k);
    Mat d0 = Mat::Zero(2, 2), d1 = Mat::Zero(2, 2);
    d0(0, 0) = 1.0;
    d1(1, 1) = 1.0;
    ch.pinching.push_back(tensor(d0, Mat::Identity(8, 8)));
    ch.pinching.push_back(tensor(d1, Mat::Identity(8, 8)));
    ch.validate();
    return ch;
}

namespace {

Mat perturbed(const KrausChannel& ch, const Mat& rho) {
    return (1.0 - kEpsPerturb) * rho +
           kEpsPerturb * Mat::Identity(ch.in_dim, ch.in_dim) / ch.in_dim;
}

// log2 on the support, eigenvalues <= kEigZero treated as exact zeros
Mat support_log2(const Mat& x) {
    const EigH e = eigh(x);
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
        const double l = e.values[i];
        if (l < kEigFloor) throw numeric_error("support_log2: eigenvalue below floor");
        if (l > kEigZero) {
            const Vec v = e.vectors.col(i);
            out += std::log2(l) * (v * v.adjoint());
        }
    }
    return out;
}

} // namespace

double objective(const KrausChannel& ch, const Mat& rho) {
    const Mat x = ch.apply(perturbed(ch, rho));
    return quantum_relative_entropy(x, ch.pinch(x));
}

Mat objective_gradient(const KrausChannel& ch, const Mat& rho) {
    const Mat x = ch.apply(perturbed(ch, rho));
    const Mat diff = support_log2(x) - support_log2(ch.pinch(x));
    return symmetrize((1.0 - kEpsPerturb) * ch.adjoint_apply(diff));
}

void FeasibleSpec::validate() const {
    center.validate();
    if (!(radius >= 0.0) || radius > 2.0)
        throw numeric_error("FeasibleSpec: radius outside [0, 2]");
    if (sigma_bar_a.rows() != 2 || sigma_bar_a.cols() != 2 ||
        !is_hermitian(sigma_bar_a, 1e-10))
        throw numeric_error("FeasibleSpec: sigma_bar_a must be 2x2 hermitian");
    const EigH e = eigh(sigma_bar_a);
    if (e.values.minCoeff() <= 0.0)
        throw numeric_error("FeasibleSpec: sigma_bar_a must be positive definite");
    if (std::abs(sigma_bar_a.trace().real() - 1.0) > 1e-10)
        throw numeric_error("FeasibleSpec: sigma_bar_a must have unit trace");
}

namespace {

// Effective spec with the barrier-friendly radius floor. Enlarging the set
// can only lower the true minimum, so certified lower bounds computed on the
// floored set remain valid for the requested one.
FeasibleSpec floored(const FeasibleSpec& spec) {
    FeasibleSpec out = spec;
    out.radius = std::max(spec.radius, kRadiusFloor);
    return out;
}

detail::Phase1Result interior_or_throw(const detail::IpmProblem& prob) {
    const double target = std::min(1e-4, prob.radius / 100.0);
    detail::Phase1Result ph = detail::ipm_phase1(prob, target);
    if (!ph.feasible) {
        if (ph.u_upper < -1e-9)
            throw infeasible_error("no state satisfies the statistics ball and marginal");
        throw infeasible_error("feasible set has empty interior (boundary-degenerate spec)");
    }
    return ph;
}

} // namespace

LinearSolveResult linear_subproblem(const Bb84Setup& setup, const FeasibleSpec& spec,
                                    const Mat& grad, double gap_req) {
    spec.validate();
    if (!is_hermitian(grad, 1e-10)) throw numeric_error("linear_subproblem: grad not hermitian");
    const detail::IpmProblem prob = detail::make_ipm_problem(setup, floored(spec));
    const detail::Phase1Result ph = interior_or_throw(prob);
    const detail::IpmSolution sol = detail::ipm_minimize(prob, grad, ph.sigma, gap_req);
    return LinearSolveResult{sol.sigma, sol.primal, sol.dual_lower};
}

OptResult minimize_entropy(const Bb84Setup& setup, const KrausChannel& ch,
                           const FeasibleSpec& spec, const OptOptions& opts) {
    spec.validate();
    ch.validate();
    if (opts.max_iters < 1 || !(opts.tol_bits > 0.0) || !(opts.ipm_gap > 0.0))
        throw numeric_error("minimize_entropy: bad options");
    const detail::IpmProblem prob = detail::make_ipm_problem(setup, floored(spec));
    const detail::Phase1Result ph = interior_or_throw(prob);
    const Mat neutral = ph.sigma;

    Mat rho = neutral;
    OptResult res;
    res.rho_star = rho;
    res.upper_value = objective(ch, rho);
    res.certified_lower = -std::numeric_limits<double>::infinity();
    res.status = OptStatus::IterationCap;

    for (int it = 0; it < opts.max_iters; ++it) {
        res.iterations = it + 1;
        const double f_rho = objective(ch, rho);
        if (f_rho < res.upper_value) {
            res.upper_value = f_rho;
            res.rho_star = rho;
        }
        const Mat g = objective_gradient(ch, rho);

        // slight blend toward the interior point keeps the barrier start sane
        const Mat start = symmetrize(0.999 * rho + 0.001 * neutral);
        const detail::IpmSolution sub = detail::ipm_minimize(prob, g, start, opts.ipm_gap);

        const double lin_gap = std::real((g * rho).trace()) - sub.dual_lower;
        res.certified_lower = std::max(res.certified_lower, f_rho - lin_gap);
        if (res.upper_value - res.certified_lower <= opts.tol_bits) {
            res.status = OptStatus::Converged;
            return res;
        }

        // exact-ish line search toward the subproblem solution (f is convex)
        const Mat dir = sub.sigma - rho;
        auto fval = [&](double gamma) { return objective(ch, Mat(rho + gamma * dir)); };
        double a = 0.0, b = 1.0;
        const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
        double f1 = fval(x1), f2 = fval(x2);
        for (int ls = 0; ls < 40 && (b - a) > 1e-8; ++ls) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - invphi * (b - a);
                f1 = fval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + invphi * (b - a);
                f2 = fval(x2);
            }
        }
        const double gamma = (f1 <= f2) ? x1 : x2;
        if (gamma <= 0.0) continue;
        rho = symmetrize(rho + gamma * dir);
    }
    const double f_final = objective(ch, rho);
    if (f_final < res.upper_value) {
        res.upper_value = f_final;
        res.rho_star = rho;
    }
    return res;
}

} // namespace vlqkd
