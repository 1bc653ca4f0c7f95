#include "vlqkd/detail/ipm.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace vlqkd::detail {
namespace {

bool ipm_debug() {
    static const bool on = std::getenv("VLQKD_IPM_DEBUG") != nullptr;
    return on;
}

constexpr int NV = 16;   // real coordinates of a 4x4 hermitian matrix
constexpr int NS = 16;   // one slack per statistic
constexpr int NCON = 33; // 16 + 16 + 1 linear cone constraints
constexpr int NEQ = 4;   // trace + three marginal functionals
constexpr double kNu = 4.0 + NCON; // barrier parameter of the product cone

// Residual floor of the final centering grows ~ eps_mach * t, the centering
// offset shrinks as nu / t; this constant balances the two for long double.
constexpr double kSlopPerT = 6e-19;

// The whole solver is templated on the real scalar: the path-following blocks
// run in double, but the last block and the dual certificate use long double.
// Near t ~ 1e10 the optimal sigma has eigenvalues ~ 1/t, and double precision
// cannot resolve them well enough to center the dual point below ~1e-5.
template <typename S> using CMatT = Eigen::Matrix<std::complex<S>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S> using RMatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S> using RVecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
CMatT<S> symm(const CMatT<S>& m) {
    return (m + m.adjoint()) * S(0.5);
}

template <typename S>
const std::array<CMatT<S>, NV>& herm_basis() {
    static const std::array<CMatT<S>, NV> basis = [] {
        std::array<CMatT<S>, NV> e;
        int idx = 0;
        for (int i = 0; i < 4; ++i) {
            CMatT<S> m = CMatT<S>::Zero(4, 4);
            m(i, i) = S(1);
            e[idx++] = m;
        }
        const S r = S(1) / std::sqrt(S(2));
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                CMatT<S> sym = CMatT<S>::Zero(4, 4);
                sym(i, j) = r;
                sym(j, i) = r;
                e[idx++] = sym;
                CMatT<S> skew = CMatT<S>::Zero(4, 4);
                skew(i, j) = std::complex<S>(0, -r);
                skew(j, i) = std::complex<S>(0, r);
                e[idx++] = skew;
            }
        return e;
    }();
    return basis;
}

template <typename S>
RVecT<S> vec_herm(const CMatT<S>& m) {
    RVecT<S> v(NV);
    const auto& e = herm_basis<S>();
    for (int k = 0; k < NV; ++k) v[k] = std::real((e[k] * m).trace());
    return v;
}

template <typename S>
CMatT<S> unvec_herm(const RVecT<S>& v) {
    const auto& e = herm_basis<S>();
    CMatT<S> m = CMatT<S>::Zero(4, 4);
    for (int k = 0; k < NV; ++k) m += v[k] * e[k];
    return m;
}

// Everything that depends only on the problem geometry, not the iterate.
template <typename S>
struct Shape {
    bool has_u = false;
    int nx = 0;
    S radius = S(0);
    RMatT<S> acon; // NCON x nx rows of the linear cone constraints
    RVecT<S> dcon; // constant offsets: con = acon x + dcon >= 0
    RMatT<S> aeq;  // NEQ x nx
    RVecT<S> beq;
};

template <typename S>
Shape<S> make_shape(const IpmProblem& p, bool has_u) {
    Shape<S> sh;
    sh.has_u = has_u;
    sh.nx = NV + NS + (has_u ? 1 : 0);
    sh.radius = S(p.radius);

    sh.acon = RMatT<S>::Zero(NCON, sh.nx);
    sh.dcon = RVecT<S>::Zero(NCON);
    for (int j = 0; j < 16; ++j) {
        const CMatT<S> gj = p.gamma[static_cast<std::size_t>(j)].template cast<std::complex<S>>();
        const RVecT<S> phi = vec_herm<S>(gj);
        sh.acon.row(j).head(NV) = -phi.transpose();
        sh.acon(j, NV + j) = S(1);
        sh.dcon[j] = S(p.center[static_cast<std::size_t>(j)]);
        sh.acon.row(16 + j).head(NV) = phi.transpose();
        sh.acon(16 + j, NV + j) = S(1);
        sh.dcon[16 + j] = -S(p.center[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < 16; ++j) sh.acon(32, NV + j) = S(-1);
    sh.dcon[32] = S(p.radius);
    if (has_u)
        for (int i = 0; i < NCON; ++i) sh.acon(i, sh.nx - 1) -= S(1);

    sh.aeq = RMatT<S>::Zero(NEQ, sh.nx);
    sh.beq = RVecT<S>::Zero(NEQ);
    const auto& e = herm_basis<S>();
    for (int k = 0; k < NV; ++k) sh.aeq(0, k) = std::real(e[k].trace());
    sh.beq[0] = S(1);
    const Mat paulis[3] = {pauli_x(), pauli_y(), pauli_z()};
    for (int r = 0; r < 3; ++r) {
        const CMatT<S> op =
            tensor(paulis[r], Mat::Identity(2, 2)).template cast<std::complex<S>>();
        for (int k = 0; k < NV; ++k) sh.aeq(1 + r, k) = std::real((op * e[k]).trace());
        const CMatT<S> sa = p.sigma_bar_a.template cast<std::complex<S>>();
        sh.beq[1 + r] =
            std::real((paulis[r].template cast<std::complex<S>>() * sa).trace());
    }
    return sh;
}

template <typename S>
CMatT<S> psd_block(const Shape<S>& sh, const RVecT<S>& x) {
    CMatT<S> m = unvec_herm<S>(RVecT<S>(x.head(NV)));
    if (sh.has_u) m -= x[sh.nx - 1] * CMatT<S>::Identity(4, 4);
    return m;
}

template <typename S>
struct Eval {
    bool interior = false;
    S barrier = std::numeric_limits<S>::infinity();
    CMatT<S> m;
    CMatT<S> minv;
    RVecT<S> mevals;
    CMatT<S> mevecs;
    RVecT<S> con;
    RVecT<S> grad; // of the barrier
    RMatT<S> hess;
};

template <typename S>
Eval<S> eval_barrier(const Shape<S>& sh, const RVecT<S>& x, bool need_deriv) {
    Eval<S> ev;
    ev.m = psd_block(sh, x);
    Eigen::SelfAdjointEigenSolver<CMatT<S>> es(ev.m);
    if (es.info() != Eigen::Success) return ev;
    ev.mevals = es.eigenvalues();
    ev.mevecs = es.eigenvectors();
    if (ev.mevals.minCoeff() <= S(0)) return ev;
    ev.con = sh.acon * x + sh.dcon;
    if (ev.con.minCoeff() <= S(0)) return ev;

    ev.interior = true;
    ev.barrier = S(0);
    for (int i = 0; i < 4; ++i) ev.barrier -= std::log(ev.mevals[i]);
    for (int i = 0; i < NCON; ++i) ev.barrier -= std::log(ev.con[i]);
    if (!need_deriv) return ev;

    ev.minv = ev.mevecs * ev.mevals.cwiseInverse().asDiagonal() * ev.mevecs.adjoint();
    ev.minv = symm<S>(ev.minv);

    const auto& e = herm_basis<S>();
    std::array<CMatT<S>, NV> pk;
    for (int k = 0; k < NV; ++k) pk[k] = ev.minv * e[k];

    ev.grad = RVecT<S>::Zero(sh.nx);
    ev.hess = RMatT<S>::Zero(sh.nx, sh.nx);
    for (int k = 0; k < NV; ++k) ev.grad[k] = -std::real(pk[k].trace());
    for (int k = 0; k < NV; ++k)
        for (int l = k; l < NV; ++l) {
            const S v = std::real((pk[k] * pk[l]).trace());
            ev.hess(k, l) = v;
            ev.hess(l, k) = v;
        }
    if (sh.has_u) {
        const int iu = sh.nx - 1;
        ev.grad[iu] = std::real(ev.minv.trace());
        const CMatT<S> minv2 = ev.minv * ev.minv;
        ev.hess(iu, iu) = std::real(minv2.trace());
        for (int k = 0; k < NV; ++k) {
            const S v = -std::real((minv2 * e[k]).trace());
            ev.hess(iu, k) = v;
            ev.hess(k, iu) = v;
        }
    }
    for (int i = 0; i < NCON; ++i) {
        const S inv = S(1) / ev.con[i];
        ev.grad.noalias() -= inv * sh.acon.row(i).transpose();
        ev.hess.noalias() += (inv * inv) * sh.acon.row(i).transpose() * sh.acon.row(i);
    }
    return ev;
}

// Barrier change relative to a baseline value, +inf outside the interior.
template <typename S>
S barrier_delta(const Shape<S>& sh, const RVecT<S>& x, S base) {
    const Eval<S> ev = eval_barrier<S>(sh, x, false);
    if (!ev.interior) return std::numeric_limits<S>::infinity();
    return ev.barrier - base;
}

// Norm of the centrality residual projected off the equality rows,
// || P(c + grad F(x)/t) ||.  Every term is O(1), so unlike the Newton
// decrement this stays measurable at t ~ 1e10, and it is exactly the
// residual that enters the dual bound's slop term.
template <typename S>
S centrality_residual(const Shape<S>& sh, S t, const RVecT<S>& c, const Eval<S>& ev) {
    const RVecT<S> xi0 = c + ev.grad / t;
    const RMatT<S> aat = sh.aeq * sh.aeq.transpose();
    const RVecT<S> y = aat.ldlt().solve(sh.aeq * xi0);
    return (xi0 - sh.aeq.transpose() * y).norm();
}

template <typename S>
struct NewtonExit {
    Eval<S> ev; // at the exit point
    S decrement = S(0);
    S xi_norm = std::numeric_limits<S>::infinity();
};

// Minimise t c.x + barrier over Aeq x = beq from a strictly interior x.
// With xi_target > 0 the loop is driven by the centrality residual instead of
// the (noise-prone) decrement, and returns the best point seen by that metric.
template <typename S>
NewtonExit<S> newton_at_t(const Shape<S>& sh, S t, const RVecT<S>& c, RVecT<S>& x,
                          S dec_target, int max_steps, S xi_target = S(-1)) {
    NewtonExit<S> out;
    const int n = sh.nx;
    const bool track_xi = xi_target > S(0);
    RVecT<S> x_best = x;
    int since_best = 0;
    for (int step = 0; step < max_steps; ++step) {
        Eval<S> ev = eval_barrier<S>(sh, x, true);
        if (!ev.interior) throw numeric_error("ipm: iterate left the interior");
        const RVecT<S> gpsi = t * c + ev.grad;

        if (track_xi) {
            const S xi_n = centrality_residual<S>(sh, t, c, ev);
            if (ipm_debug())
                std::fprintf(stderr, "[ipm]   step=%d xi=%.3e dec_prev=%.3e\n", step,
                             static_cast<double>(xi_n),
                             static_cast<double>(out.decrement));
            if (xi_n < out.xi_norm) {
                out.xi_norm = xi_n;
                out.ev = ev;
                x_best = x;
                since_best = 0;
            } else if (out.decrement > S(0.25)) {
                since_best = 0; // still damped: xi may legitimately wander
            } else if (++since_best >= 4) {
                break; // centrality stopped improving: float floor reached
            }
            if (out.xi_norm <= xi_target) break;
        }

        // Jacobi scaling keeps the KKT solve accurate: the barrier Hessian's
        // diagonal spans ~20 orders of magnitude near the boundary.
        RVecT<S> dscale(n);
        for (int i = 0; i < n; ++i)
            dscale[i] = S(1) / std::sqrt(std::max(ev.hess(i, i), S(1e-300)));
        RMatT<S> kkt = RMatT<S>::Zero(n + NEQ, n + NEQ);
        kkt.topLeftCorner(n, n) = dscale.asDiagonal() * ev.hess * dscale.asDiagonal();
        kkt.topRightCorner(n, NEQ) = dscale.asDiagonal() * sh.aeq.transpose();
        kkt.bottomLeftCorner(NEQ, n) = sh.aeq * dscale.asDiagonal();
        RVecT<S> rhs(n + NEQ);
        rhs.head(n) = -(dscale.asDiagonal() * gpsi);
        rhs.tail(NEQ) = sh.beq - sh.aeq * x;

        RVecT<S> sol = kkt.partialPivLu().solve(rhs);
        if (!sol.allFinite()) sol = kkt.fullPivLu().solve(rhs);
        if (!sol.allFinite()) throw numeric_error("ipm: singular KKT system");
        const RVecT<S> dx = dscale.asDiagonal() * sol.head(n);

        const S dec2 = std::max(S(0), S(-gpsi.dot(dx)));
        out.decrement = std::sqrt(dec2);
        if (!track_xi) {
            out.ev = ev;
            if (out.decrement <= dec_target) return out;
        }

        // fraction to boundary: psd block
        S eta = S(1);
        const CMatT<S> dm = psd_block<S>(sh, RVecT<S>(x + dx)) - ev.m;
        const CMatT<S> isqrt = ev.mevecs *
                               ev.mevals.cwiseSqrt().cwiseInverse().asDiagonal() *
                               ev.mevecs.adjoint();
        Eigen::SelfAdjointEigenSolver<CMatT<S>> ws(CMatT<S>(isqrt * dm * isqrt.adjoint()));
        const S wmin = ws.eigenvalues().minCoeff();
        if (wmin < S(0)) eta = std::min(eta, S(-0.995) / wmin);
        // linear cone constraints
        const RVecT<S> dcon = sh.acon * dx;
        for (int i = 0; i < NCON; ++i)
            if (dcon[i] < S(0)) eta = std::min(eta, S(-0.995) * ev.con[i] / dcon[i]);

        if (out.decrement > S(0.25)) {
            // Damped phase: Armijo on the displacement form of psi.  The
            // linear term is accumulated as t*eta*(c.dx) so its float noise
            // stays far below the decrease demanded while the decrement is
            // large; evaluating t*c.x directly (~1e11) would hide it.
            const S cdx = c.dot(dx);
            bool stalled = false;
            int halvings = 0;
            while (t * eta * cdx +
                       barrier_delta<S>(sh, RVecT<S>(x + eta * dx), ev.barrier) >
                   S(-0.01) * eta * dec2) {
                eta *= S(0.5);
                if (++halvings > 60) {
                    stalled = true; // numerical limit; bounds stay valid
                    break;
                }
            }
            if (stalled) break;
        }
        // Below 0.25 the full (boundary-capped) step is safe by
        // self-concordance; psi cannot be measured reliably there.
        x += eta * dx;
    }
    if (track_xi) {
        x = x_best;
        if (out.xi_norm == std::numeric_limits<S>::infinity()) {
            Eval<S> ev = eval_barrier<S>(sh, x, true);
            if (!ev.interior) throw numeric_error("ipm: iterate left the interior");
            out.ev = ev;
        }
        return out;
    }
    // steps exhausted: report the state at the current point
    Eval<S> ev = eval_barrier<S>(sh, x, true);
    if (!ev.interior) throw numeric_error("ipm: iterate left the interior");
    out.ev = ev;
    return out;
}

// Certified lower bound on min c.x over the cone-feasible, Aeq-respecting set,
// from the (approximately) central point summarised in `ev`.  Validity only
// needs the dual candidate to lie in the dual cone; the residual it leaves in
// the stationarity equation is charged against a norm bound on the primal.
template <typename S>
S dual_bound(const Shape<S>& sh, const RVecT<S>& c, const Eval<S>& ev, S t,
             S x_norm_bound) {
    CMatT<S> zpsd = symm<S>(ev.minv / t);
    Eigen::SelfAdjointEigenSolver<CMatT<S>> zs(zpsd);
    const S zmin = zs.eigenvalues().minCoeff();
    if (zmin < S(0)) zpsd -= zmin * CMatT<S>::Identity(4, 4); // keep z in the cone
    const RVecT<S> zcon = (t * ev.con).cwiseInverse();

    const auto& e = herm_basis<S>();
    RVecT<S> btz = sh.acon.transpose() * zcon;
    for (int k = 0; k < NV; ++k) btz[k] += std::real((zpsd * e[k]).trace());
    if (sh.has_u) btz[sh.nx - 1] -= std::real(zpsd.trace());

    const RVecT<S> resid0 = c - btz;
    const RMatT<S> aat = sh.aeq * sh.aeq.transpose();
    const RVecT<S> y = aat.ldlt().solve(sh.aeq * resid0);
    const RVecT<S> xi = resid0 - sh.aeq.transpose() * y;

    if (ipm_debug())
        std::fprintf(stderr, "[ipm] dual: t=%.3e |xi|=%.3e by=%.9e dz=%.9e slop=%.3e\n",
                     static_cast<double>(t), static_cast<double>(xi.norm()),
                     static_cast<double>(sh.beq.dot(y)),
                     static_cast<double>(sh.dcon.dot(zcon)),
                     static_cast<double>(xi.norm() * x_norm_bound));
    return sh.beq.dot(y) - sh.dcon.dot(zcon) - xi.norm() * x_norm_bound;
}

// Build slacks around a strictly ball-interior sigma.
template <typename S>
RVecT<S> main_start(const Shape<S>& sh, const IpmProblem& p, const Mat& sigma0) {
    RVecT<S> x = RVecT<S>::Zero(sh.nx);
    const CMatT<S> s0 = sigma0.template cast<std::complex<S>>();
    x.head(NV) = vec_herm<S>(s0);
    RVecT<S> d(16);
    for (int j = 0; j < 16; ++j) {
        const CMatT<S> gj = p.gamma[static_cast<std::size_t>(j)].template cast<std::complex<S>>();
        d[j] = std::real((gj * s0).trace()) - S(p.center[static_cast<std::size_t>(j)]);
    }
    const S slack = sh.radius - d.cwiseAbs().sum();
    if (slack <= S(0)) throw numeric_error("ipm: start point is not strictly ball-interior");
    for (int j = 0; j < 16; ++j) x[NV + j] = std::abs(d[j]) + slack / S(32);
    return x;
}

} // namespace

IpmProblem make_ipm_problem(const Bb84Setup& setup, const FeasibleSpec& spec) {
    IpmProblem p;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            p.gamma[static_cast<std::size_t>(4 * a + b)] =
                tensor(setup.alice[static_cast<std::size_t>(a)],
                       setup.bob[static_cast<std::size_t>(b)]);
    p.center = spec.center;
    p.radius = spec.radius;
    p.sigma_bar_a = spec.sigma_bar_a;
    return p;
}

IpmSolution ipm_minimize(const IpmProblem& p, const Mat& grad, const Mat& sigma0,
                         double gap_req) {
    using L = long double;
    const Shape<double> shd = make_shape<double>(p, false);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(shd.nx);
    c.head(NV) = vec_herm<double>(grad.cast<std::complex<double>>());

    // nu/t_stop is the centering offset of the exact central point; pushing t
    // past the precision balance would only grow the certificate slop.
    double t_bal = std::sqrt(kNu / kSlopPerT);
    if (const char* s = std::getenv("VLQKD_IPM_TBAL")) t_bal = std::atof(s);
    const double t_stop = std::min(t_bal, kNu / (0.25 * gap_req));
    // Feasible points satisfy |x| <= sqrt(1 + radius^2) <= sqrt(5): unit
    // Frobenius for the state block, slacks summing to at most the radius.
    const double x_norm_bound = 2.5;
    const double xi_target = 0.25 * gap_req / x_norm_bound;

    Eigen::VectorXd x = main_start<double>(shd, p, sigma0);
    double t = 1.0;
    while (true) {
        newton_at_t<double>(shd, t, c, x, 0.05, 40);
        if (t >= t_stop) break; // last double block runs at t_stop itself,
        t = std::min(t * 10.0, t_stop); // so the refinement starts jump-free
    }

    // final centering + certificate in extended precision
    const Shape<L> shl = make_shape<L>(p, false);
    RVecT<L> xl = x.cast<L>();
    const RVecT<L> cl = c.cast<L>();
    const NewtonExit<L> exit =
        newton_at_t<L>(shl, static_cast<L>(t_stop), cl, xl, L(0.05), 80,
                       static_cast<L>(xi_target));
    if (ipm_debug())
        std::fprintf(stderr, "[ipm] final t=%.3e xi=%.3e\n", t_stop,
                     static_cast<double>(exit.xi_norm));

    IpmSolution sol;
    const CMatT<L> sig = symm<L>(psd_block<L>(shl, xl));
    sol.sigma = sig.cast<cplx>();
    sol.s = xl.segment(NV, NS).cast<double>();
    sol.primal = std::real((grad * sol.sigma).trace());
    sol.dual_lower = static_cast<double>(
        dual_bound<L>(shl, cl, exit.ev, static_cast<L>(t_stop), static_cast<L>(x_norm_bound)));
    return sol;
}

Phase1Result ipm_phase1(const IpmProblem& p, double target_margin) {
    using L = long double;
    const Shape<double> shd = make_shape<double>(p, true);
    const int iu = shd.nx - 1;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(shd.nx);
    c[iu] = -1.0; // min -u

    // analytic start satisfying the equalities exactly
    Eigen::SelfAdjointEigenSolver<Mat> ms(p.sigma_bar_a);
    if (ms.eigenvalues().minCoeff() <= 0.0)
        throw numeric_error("ipm: sigma_bar_a must be positive definite");
    const Mat sigma0 = tensor(p.sigma_bar_a, Mat::Identity(2, 2) * 0.5);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(shd.nx);
    x.head(NV) = vec_herm<double>(sigma0.cast<std::complex<double>>());
    Eigen::VectorXd d(16);
    for (int j = 0; j < 16; ++j)
        d[j] = std::real((p.gamma[static_cast<std::size_t>(j)] * sigma0).trace()) -
               p.center[static_cast<std::size_t>(j)];
    for (int j = 0; j < 16; ++j) x[NV + j] = std::abs(d[j]) + 0.1;
    const double w0 = p.radius - x.segment(NV, NS).sum();
    const double lmin0 = ms.eigenvalues().minCoeff() * 0.5;
    x[iu] = std::min({lmin0, 0.1, w0}) - 0.1;

    const double t_stop = std::sqrt(kNu / kSlopPerT);
    double t = 1.0;
    bool early = false;
    while (true) {
        newton_at_t<double>(shd, t, c, x, 0.05, 40);
        if (x[iu] >= target_margin) {
            early = true; // strictly interior point found
            break;
        }
        if (t >= t_stop) break;
        t = std::min(t * 10.0, t_stop);
    }

    const Shape<L> shl = make_shape<L>(p, true);
    RVecT<L> xl = x.cast<L>();
    const RVecT<L> cl = c.cast<L>();
    NewtonExit<L> exit;
    if (early || xl[iu] >= static_cast<L>(target_margin)) {
        exit.ev = eval_barrier<L>(shl, xl, true);
        if (!exit.ev.interior) throw numeric_error("ipm: iterate left the interior");
    } else {
        exit = newton_at_t<L>(shl, static_cast<L>(t_stop), cl, xl, L(0.05), 80, L(1e-11));
    }

    Phase1Result res;
    res.u_achieved = static_cast<double>(xl[iu]);
    // u* <= -(certified lower bound of -u)
    res.u_upper = static_cast<double>(
        -dual_bound<L>(shl, cl, exit.ev, static_cast<L>(t_stop), L(16)));
    res.sigma = (symm<L>(psd_block<L>(shl, xl)) +
                 xl[iu] * CMatT<L>::Identity(4, 4))
                    .cast<cplx>();
    res.feasible = res.u_achieved > 0.0;
    return res;
}

} // namespace vlqkd::detail
