#include "avar/lfa.hpp"

#include <algorithm>
#include <cmath>

#include "avar/error.hpp"

namespace avar {

LFAState LFAState::zero(Index dim) {
    LFAState st;
    st.theta = Vector::Zero(dim);
    return st;
}

LFAState lfa_step(const LFAState& st, Index x, Index x_next, const Vector& f,
                  const FeatureMatrix& phi, const ProjectionE& proj, const StepSchedule& sched,
                  const SAConstants& c) {
    const Index n = phi.n_states();
    if (f.size() != n || st.theta.size() != phi.dim() || proj.dim() != phi.dim())
        throw Error(ErrorKind::DimensionMismatch, "f, Phi, projection and theta disagree");
    if (x < 0 || x >= n || x_next < 0 || x_next >= n)
        throw Error(ErrorKind::InvalidState, "state index out of range");
    const double alpha = step_size(sched, st.k);
    const double a3 = c.c3 * alpha;
    const double fx = f(x);
    const double vx = phi.row(x).dot(st.theta);
    const double delta = fx - st.f_bar + phi.row(x_next).dot(st.theta) - vx;

    LFAState out;
    out.k = st.k + 1;
    out.f_bar = st.f_bar + c.c1 * alpha * (fx - st.f_bar);
    out.theta = st.theta + (alpha * delta) * (proj.pi_2e * phi.row(x).transpose());
    out.v_tilde = st.v_tilde + c.c2 * alpha * (vx - st.v_tilde);
    const double term =
        fx * vx + vx * fx - fx * st.v_tilde - st.v_tilde * fx - fx * fx + fx * st.f_bar;
    out.kappa = (1.0 - a3) * st.kappa + a3 * term;
    return out;
}

LFATrace run_lfa(const TransitionMatrix& p, const Vector& f, const FeatureMatrix& phi,
                 const ProjectionE& proj, const StepSchedule& sched, const SAConstants& c,
                 std::int64_t n, std::uint64_t seed, const RunOptions& opts) {
    if (f.size() != p.n_states() || phi.n_states() != p.n_states())
        throw Error(ErrorKind::DimensionMismatch, "f or Phi does not match P");
    c.validate();
    check_first_step(sched, c.c3);
    validate_chain(p).require();
    Trace<LFAState> tr;
    if (opts.record_scalars) tr.scalars.reserve(static_cast<std::size_t>(n));
    std::vector<std::int64_t> cps = opts.checkpoints;
    std::sort(cps.begin(), cps.end());
    auto cp = cps.begin();
    LFAState st = LFAState::zero(phi.dim());
    while (cp != cps.end() && *cp <= 0) {
        if (*cp == 0) tr.snapshots.push_back(st);
        ++cp;
    }
    ChainSampler sampler(p, seed);
    Index x = initial_state(sampler, p, opts.start);
    for (std::int64_t k = 0; k < n; ++k) {
        const Index y = sampler.next(x);
        st = lfa_step(st, x, y, f, phi, proj, sched, c);
        x = y;
        const std::int64_t done = k + 1;
        if (opts.record_scalars) tr.scalars.push_back({st.k, st.f_bar, st.v_tilde, st.kappa});
        if (proj.theta_e)
            tr.max_projection_residual =
                std::max(tr.max_projection_residual,
                         std::abs(st.theta.dot(*proj.theta_e)) / std::max(1.0, st.theta.norm()));
        bool snap = opts.record_every > 0 && done % opts.record_every == 0;
        while (cp != cps.end() && *cp == done) {
            snap = true;
            ++cp;
        }
        if (snap) tr.snapshots.push_back(st);
    }
    tr.final_state = std::move(st);
    return tr;
}

double delta_two(const TransitionMatrix& p, const StationaryDistribution& pi,
                 const FeatureMatrix& phi, const ProjectionE& proj) {
    if (proj.subspace_dim() == 0) throw Error(ErrorKind::EmptySubspace, "E = {0}");
    const Index n = p.n_states();
    const Matrix m = phi.values().transpose() * pi.d_pi() *
                     (Matrix::Identity(n, n) - p.probs()) * phi.values();
    const double delta = linalg::min_restricted_quadratic(m, proj.basis);
    if (!(delta > 0.0))
        throw Error(ErrorKind::NonPositiveMargin, "delta_two = " + std::to_string(delta));
    return delta;
}

ThetaStar theta_star(const TransitionMatrix& p, const StationaryDistribution& pi,
                     const FeatureMatrix& phi, const ProjectionE& proj, const Vector& f) {
    const Index n = p.n_states();
    if (f.size() != n || phi.n_states() != n)
        throw Error(ErrorKind::DimensionMismatch, "f or Phi does not match P");
    const Matrix& ph = phi.values();
    const double f_bar = pi.mean(f);
    ThetaStar ts;
    ts.theta = Vector::Zero(phi.dim());
    const Matrix& b = proj.basis;
    if (b.cols() > 0) {
        // theta = B y with B^T Phi^T D (I - P) Phi B y = B^T Phi^T D (f - f_bar 1).
        const Matrix lhs = b.transpose() * ph.transpose() * pi.d_pi() *
                           (Matrix::Identity(n, n) - p.probs()) * ph * b;
        const Vector g = f.array() - f_bar;
        const Vector rhs = b.transpose() * ph.transpose() * pi.pi.cwiseProduct(g);
        Eigen::FullPivLU<Matrix> lu(lhs);
        if (!lu.isInvertible())
            throw Error(ErrorKind::SingularSystem, "projected Poisson system is singular");
        ts.theta = b * lu.solve(rhs);
    }
    const Vector v = ph * ts.theta;
    ts.v_tilde = pi.mean(v);
    const Vector term =
        2.0 * f.cwiseProduct(v) - 2.0 * ts.v_tilde * f - f.cwiseProduct(f) + f_bar * f;
    ts.kappa_star = pi.mean(term);
    return ts;
}

double min_approx_error(const TransitionMatrix& p, const StationaryDistribution& pi,
                        const FeatureMatrix& phi, const Vector& f) {
    const Index n = p.n_states();
    const PoissonSolution sol = solve_poisson(p, f, pi);
    Matrix basis(n, phi.dim() + 1);
    basis << phi.values(), Vector::Ones(n);
    const Vector w = pi.pi.cwiseSqrt();
    const Matrix a = w.asDiagonal() * basis;
    const Vector rhs = w.cwiseProduct(sol.v_star);
    const Vector z = a.completeOrthogonalDecomposition().solve(rhs);
    return (a * z - rhs).norm();
}

ApproxErrorCheck approx_error_check(double kappa_star, double kappa, double eps, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw Error(ErrorKind::InvalidLambda, "lambda must lie in (0, 1)");
    ApproxErrorCheck r;
    r.lhs = (kappa_star - kappa) * (kappa_star - kappa);
    r.rhs = 16.0 * eps * eps / (1.0 - lambda * lambda);
    r.holds = r.lhs <= r.rhs;
    return r;
}

Vector stack(const LFAState& st) {
    const Index d = st.theta.size();
    Vector out(d + 3);
    out(0) = st.f_bar;
    out.segment(1, d) = st.theta;
    out(d + 1) = st.v_tilde;
    out(d + 2) = st.kappa;
    return out;
}

}  // namespace avar
