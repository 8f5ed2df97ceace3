#include "avar/markov.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "avar/error.hpp"

namespace avar {

namespace {

std::vector<Index> reachable(const Matrix& probs, bool reverse) {
    const Index n = probs.rows();
    std::vector<Index> level(n, -1);
    std::queue<Index> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const Index u = q.front();
        q.pop();
        for (Index v = 0; v < n; ++v) {
            const double w = reverse ? probs(v, u) : probs(u, v);
            if (w > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                q.push(v);
            }
        }
    }
    return level;
}

void check_size(const TransitionMatrix& p, Index n, const char* what) {
    if (n != p.n_states())
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + " has " + std::to_string(n) + " entries, chain has " +
                        std::to_string(p.n_states()) + " states");
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.rows() != probs_.cols())
        throw Error(ErrorKind::DimensionMismatch, "transition matrix must be square and non-empty");
    for (Index i = 0; i < probs_.rows(); ++i) {
        const auto row = probs_.row(i);
        const bool in_range = (row.array() >= 0.0).all() && (row.array() <= 1.0).all();
        if (!in_range || !row.allFinite() || std::abs(row.sum() - 1.0) > kRowTolerance)
            throw Error(ErrorKind::NonStochastic, "row " + std::to_string(i) + " is not a distribution");
    }
}

void ChainReport::require(bool allow_periodic) const {
    if (!stochastic) {
        std::string rows;
        for (Index r : bad_rows) rows += (rows.empty() ? "" : ",") + std::to_string(r);
        throw Error(ErrorKind::NonStochastic, "bad rows: " + rows);
    }
    if (!irreducible) {
        std::string states;
        for (Index s : unreachable) states += (states.empty() ? "" : ",") + std::to_string(s);
        throw Error(ErrorKind::Reducible, "states not mutually reachable with state 0: " + states);
    }
    if (!aperiodic && !allow_periodic)
        throw Error(ErrorKind::Periodic, "chain has period " + std::to_string(period));
}

ChainReport validate_chain(const Matrix& probs) {
    ChainReport rep;
    const Index n = probs.rows();
    if (n == 0 || n != probs.cols()) {
        rep.stochastic = false;
        return rep;
    }
    for (Index i = 0; i < n; ++i) {
        const auto row = probs.row(i);
        const bool in_range = (row.array() >= 0.0).all() && (row.array() <= 1.0).all();
        if (!in_range || !row.allFinite() ||
            std::abs(row.sum() - 1.0) > TransitionMatrix::kRowTolerance)
            rep.bad_rows.push_back(i);
    }
    rep.stochastic = rep.bad_rows.empty();
    if (!rep.stochastic) return rep;

    const auto fwd = reachable(probs, false);
    const auto bwd = reachable(probs, true);
    for (Index s = 0; s < n; ++s)
        if (fwd[s] < 0 || bwd[s] < 0) rep.unreachable.push_back(s);
    rep.irreducible = rep.unreachable.empty();
    if (!rep.irreducible) return rep;

    // Period = gcd over edges u->v of level(u) + 1 - level(v).
    Index g = 0;
    for (Index u = 0; u < n; ++u)
        for (Index v = 0; v < n; ++v)
            if (probs(u, v) > 0.0) g = std::gcd(g, std::abs(fwd[u] + 1 - fwd[v]));
    rep.period = g;
    rep.aperiodic = (g == 1);
    return rep;
}

ChainReport validate_chain(const TransitionMatrix& p) { return validate_chain(p.probs()); }

StateFunction::StateFunction(Matrix values) : values_(std::move(values)) {
    if (values_.size() == 0) throw Error(ErrorKind::DimensionMismatch, "empty state function");
    f_max_ = values_.cwiseAbs().maxCoeff();
}

StateFunction::StateFunction(const Vector& values) : StateFunction(Matrix(values)) {}

StationaryDistribution stationary_distribution(const TransitionMatrix& p, OracleOptions opts) {
    validate_chain(p).require(opts.allow_periodic);
    const Index n = p.n_states();
    // (P^T - I) pi = 0 with the last equation replaced by 1^T pi = 1.
    Matrix a = p.probs().transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "stationary system is singular");
    Vector pi = lu.solve(rhs);
    if (!pi.allFinite() || (pi.array() <= 0.0).any())
        throw Error(ErrorKind::SingularSystem, "stationary solve produced a non-positive entry");
    pi /= pi.sum();
    return {pi};
}

PoissonSolution solve_poisson(const TransitionMatrix& p, const Vector& f,
                              const StationaryDistribution& pi) {
    check_size(p, f.size(), "f");
    check_size(p, pi.pi.size(), "pi");
    const Index n = p.n_states();
    const double f_bar = pi.mean(f);
    // Bordered system [[I - P, 1], [1^T, 0]] [V; lambda] = [f - fbar; 0].
    Matrix a(n + 1, n + 1);
    a.topLeftCorner(n, n) = Matrix::Identity(n, n) - p.probs();
    a.topRightCorner(n, 1).setOnes();
    a.bottomLeftCorner(1, n).setOnes();
    a(n, n) = 0.0;
    Vector rhs(n + 1);
    rhs.head(n) = f.array() - f_bar;
    rhs(n) = 0.0;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "Poisson system is singular");
    const Vector sol = lu.solve(rhs);
    if (!sol.allFinite()) throw Error(ErrorKind::SingularSystem, "Poisson solve is not finite");
    return {sol.head(n), f_bar};
}

double poisson_residual(const TransitionMatrix& p, const Vector& f,
                        const StationaryDistribution& pi, const Vector& v) {
    const Vector lhs = f.array() - pi.mean(f);
    const Vector rhs = v - p.probs() * v;
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

double kappa_from_value(const Vector& f, const StationaryDistribution& pi, const Vector& v) {
    const double f_bar = pi.mean(f);
    const double v_bar = pi.mean(v);
    const Vector term = 2.0 * f.cwiseProduct(v) - 2.0 * v_bar * f - f.cwiseProduct(f) + f_bar * f;
    return pi.mean(term);
}

double exact_kappa(const TransitionMatrix& p, const Vector& f, const StationaryDistribution& pi,
                   KappaMethod method) {
    const PoissonSolution sol = solve_poisson(p, f, pi);
    const Vector g = f.array() - sol.f_bar;
    if (method == KappaMethod::Poisson)
        return 2.0 * pi.mean(g.cwiseProduct(sol.v_star)) - pi.mean(g.cwiseProduct(g));
    const Vector pv = p.probs() * sol.v_star;
    return pi.mean(sol.v_star.cwiseProduct(sol.v_star)) - pi.mean(pv.cwiseProduct(pv));
}

double exact_kappa_truncated(const TransitionMatrix& p, const Vector& f,
                             const StationaryDistribution& pi, std::int64_t n_lags) {
    check_size(p, f.size(), "f");
    if (n_lags < 0) throw Error(ErrorKind::InvalidConfig, "number of lags must be non-negative");
    const Vector g = f.array() - pi.mean(f);
    const Vector pg = pi.pi.cwiseProduct(g);
    double total = pg.dot(g);
    Vector w = g;
    for (std::int64_t j = 1; j <= n_lags; ++j) {
        w = p.probs() * w;
        total += 2.0 * pg.dot(w);
    }
    return total;
}

Matrix exact_covariance(const TransitionMatrix& p, const StateFunction& f,
                        const StationaryDistribution& pi) {
    check_size(p, f.n_states(), "f");
    const Index d = f.dim();
    Matrix g(p.n_states(), d);
    Matrix v(p.n_states(), d);
    for (Index i = 0; i < d; ++i) {
        const PoissonSolution sol = solve_poisson(p, f.column(i), pi);
        g.col(i) = f.column(i).array() - sol.f_bar;
        v.col(i) = sol.v_star;
    }
    const Matrix dg = pi.pi.asDiagonal() * g;
    const Matrix cross = dg.transpose() * v;
    Matrix c = cross + cross.transpose() - dg.transpose() * g;
    return 0.5 * (c + c.transpose());
}

double delta_one(const TransitionMatrix& p, const StationaryDistribution& pi) {
    const Index n = p.n_states();
    if (n < 2) throw Error(ErrorKind::EmptySubspace, "orthogonal complement of 1 is {0}");
    const Matrix m = pi.pi.asDiagonal() * (Matrix::Identity(n, n) - p.probs());
    const Matrix basis = linalg::orthonormal_complement(Vector::Ones(n), n);
    const double delta = linalg::min_restricted_quadratic(m, basis);
    if (!(delta > 0.0))
        throw Error(ErrorKind::NonPositiveMargin, "delta_one = " + std::to_string(delta));
    return delta;
}

ChainSampler::ChainSampler(const TransitionMatrix& p, std::uint64_t seed)
    : n_(p.n_states()), cdf_(p.n_states(), p.n_states()), gen_(seed) {
    for (Index i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n_; ++j) {
            acc += p(i, j);
            cdf_(j, i) = acc;
        }
    }
}

double ChainSampler::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

Index ChainSampler::draw_row(const double* cdf, Index n) {
    const double u = uniform();
    for (Index j = 0; j < n; ++j)
        if (u < cdf[j]) return j;
    // Rounding left the last cumulative value below 1: take the last
    // state that carries mass.
    for (Index j = n - 1; j > 0; --j)
        if (cdf[j] > cdf[j - 1]) return j;
    return 0;
}

Index ChainSampler::next(Index x) { return draw_row(cdf_.col(x).data(), n_); }

Index ChainSampler::draw(const Vector& probs) {
    Vector cdf(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cdf.begin());
    return draw_row(cdf.data(), cdf.size());
}

Index initial_state(ChainSampler& sampler, const TransitionMatrix& p, Start start,
                    OracleOptions opts) {
    if (!start.stationary) {
        if (start.state < 0 || start.state >= p.n_states())
            throw Error(ErrorKind::InvalidStart, "start state " + std::to_string(start.state) +
                                                     " out of range");
        return start.state;
    }
    return sampler.draw(stationary_distribution(p, opts).pi);
}

Trajectory simulate(const TransitionMatrix& p, Start start, std::int64_t n, std::uint64_t seed,
                    SimulateOptions opts) {
    if (n < 1) throw Error(ErrorKind::InvalidConfig, "trajectory length must be positive");
    if (opts.validate) validate_chain(p).require();
    ChainSampler sampler(p, seed);
    Trajectory t;
    t.seed = seed;
    t.start = start;
    t.states.reserve(static_cast<std::size_t>(n));
    Index x = initial_state(sampler, p, start, {.allow_periodic = !opts.validate});
    t.states.push_back(x);
    for (std::int64_t k = 1; k < n; ++k) {
        x = sampler.next(x);
        t.states.push_back(x);
    }
    return t;
}

}  // namespace avar
