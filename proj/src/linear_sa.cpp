#include "avar/linear_sa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "avar/error.hpp"

namespace avar {

namespace {

std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

void StepSchedule::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw Error(ErrorKind::InvalidSchedule, "alpha must be positive");
    if (kind == ScheduleKind::Diminishing && !(h >= 2.0))
        throw Error(ErrorKind::InvalidSchedule, "diminishing schedule needs h >= 2");
}

double step_size(const StepSchedule& s, std::int64_t k) {
    if (s.kind == ScheduleKind::Constant) return s.alpha;
    return s.alpha / (static_cast<double>(k) + s.h);
}

void SAConstants::validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0))
        throw Error(ErrorKind::InvalidConstants, "c1, c2, c3 must be positive");
}

Vector sa_step(const Vector& theta, const UpdatePair& u, double alpha) {
    if (u.a.rows() != theta.size() || u.a.cols() != theta.size() || u.b.size() != theta.size())
        throw Error(ErrorKind::DimensionMismatch, "sa_step operands disagree in size");
    return theta + alpha * (u.a * theta + u.b);
}

UpdatePair build_update(Index x, Index x_next, const Vector& f, const FeatureMatrix& phi,
                        const SAConstants& c, const ProjectionE& proj) {
    const Index d = phi.dim();
    if (f.size() != phi.n_states() || proj.dim() != d)
        throw Error(ErrorKind::DimensionMismatch, "f, Phi and projection disagree in size");
    if (x < 0 || x >= phi.n_states() || x_next < 0 || x_next >= phi.n_states())
        throw Error(ErrorKind::InvalidState, "state index out of range");
    const Vector phi_x = phi.row(x).transpose();
    const Vector dphi = phi.row(x_next).transpose() - phi_x;
    const Vector pphi = proj.pi_2e * phi_x;
    const double fx = f(x);

    UpdatePair u{Matrix::Zero(d + 3, d + 3), Vector::Zero(d + 3)};
    u.a(0, 0) = -c.c1;
    u.a.block(1, 0, d, 1) = -pphi;
    u.a.block(1, 1, d, d) = pphi * dphi.transpose();
    u.a.block(d + 1, 1, 1, d) = c.c2 * phi_x.transpose();
    u.a(d + 1, d + 1) = -c.c2;
    u.a(d + 2, 0) = c.c3 * fx;
    u.a.block(d + 2, 1, 1, d) = 2.0 * c.c3 * fx * phi_x.transpose();
    u.a(d + 2, d + 1) = -2.0 * c.c3 * fx;
    u.a(d + 2, d + 2) = -c.c3;

    u.b(0) = c.c1 * fx;
    u.b.segment(1, d) = fx * pphi;
    u.b(d + 2) = -c.c3 * fx * fx;
    return u;
}

UpdatePair average_matrices(const TransitionMatrix& p, const StationaryDistribution& pi,
                            const Vector& f, const FeatureMatrix& phi, const SAConstants& c,
                            const ProjectionE& proj) {
    const Index d = phi.dim();
    const Index n = p.n_states();
    if (f.size() != n || phi.n_states() != n || pi.pi.size() != n || proj.dim() != d)
        throw Error(ErrorKind::DimensionMismatch, "average_matrices operands disagree in size");
    const Matrix& ph = phi.values();
    const Matrix dpi = pi.d_pi();
    const double f_bar = pi.mean(f);

    UpdatePair u{Matrix::Zero(d + 3, d + 3), Vector::Zero(d + 3)};
    u.a(0, 0) = -c.c1;
    u.a.block(1, 0, d, 1) = -proj.pi_2e * ph.transpose() * pi.pi;
    u.a.block(1, 1, d, d) =
        proj.pi_2e * ph.transpose() * dpi * (p.probs() - Matrix::Identity(n, n)) * ph;
    u.a.block(d + 1, 1, 1, d) = c.c2 * pi.pi.transpose() * ph;
    u.a(d + 1, d + 1) = -c.c2;
    u.a(d + 2, 0) = c.c3 * f_bar;
    u.a.block(d + 2, 1, 1, d) = 2.0 * c.c3 * (pi.pi.cwiseProduct(f)).transpose() * ph;
    u.a(d + 2, d + 1) = -2.0 * c.c3 * f_bar;
    u.a(d + 2, d + 2) = -c.c3;

    u.b(0) = c.c1 * f_bar;
    u.b.segment(1, d) = proj.pi_2e * ph.transpose() * pi.pi.cwiseProduct(f);
    u.b(d + 2) = -c.c3 * pi.mean(f.cwiseProduct(f));
    return u;
}

double contraction_margin(const Matrix& a, const ProjectionE& proj) {
    const Index d = proj.dim();
    if (a.rows() != d + 3 || a.cols() != d + 3)
        throw Error(ErrorKind::DimensionMismatch, "A does not match the projection dimension");
    const Index m = proj.subspace_dim();
    Matrix basis = Matrix::Zero(d + 3, m + 3);
    basis(0, 0) = 1.0;
    basis.block(1, 1, d, m) = proj.basis;
    basis(d + 1, m + 1) = 1.0;
    basis(d + 2, m + 2) = 1.0;
    return linalg::min_restricted_quadratic(-a, basis);
}

double update_norm_bound(const TransitionMatrix& p, const Vector& f, const FeatureMatrix& phi,
                         const SAConstants& c, const ProjectionE& proj) {
    double h = 1.0;
    for (Index x = 0; x < p.n_states(); ++x)
        for (Index y = 0; y < p.n_states(); ++y) {
            if (p(x, y) <= 0.0) continue;
            const UpdatePair u = build_update(x, y, f, phi, c, proj);
            Eigen::JacobiSVD<Matrix> svd(u.a);
            h = std::max({h, svd.singularValues()(0), u.b.norm()});
        }
    return h;
}

void ConstantsReport::require() const {
    if (ok()) return;
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
    throw Error(ErrorKind::InvalidConstants, msg);
}

ConstantsReport validate_constants(double delta, const SAConstants& c) {
    if (!(delta > 0.0)) throw Error(ErrorKind::NonPositiveMargin, "delta must be positive");
    const double r2 = std::numbers::sqrt2;
    ConstantsReport rep;
    rep.delta = delta;
    rep.c1_min = 1.0 / (2.0 * delta) + delta / 2.0;
    rep.c3_range = {5.0 * (5.0 - 2.0 * r2) * delta / 249.0, 5.0 * (5.0 + 2.0 * r2) * delta / 249.0};
    const double disc = 498.0 * c.c3 * delta - 17.0 * delta * delta;
    if (disc >= 0.0) {
        rep.c2_range = {c.c3 - 498.0 * c.c3 * c.c3 / (7.0 * delta) + 7.0 * delta / 498.0,
                        -3.0 * c.c3 + (5.0 / 83.0) * std::sqrt(disc)};
    } else {
        rep.c2_range = {std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()};
    }
    rep.c1_ok = c.c1 >= rep.c1_min;
    rep.c3_ok = rep.c3_range.contains(c.c3);
    rep.c2_ok = c.c2 > 0.0 && rep.c2_range.contains(c.c2);
    if (!rep.c1_ok) rep.violations.push_back("c1 >= " + fmt_num(rep.c1_min));
    if (!rep.c3_ok)
        rep.violations.push_back("c3 in [" + fmt_num(rep.c3_range.lo) + ", " +
                                 fmt_num(rep.c3_range.hi) + "]");
    if (!rep.c2_ok) {
        if (rep.c2_range.empty())
            rep.violations.push_back("c2 interval is empty for c3 = " + fmt_num(c.c3));
        else
            rep.violations.push_back("c2 in (0, inf) and [" + fmt_num(rep.c2_range.lo) + ", " +
                                     fmt_num(rep.c2_range.hi) + "]");
    }
    return rep;
}

SAConstants suggest_constants(double delta) {
    SAConstants c;
    const ConstantsReport probe = validate_constants(delta, c);
    c.c1 = probe.c1_min;
    c.c3 = probe.c3_range.mid();
    const ConstantsReport at_c3 = validate_constants(delta, c);
    const Interval c2{std::max(0.0, at_c3.c2_range.lo), at_c3.c2_range.hi};
    c.c2 = c2.mid();
    return c;
}

double eta(const SAConstants& c) {
    return std::sqrt(c.c1 * c.c1 + 5.0 + 2.0 * c.c2 * c.c2 + 10.0 * c.c3 * c.c3);
}

BoundParams variance_bound_params(double delta, const SAConstants& c, double theta_norm,
                                  double b) {
    return {delta / 20.0, eta(c), theta_norm, b};
}

BoundParams stationary_bound_params(double gamma, double c, double f_bar, double theta_norm,
                                    double b) {
    return {gamma, std::sqrt(1.0 + c * c * (1.0 + f_bar * f_bar)), theta_norm, b};
}

double stationary_c_limit(double gamma, double f_bar) {
    const double g1 = gamma - 1.0;
    const double rhs = 2.0 * (-g1 + std::sqrt(g1 * (g1 + gamma * f_bar * f_bar)));
    if (f_bar == 0.0) return std::numeric_limits<double>::infinity();
    return rhs / (f_bar * f_bar);
}

std::vector<std::string> bound_side_conditions(const BoundParams& bp, const StepSchedule& s) {
    std::vector<std::string> bad;
    const double g = bp.gamma2;
    const double h2 = bp.h_norm * bp.h_norm;
    if (s.kind == ScheduleKind::Constant) {
        if (!(s.alpha < 2.0 / g)) bad.push_back("alpha < " + fmt_num(2.0 / g));
        const double cap = 1.0 / (28.0 * bp.b * (1.0 + h2 / g));
        if (!(s.alpha < cap)) bad.push_back("alpha < " + fmt_num(cap));
    } else {
        if (!(s.alpha > 2.0 / g)) bad.push_back("alpha > " + fmt_num(2.0 / g));
        const double h_min = minimal_h(bp, s.alpha);
        if (!(s.h >= h_min)) bad.push_back("h >= " + fmt_num(h_min));
    }
    return bad;
}

double minimal_h(const BoundParams& bp, double alpha) {
    const double g = bp.gamma2;
    const double h2 = bp.h_norm * bp.h_norm;
    return std::max(1.0 + alpha * g / 2.0, 1.0 + 28.0 * bp.b * (h2 * alpha / g + alpha + 1.0 / g));
}

double bound_value(const BoundParams& bp, const StepSchedule& s, std::int64_t n) {
    const double g = bp.gamma2;
    const double h2 = bp.h_norm * bp.h_norm;
    const double a = s.alpha;
    const double nn = static_cast<double>(n);
    if (s.kind == ScheduleKind::Constant) {
        return bp.psi1() * std::pow(1.0 - g * a / 2.0, nn) + bp.psi2() * a * h2 / g +
               bp.psi2() * a;
    }
    if (!(a * g > 2.0)) return std::numeric_limits<double>::infinity();
    const double e2 = std::numbers::e * std::numbers::e;
    return bp.psi1() * std::pow(s.h / (nn + s.h), a * g / 2.0) +
           5.0 * bp.psi2() * e2 * h2 * (1.0 + g) * a * a / ((nn + s.h) * (a * g - 2.0)) +
           bp.psi2() * a / (nn + s.h);
}

double theorem_bound(const BoundParams& bp, const StepSchedule& s, std::int64_t n) {
    const auto bad = bound_side_conditions(bp, s);
    if (!bad.empty()) {
        std::string msg;
        for (const auto& v : bad) msg += (msg.empty() ? "" : "; ") + v;
        throw Error(ErrorKind::SideConditionViolated, msg);
    }
    return bound_value(bp, s, n);
}

}  // namespace avar
