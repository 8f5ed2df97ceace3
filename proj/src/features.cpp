#include "avar/features.hpp"

#include <string>

#include "avar/error.hpp"

namespace avar {

namespace {

void check_rank(const Matrix& phi) {
    if (phi.rows() == 0 || phi.cols() == 0)
        throw Error(ErrorKind::DimensionMismatch, "empty feature matrix");
    Eigen::ColPivHouseholderQR<Matrix> qr(phi);
    if (qr.rank() < phi.cols())
        throw Error(ErrorKind::RankDeficient, "feature matrix has rank " + std::to_string(qr.rank()) +
                                                  " < " + std::to_string(phi.cols()));
}

}  // namespace

FeatureMatrix::FeatureMatrix(Matrix phi) : phi_(std::move(phi)) {
    check_rank(phi_);
    for (Index s = 0; s < phi_.rows(); ++s)
        if (phi_.row(s).norm() > 1.0 + kNormTolerance)
            throw Error(ErrorKind::RowNormViolation,
                        "feature row " + std::to_string(s) + " has norm > 1");
}

FeatureMatrix::FeatureMatrix(Matrix phi, double scale) : phi_(std::move(phi)), scale_(scale) {}

FeatureMatrix FeatureMatrix::rescaled(Matrix phi) {
    check_rank(phi);
    const double max_norm = phi.rowwise().norm().maxCoeff();
    if (max_norm <= 1.0 + kNormTolerance) return FeatureMatrix(std::move(phi), 1.0);
    return FeatureMatrix(phi / max_norm, 1.0 / max_norm);
}

FeatureMatrix FeatureMatrix::identity(Index n_states) {
    return FeatureMatrix(Matrix::Identity(n_states, n_states));
}

ProjectionE build_projection(const FeatureMatrix& phi) {
    const Index d = phi.dim();
    const Index n = phi.n_states();
    const Vector ones = Vector::Ones(n);
    const Vector theta = phi.values().colPivHouseholderQr().solve(ones);
    const double resid = (phi.values() * theta - ones).cwiseAbs().maxCoeff();

    ProjectionE proj;
    if (resid < 1e-9) {
        proj.theta_e = theta;
        proj.pi_2e = Matrix::Identity(d, d) - theta * theta.transpose() / theta.squaredNorm();
        proj.basis = linalg::orthonormal_complement(theta, d);
    } else {
        proj.pi_2e = Matrix::Identity(d, d);
        proj.basis = Matrix::Identity(d, d);
    }
    return proj;
}

}  // namespace avar
