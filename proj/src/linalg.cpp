#include "avar/linalg.hpp"

#include <cassert>

namespace avar::linalg {

Matrix orthonormal_complement(const Matrix& directions, Index dim) {
    assert(directions.rows() == dim || directions.cols() == 0);
    const Index k = directions.cols();
    if (k == 0) return Matrix::Identity(dim, dim);
    Eigen::HouseholderQR<Matrix> qr(directions);
    const Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
    return q.rightCols(dim - k);
}

double min_restricted_quadratic(const Matrix& m, const Matrix& basis) {
    assert(basis.cols() >= 1);
    const Matrix sym = 0.5 * (m + m.transpose());
    const Matrix reduced = basis.transpose() * sym * basis;
    Eigen::SelfAdjointEigenSolver<Matrix> es(reduced, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace avar::linalg
