#pragma once

#include <Eigen/Dense>

namespace avar {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Orthonormal basis (as columns) of the orthogonal complement of the column
/// span of `directions` in R^dim. `directions` may have zero columns, in which
/// case the identity is returned. Columns of `directions` must be linearly
/// independent.
Matrix orthonormal_complement(const Matrix& directions, Index dim);

/// Smallest eigenvalue of the symmetric part of `m` restricted to the span of
/// the orthonormal columns of `basis`, i.e. min over unit x in span(basis) of
/// x^T m x. Requires basis.cols() >= 1.
double min_restricted_quadratic(const Matrix& m, const Matrix& basis);

}  // namespace linalg
}  // namespace avar
