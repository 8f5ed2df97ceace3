#pragma once

#include <optional>

#include "avar/linalg.hpp"

namespace avar {

/// S x d feature matrix with full column rank and rows of norm at most 1.
class FeatureMatrix {
public:
    static constexpr double kNormTolerance = 1e-12;

    /// Throws RankDeficient or RowNormViolation.
    explicit FeatureMatrix(Matrix phi);

    /// Divides every row by the largest row norm when it exceeds 1. This keeps
    /// the column span (and hence the projected fixed point) unchanged.
    static FeatureMatrix rescaled(Matrix phi);
    static FeatureMatrix identity(Index n_states);

    Index n_states() const { return phi_.rows(); }
    Index dim() const { return phi_.cols(); }
    const Matrix& values() const { return phi_; }
    auto row(Index s) const { return phi_.row(s); }
    double scale() const { return scale_; }
    bool was_rescaled() const { return scale_ != 1.0; }

private:
    FeatureMatrix(Matrix phi, double scale);

    Matrix phi_;
    double scale_ = 1.0;
};

/// Projection onto E, the orthogonal complement of theta_e where
/// Phi theta_e = 1 (E = R^d when 1 is not in the span of Phi).
struct ProjectionE {
    std::optional<Vector> theta_e;
    Matrix pi_2e;   // d x d orthogonal projector onto E
    Matrix basis;   // d x dim(E), orthonormal columns

    Index dim() const { return pi_2e.rows(); }
    Index subspace_dim() const { return basis.cols(); }
};

ProjectionE build_projection(const FeatureMatrix& phi);

}  // namespace avar
