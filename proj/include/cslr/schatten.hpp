#pragma once

#include <Eigen/Core>

#include "cslr/lifting.hpp"

namespace cslr {

/// (sum sigma_i^p)^{1/p} for p in (0, 1]; sum log sigma_i for p = 0.
/// Throws DataError when p = 0 and some singular value vanishes.
double schatten_p(const DenseMatrix& m, double p);

/// Tr[(X^* X + eps I)^{p/2}] for p > 0, 1/2 log det(X^* X + eps I) for p = 0.
double smoothed_schatten(const DenseMatrix& m, double p, double eps);

/// Same penalty from the eigenvalues of X^* X.
double smoothed_schatten_from_gram(const Eigen::VectorXd& gram_eigvals, double p, double eps);

/// g_p(X; X0) - ||X||_{p,eps}^p, where g_p is the tangent majorizer of the
/// smoothed penalty at X0. Nonnegative, zero at X = X0.
double majorizer_gap(const DenseMatrix& x, const DenseMatrix& x0, double p, double eps);

/// Number of singular values above rel * sigma_max.
Index numerical_rank(const Eigen::VectorXd& singular_values, double rel);

/// Soft-thresholding of the singular values: argmin 1/2||X - Y||_F^2 + tau ||X||_*.
DenseMatrix singular_value_threshold(const DenseMatrix& y, double tau);

/// Best rank-r approximation.
DenseMatrix truncate_rank(const DenseMatrix& y, Index r);

}  // namespace cslr
