#pragma once

#include <Eigen/Core>

#include <vector>

#include "cslr/grids.hpp"

namespace cslr {

/// Dense complex matrix. Used for oracles and for the dense baselines only.
using DenseMatrix = Eigen::MatrixXcd;

/// Upper bound on rows * cols for any dense materialization.
inline constexpr Index kDenseBudget = 10'000'000;

/// Throws BudgetError when a rows x cols dense matrix would exceed the budget.
void require_dense_budget(Index rows, Index cols, const char* what);

/// Diagonal weighting M_j applied to the data before lifting.
class Weighting {
 public:
  enum class Kind { identity, fourier_derivative, elementwise };

  static Weighting identity();
  /// Multiplication of entry k by j*2*pi*k[axis].
  static Weighting fourier_derivative(std::size_t axis);
  /// Multiplication by a fixed array; only defined on that array's box.
  static Weighting elementwise(ComplexGrid weights);

  Kind kind() const { return kind_; }
  std::size_t axis() const { return axis_; }

  /// Diagonal of the weighting over the positions of `box`.
  Eigen::VectorXcd diagonal(const IndexBox& box) const;

 private:
  Kind kind_ = Kind::identity;
  std::size_t axis_ = 0;
  ComplexGrid weights_;
};

/// Vertical stack of K multi-level Toeplitz blocks Toep(M_j x) with a common
/// filter support. Describes both the exact lifting (rows on the valid set)
/// and its half-circulant surrogate (rows on the whole data box).
class LiftingSpec {
 public:
  LiftingSpec(IndexBox data_box, IndexBox filter_box, std::vector<Weighting> weightings);

  const IndexBox& data_box() const { return data_box_; }
  const IndexBox& filter_box() const { return filter_box_; }
  const IndexBox& valid_box() const { return valid_box_; }
  /// Support of filter autocorrelations, filter_box - filter_box.
  const IndexBox& difference_box() const { return difference_box_; }
  const std::vector<Weighting>& weightings() const { return weightings_; }

  std::size_t blocks() const { return weightings_.size(); }
  Index filter_size() const { return filter_box_.size(); }
  Index exact_rows() const { return static_cast<Index>(blocks()) * valid_box_.size(); }
  Index surrogate_rows() const { return static_cast<Index>(blocks()) * data_box_.size(); }

  /// Diagonal of M_j over the data box.
  const Eigen::VectorXcd& weights(std::size_t j) const { return diagonals_[j]; }
  /// sum_j |M_j|^2, the diagonal of M^* M.
  const Eigen::VectorXd& weight_energy() const { return energy_; }

  /// M_j x.
  ComplexGrid weighted(std::size_t j, const ComplexGrid& x) const;

  /// Same lifting acting on a different data box.
  LiftingSpec with_data_box(const IndexBox& box) const;

 private:
  IndexBox data_box_;
  IndexBox filter_box_;
  IndexBox valid_box_;
  IndexBox difference_box_;
  std::vector<Weighting> weightings_;
  std::vector<Eigen::VectorXcd> diagonals_;
  Eigen::VectorXd energy_;
};

/// [(M_j x) * h restricted to the valid set]_j, computed with FFTs.
std::vector<ComplexGrid> apply_lift(const LiftingSpec& spec, const ComplexGrid& x,
                                    const ComplexGrid& h);

/// Dense K|Gamma| x N exact lifting T(x).
DenseMatrix materialize_exact(const LiftingSpec& spec, const ComplexGrid& x);
/// Dense K|Delta| x N half-circulant surrogate of T(x).
DenseMatrix materialize_surrogate(const LiftingSpec& spec, const ComplexGrid& x);

/// Autocorrelation generator g = sum_j sqrt(L) F |F^* M_j x|^2 on the data
/// torus, stored origin-anchored: entry delta sits at position delta mod L.
Eigen::VectorXcd gram_generator(const LiftingSpec& spec, const ComplexGrid& x);

/// N x N Gram matrix of the surrogate lifting, G[a,b] = g[l_a - l_b].
DenseMatrix gram_surrogate(const LiftingSpec& spec, const ComplexGrid& x);

/// Singular values in descending order.
Eigen::VectorXd singular_values_dense(const DenseMatrix& m);

/// Adjoint of the exact lifting, T^*(X).
ComplexGrid lift_adjoint_exact(const LiftingSpec& spec, const DenseMatrix& X);

/// Diagonal of T^* T for the exact lifting: sum_j |M_j[k]|^2 times the number
/// of times entry k appears in each Toeplitz block.
RealGrid exact_normal_diagonal(const LiftingSpec& spec);

/// T^dagger(X) = (T^* T)^{-1} T^*(X). Entries where T^* T vanishes are copied
/// from `fallback`.
ComplexGrid structured_projection(const LiftingSpec& spec, const DenseMatrix& X,
                                  const ComplexGrid& fallback);

}  // namespace cslr
