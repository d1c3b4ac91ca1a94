#pragma once

#include <optional>
#include <string>

#include "cslr/giraf.hpp"

namespace cslr {

enum class BaselineAlgorithm { irls, ap, ap_prox, svt, svt_uv };

std::string to_string(BaselineAlgorithm a);
BaselineAlgorithm parse_baseline(const std::string& name);

/// Parameters shared by the dense reference algorithms. All of them work on
/// the exact lifting and materialize it, so they are limited by kDenseBudget.
struct BaselineConfig {
  BaselineAlgorithm algorithm = BaselineAlgorithm::irls;
  /// Target rank (ap, ap_prox) or factor width R (svt_uv).
  std::optional<Index> rank;
  /// Data-fit weight; empty enforces Ax = b exactly. Not accepted by ap.
  std::optional<double> lambda;
  /// ADMM penalty of svt and svt_uv.
  double beta = 1.0;
  /// irls only.
  double p = 0.0;
  std::optional<double> eps0;
  double eta = 1.2;
  std::optional<double> eps_min;
  int cg_iters = 100;
  double cg_tol = 1e-12;

  int max_iters = 100;
  /// Stop once ||x_n - x_{n-1}||^2 / ||x_{n-1}||^2 < tol.
  double tol = 1e-8;
  bool record_timing = true;

  void validate() const;
};

/// IRLS-p on the exact lifting: H = (T^*T + eps I)^{p/2 - 1} from a dense SVD,
/// then the weighted least squares by CG.
RecoveryTrace irls_direct(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                          const ComplexGrid* truth = nullptr);

/// Cadzow iterations: rank-r truncation, structured projection, data reinsertion.
RecoveryTrace ap_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                       const ComplexGrid* truth = nullptr);

/// Alternating minimization of ||Ax - b||^2 + lambda ||T(x) - [T(x)]_r||_F^2.
RecoveryTrace ap_prox_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                            const ComplexGrid* truth = nullptr);

/// ADMM for ||Ax - b||^2 + lambda ||T(x)||_* with singular value thresholding.
RecoveryTrace svt_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                        const ComplexGrid* truth = nullptr);

/// ADMM on the factored nuclear norm 1/2(||U||_F^2 + ||V||_F^2), T(x) = U V^*.
RecoveryTrace svt_uv_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                           const ComplexGrid* truth = nullptr);

RecoveryTrace run_baseline(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                           const ComplexGrid* truth = nullptr);

}  // namespace cslr
