#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cslr/grids.hpp"
#include "cslr/lifting.hpp"
#include "cslr/models.hpp"

namespace cslr {

enum class LsSolver { admm, cg };

/// Parameters of a GIRAF-p solve.
struct SolverConfig {
  double p = 0.0;
  /// Regularization weight; empty means the data are enforced exactly (Ax = b).
  std::optional<double> lambda;
  /// Initial smoothing; empty means lambda_max / 100 of the first Gram matrix.
  std::optional<double> eps0;
  double eta = 1.2;
  /// Smoothing floor; empty means max(eps0 * eta^-outer_iters, 1e-9 * eps0).
  std::optional<double> eps_min;
  int outer_iters = 10;
  LsSolver ls_solver = LsSolver::admm;
  int admm_iters = 20;
  double delta = 10.0;
  int cg_iters = 100;
  double cg_tol = 1e-12;
  /// Solve on the enlarged grid and restrict the result to the data box.
  bool oversample = false;
  /// Extent ratio of the enlarged grid; 0 pads by (filter extent - 1) per side.
  double oversample_factor = 0.0;
  /// Stop once ||x_n - x_{n-1}||^2 / ||x_{n-1}||^2 drops below this (0 disables).
  double tol = 0.0;
  bool record_timing = true;

  double c_p() const { return p > 0.0 ? p / 2.0 : 0.5; }
  double q() const { return 1.0 - p / 2.0; }
  void validate() const;
};

/// eps_n = max(eps0 * eta^-n, eps_min).
double eps_schedule(double eps0, double eta, double eps_min, int n);

/// Eigendecomposition of the surrogate Gram matrix (eigenvalues ascending,
/// clamped at zero).
struct GramSpectrum {
  Eigen::VectorXd eigvals;
  DenseMatrix eigvecs;
};

GramSpectrum gram_spectrum(const LiftingSpec& spec, const ComplexGrid& x);

/// Reweighted annihilating filter and the spatial weights it induces.
struct FilterState {
  ComplexGrid h;   // on the difference box of the filter support
  RealGrid d;      // on the data box
  Eigen::VectorXd eigvals;
  double eps = 0.0;
};

/// Filter and weights from a precomputed spectrum.
///
/// The weights satisfy ||T~(x) H^{1/2}||_F^2 = sum_j ||D^{1/2} idft(M_j x)||^2
/// for H = sum_i (lambda_i + eps)^{-q} v_i v_i^*, i.e.
/// d = L * sum_i (lambda_i + eps)^{-q} |idft(v_i)|^2.
FilterState filter_from_spectrum(const LiftingSpec& spec, const GramSpectrum& spectrum,
                                 double eps, double p);

FilterState filter_update(const LiftingSpec& spec, const ComplexGrid& x, double eps, double p);

/// Smoothed Schatten penalty of the surrogate from its Gram eigenvalues:
/// sum (lambda_i + eps)^{p/2} for p > 0, 1/2 sum log(lambda_i + eps) for p = 0.
double surrogate_penalty(const Eigen::VectorXd& eigvals, double p, double eps);

/// Cost ||Ax - b||^2 + lambda * penalty; only the penalty in exact-data mode.
double giraf_cost(const SamplingOp& a, const ComplexGrid& x, const Eigen::VectorXd& eigvals,
                  const SolverConfig& cfg, double eps);

/// Weighted least-squares subproblem
///   min ||Ax - b||^2 + lambda C_p sum_j ||D^{1/2} idft(M_j x)||^2
/// (or the same penalty subject to Ax = b when lambda is empty).
struct LsProblem {
  const LiftingSpec& spec;
  const SamplingOp& a;
  const RealGrid& d;
  std::optional<double> lambda;
  double c_p = 0.5;
};

/// ADMM with gamma = max(d) / delta; `x` is the warm start and is updated.
void admm_ls(const LsProblem& prob, ComplexGrid& x, double delta, int iters,
             const std::function<void(int, const ComplexGrid&)>& observer = {});

struct CgReport {
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Conjugate gradients on the normal equations; `x` is the warm start.
CgReport cg_ls(const LsProblem& prob, ComplexGrid& x, int max_iters, double tol,
               const std::function<void(int, const ComplexGrid&)>& observer = {});

/// Hermitian positive semidefinite operator on complex vectors.
using LinearOp = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

/// Plain CG for op(x) = rhs starting at x. Returns the last iterate, which
/// minimizes the error in the operator norm over the Krylov space.
CgReport conjugate_gradient(const LinearOp& op, const Eigen::VectorXcd& rhs, Eigen::VectorXcd& x,
                            int max_iters, double tol,
                            const std::function<void(int, const Eigen::VectorXcd&)>& observer = {});

struct IterationRecord {
  int iter = 0;
  double eps = 0.0;
  double nmse = 0.0;  // NaN without ground truth
  double cost = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double seconds = 0.0;  // cumulative
  double weight_seconds = 0.0;
  double ls_seconds = 0.0;
  double rel_change = 0.0;
};

struct RecoveryTrace {
  std::string algorithm;
  std::vector<IterationRecord> records;  // record 0 is the initial iterate
  ComplexGrid x;
  bool converged = false;

  int iterations() const { return records.empty() ? 0 : records.back().iter; }
  double total_seconds() const { return records.empty() ? 0.0 : records.back().seconds; }
};

/// Data box actually solved on (the enlarged grid when oversampling).
IndexBox solve_box(const LiftingSpec& spec, const SolverConfig& cfg);

/// GIRAF-p. `truth`, when given, lives on the data box of `spec`.
RecoveryTrace giraf_solve(const LiftingSpec& spec, const SamplingOp& a, const SolverConfig& cfg,
                          const ComplexGrid* truth = nullptr);

}  // namespace cslr
