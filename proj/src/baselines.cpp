#include "cslr/baselines.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <limits>

#include "cslr/schatten.hpp"

namespace cslr {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Recorder {
 public:
  Recorder(std::string name, const BaselineConfig& cfg, const ComplexGrid* truth)
      : timing_(cfg.record_timing), truth_(truth), start_(Clock::now()) {
    trace_.algorithm = std::move(name);
  }

  // Appends the record for iterate n and reports whether the run converged.
  bool emit(int n, const ComplexGrid& x, double eps, double cost, double sigma_min,
            double sigma_max, double tol) {
    IterationRecord rec;
    rec.iter = n;
    rec.eps = eps;
    rec.nmse = truth_ ? nmse(x, *truth_) : kNaN;
    rec.cost = cost;
    rec.sigma_min = sigma_min;
    rec.sigma_max = sigma_max;
    rec.seconds = timing_ ? std::chrono::duration<double>(Clock::now() - start_).count() : 0.0;
    bool done = false;
    if (n > 0) {
      const double prev = previous_.values().squaredNorm();
      rec.rel_change = prev > 0.0 ? (x.values() - previous_.values()).squaredNorm() / prev : 0.0;
      done = rec.rel_change < tol;
    }
    previous_ = x;
    trace_.records.push_back(rec);
    return done;
  }

  RecoveryTrace finish(ComplexGrid x, bool converged) {
    trace_.x = std::move(x);
    trace_.converged = converged;
    return std::move(trace_);
  }

 private:
  bool timing_;
  const ComplexGrid* truth_;
  Clock::time_point start_;
  ComplexGrid previous_;
  RecoveryTrace trace_;
};

void check_inputs(const LiftingSpec& spec, const SamplingOp& a, const ComplexGrid* truth) {
  if (a.box() != spec.data_box())
    throw DataError("baseline: sampling box " + a.box().str() + " does not match " +
                    spec.data_box().str());
  if (truth && truth->box() != spec.data_box())
    throw DataError("baseline: ground truth box does not match data box");
  require_dense_budget(spec.exact_rows(), spec.filter_size(), "baseline lifting");
}

double data_fit(const SamplingOp& a, const ComplexGrid& x) {
  return (a.project(x).values() - a.measured.values()).squaredNorm();
}

// Solves min ||Ax - b||^2 + c ||T(x) - Z||_F^2 (or the same subject to Ax = b)
// using that T^*T is diagonal. Entries the problem leaves free keep their value.
void structured_ls(const LiftingSpec& spec, const SamplingOp& a, const std::optional<double>& lambda,
                   double c, const DenseMatrix& z, const RealGrid& diag, ComplexGrid& x) {
  const ComplexGrid tz = lift_adjoint_exact(spec, z);
  for (Index i = 0; i < x.size(); ++i) {
    if (!lambda) {
      if (a.mask[i])
        x[i] = a.measured[i];
      else if (diag[i] > 0.0)
        x[i] = tz[i] / diag[i];
      continue;
    }
    const double den = (a.mask[i] ? 1.0 : 0.0) + c * diag[i];
    if (den > 0.0) x[i] = ((a.mask[i] ? a.measured[i] : cplx(0.0)) + c * tz[i]) / den;
  }
}

struct Svd {
  Eigen::VectorXd s;
  DenseMatrix u, v;
};

Svd thin_svd(const DenseMatrix& m) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

double tail_energy(const Eigen::VectorXd& s, Index r) {
  double acc = 0.0;
  for (Index i = r; i < s.size(); ++i) acc += s[i] * s[i];
  return acc;
}

double sigma_min_of(const LiftingSpec& spec, const Eigen::VectorXd& s) {
  // Columns beyond the row count contribute zero singular values.
  return s.size() < spec.filter_size() ? 0.0 : s.minCoeff();
}

}  // namespace

std::string to_string(BaselineAlgorithm a) {
  switch (a) {
    case BaselineAlgorithm::irls: return "irls";
    case BaselineAlgorithm::ap: return "ap";
    case BaselineAlgorithm::ap_prox: return "ap_prox";
    case BaselineAlgorithm::svt: return "svt";
    case BaselineAlgorithm::svt_uv: return "svt_uv";
  }
  return "unknown";
}

BaselineAlgorithm parse_baseline(const std::string& name) {
  if (name == "irls") return BaselineAlgorithm::irls;
  if (name == "ap") return BaselineAlgorithm::ap;
  if (name == "ap_prox") return BaselineAlgorithm::ap_prox;
  if (name == "svt") return BaselineAlgorithm::svt;
  if (name == "svt_uv") return BaselineAlgorithm::svt_uv;
  throw ConfigError("unknown algorithm '" + name + "'");
}

void BaselineConfig::validate() const {
  const bool needs_rank = algorithm == BaselineAlgorithm::ap ||
                          algorithm == BaselineAlgorithm::ap_prox ||
                          algorithm == BaselineAlgorithm::svt_uv;
  if (needs_rank && !rank) throw ConfigError(to_string(algorithm) + " requires a rank");
  if (!needs_rank && rank) throw ConfigError(to_string(algorithm) + " does not take a rank");
  if (rank && *rank < 1) throw ConfigError("rank must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (lambda && algorithm == BaselineAlgorithm::ap)
    throw ConfigError("ap enforces the data exactly; use ap_prox for a data-fit weight");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  if (eps0 && !(*eps0 > 0.0)) throw ConfigError("eps0 must be > 0");
  if (!(eta > 1.0)) throw ConfigError("eta must be > 1");
  if (eps_min && !(*eps_min >= 0.0)) throw ConfigError("eps_min must be >= 0");
  if (cg_iters < 1) throw ConfigError("cg_iters must be >= 1");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("tol must be >= 0");
}

RecoveryTrace irls_direct(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                          const ComplexGrid* truth) {
  cfg.validate();
  check_inputs(spec, a, truth);
  Recorder rec("irls", cfg, truth);
  const Index n = spec.filter_size();
  const Index len = spec.data_box().size();
  const double q = 1.0 - cfg.p / 2.0;
  const double c_p = cfg.p > 0.0 ? cfg.p / 2.0 : 0.5;
  Eigen::VectorXd sampled(len);
  for (Index i = 0; i < len; ++i) sampled[i] = a.mask[i] ? 1.0 : 0.0;
  const Eigen::VectorXd free = Eigen::VectorXd::Ones(len) - sampled;
  if (!cfg.lambda) {
    for (Index i = 0; i < len; ++i)
      if (!a.mask[i] && spec.weight_energy()[i] == 0.0)
        throw ConfigError("irls: unsampled entry not seen by the weighting (sample k = 0)");
  }

  ComplexGrid x = a.measured;
  double eps0 = 0.0, eps_min = 0.0, eps = 0.0;
  bool converged = false;
  for (int it = 0;; ++it) {
    const DenseMatrix t = materialize_exact(spec, x);
    Eigen::BDCSVD<DenseMatrix> svd(t, Eigen::ComputeFullV);
    const Eigen::VectorXd s = svd.singularValues();
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
    lam.head(s.size()) = s.cwiseAbs2();
    if (it == 0) {
      if (cfg.eps0) {
        eps0 = *cfg.eps0;
      } else {
        if (!(lam.maxCoeff() > 0.0)) throw SolverError("irls: zero initial lifting, cannot pick eps0");
        eps0 = lam.maxCoeff() / 100.0;
      }
      eps_min = cfg.eps_min ? *cfg.eps_min
                            : std::max(eps0 * std::pow(cfg.eta, -cfg.max_iters), 1e-9 * eps0);
      eps = eps0;
    }
    const double pen = smoothed_schatten_from_gram(lam, cfg.p, eps);
    const double cost = cfg.lambda ? data_fit(a, x) + *cfg.lambda * pen : pen;
    const bool done = rec.emit(it, x, eps, cost, sigma_min_of(spec, s), s[0], cfg.tol);
    if (done) converged = true;
    if (done || it == cfg.max_iters) break;

    eps = eps_schedule(eps0, cfg.eta, eps_min, it);
    Eigen::VectorXd w(n);
    for (Index i = 0; i < n; ++i) w[i] = std::pow(lam[i] + eps, -q);
    const DenseMatrix& v = svd.matrixV();
    const DenseMatrix h = v * w.asDiagonal() * v.adjoint();

    auto penalty = [&](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
      const ComplexGrid g(spec.data_box(), u);
      return lift_adjoint_exact(spec, materialize_exact(spec, g) * h).values();
    };
    if (cfg.lambda) {
      const double scale = *cfg.lambda * c_p;
      LinearOp op = [&](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
        return sampled.cast<cplx>().cwiseProduct(u) + scale * penalty(u);
      };
      Eigen::VectorXcd u = x.values();
      conjugate_gradient(op, sampled.cast<cplx>().cwiseProduct(a.measured.values()), u,
                         cfg.cg_iters, cfg.cg_tol);
      x.values() = u;
    } else {
      const Eigen::VectorXcd fc = free.cast<cplx>();
      const Eigen::VectorXcd b0 = sampled.cast<cplx>().cwiseProduct(a.measured.values());
      LinearOp op = [&](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
        return fc.cwiseProduct(penalty(fc.cwiseProduct(u)));
      };
      Eigen::VectorXcd u = fc.cwiseProduct(x.values());
      conjugate_gradient(op, -fc.cwiseProduct(penalty(b0)), u, cfg.cg_iters, cfg.cg_tol);
      x.values() = b0 + u;
    }
  }
  return rec.finish(std::move(x), converged);
}

namespace {

// Shared loop of ap and ap_prox; the data-fit weight is lambda.
RecoveryTrace truncation_solve(const char* name, const LiftingSpec& spec, const SamplingOp& a,
                               const BaselineConfig& cfg, const ComplexGrid* truth) {
  cfg.validate();
  check_inputs(spec, a, truth);
  Recorder rec(name, cfg, truth);
  const RealGrid diag = exact_normal_diagonal(spec);
  const Index r = *cfg.rank;
  ComplexGrid x = a.measured;
  bool converged = false;
  for (int it = 0;; ++it) {
    const Svd svd = thin_svd(materialize_exact(spec, x));
    const double tail = tail_energy(svd.s, r);
    const double cost = cfg.lambda ? data_fit(a, x) + *cfg.lambda * tail : tail;
    const bool done = rec.emit(it, x, 0.0, cost, sigma_min_of(spec, svd.s), svd.s[0], cfg.tol);
    if (done) converged = true;
    if (done || it == cfg.max_iters) break;

    const Index k = std::min<Index>(r, svd.s.size());
    const DenseMatrix xr =
        svd.u.leftCols(k) * svd.s.head(k).asDiagonal() * svd.v.leftCols(k).adjoint();
    structured_ls(spec, a, cfg.lambda, cfg.lambda ? *cfg.lambda : 1.0, xr, diag, x);
  }
  return rec.finish(std::move(x), converged);
}

}  // namespace

RecoveryTrace ap_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                       const ComplexGrid* truth) {
  if (cfg.algorithm != BaselineAlgorithm::ap) throw ConfigError("ap_solve: algorithm must be ap");
  return truncation_solve("ap", spec, a, cfg, truth);
}

RecoveryTrace ap_prox_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                            const ComplexGrid* truth) {
  if (cfg.algorithm != BaselineAlgorithm::ap_prox)
    throw ConfigError("ap_prox_solve: algorithm must be ap_prox");
  return truncation_solve("ap_prox", spec, a, cfg, truth);
}

RecoveryTrace svt_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                        const ComplexGrid* truth) {
  if (cfg.algorithm != BaselineAlgorithm::svt) throw ConfigError("svt_solve: algorithm must be svt");
  cfg.validate();
  check_inputs(spec, a, truth);
  Recorder rec("svt", cfg, truth);
  const RealGrid diag = exact_normal_diagonal(spec);
  const double weight = cfg.lambda ? *cfg.lambda : 1.0;
  ComplexGrid x = a.measured;
  DenseMatrix t = materialize_exact(spec, x);
  DenseMatrix l = DenseMatrix::Zero(t.rows(), t.cols());
  bool converged = false;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd s = singular_values_dense(t);
    const double cost = (cfg.lambda ? data_fit(a, x) : 0.0) + weight * s.sum();
    const bool done = rec.emit(it, x, 0.0, cost, sigma_min_of(spec, s), s[0], cfg.tol);
    if (done) converged = true;
    if (done || it == cfg.max_iters) break;

    const DenseMatrix xs = singular_value_threshold(t + l, weight / cfg.beta);
    structured_ls(spec, a, cfg.lambda, cfg.beta / 2.0, xs - l, diag, x);
    t = materialize_exact(spec, x);
    l += t - xs;
  }
  return rec.finish(std::move(x), converged);
}

RecoveryTrace svt_uv_solve(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                           const ComplexGrid* truth) {
  if (cfg.algorithm != BaselineAlgorithm::svt_uv)
    throw ConfigError("svt_uv_solve: algorithm must be svt_uv");
  cfg.validate();
  check_inputs(spec, a, truth);
  const Index width = *cfg.rank;
  require_dense_budget(spec.exact_rows(), width, "svt_uv factor");
  Recorder rec("svt_uv", cfg, truth);
  const RealGrid diag = exact_normal_diagonal(spec);
  const double weight = cfg.lambda ? *cfg.lambda : 1.0;
  const double beta = cfg.beta;

  ComplexGrid x = a.measured;
  DenseMatrix t = materialize_exact(spec, x);
  DenseMatrix u, v;
  {
    const Svd svd = thin_svd(t);
    const Index k = std::min<Index>(width, svd.s.size());
    const Eigen::VectorXd root = svd.s.head(k).cwiseSqrt();
    u = DenseMatrix::Zero(t.rows(), width);
    v = DenseMatrix::Zero(t.cols(), width);
    u.leftCols(k) = svd.u.leftCols(k) * root.asDiagonal();
    v.leftCols(k) = svd.v.leftCols(k) * root.asDiagonal();
  }
  DenseMatrix l = DenseMatrix::Zero(t.rows(), t.cols());
  const DenseMatrix id = DenseMatrix::Identity(width, width);
  bool converged = false;
  for (int it = 0;; ++it) {
    const double factored = 0.5 * (u.squaredNorm() + v.squaredNorm());
    const double cost = (cfg.lambda ? data_fit(a, x) : 0.0) + weight * factored;
    const bool done = rec.emit(it, x, 0.0, cost, kNaN, kNaN, cfg.tol);
    if (done) converged = true;
    if (done || it == cfg.max_iters) break;

    const DenseMatrix target = t + l;
    u = (beta * target * v) * (weight * id + beta * v.adjoint() * v).inverse();
    v = (beta * target.adjoint() * u) * (weight * id + beta * u.adjoint() * u).inverse();
    const DenseMatrix uv = u * v.adjoint();
    structured_ls(spec, a, cfg.lambda, beta / 2.0, uv - l, diag, x);
    t = materialize_exact(spec, x);
    l += t - uv;
  }
  return rec.finish(std::move(x), converged);
}

RecoveryTrace run_baseline(const LiftingSpec& spec, const SamplingOp& a, const BaselineConfig& cfg,
                           const ComplexGrid* truth) {
  switch (cfg.algorithm) {
    case BaselineAlgorithm::irls: return irls_direct(spec, a, cfg, truth);
    case BaselineAlgorithm::ap: return ap_solve(spec, a, cfg, truth);
    case BaselineAlgorithm::ap_prox: return ap_prox_solve(spec, a, cfg, truth);
    case BaselineAlgorithm::svt: return svt_solve(spec, a, cfg, truth);
    case BaselineAlgorithm::svt_uv: return svt_uv_solve(spec, a, cfg, truth);
  }
  throw ConfigError("unknown baseline algorithm");
}

}  // namespace cslr
