#include "cslr/giraf.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>

#include "cslr/fft.hpp"

namespace cslr {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

bool is_fast_size(Index n) {
  for (Index f : {2, 3, 5})
    while (n % f == 0) n /= f;
  return n == 1;
}

Index fast_size_at_least(Index n) {
  while (!is_fast_size(n)) ++n;
  return n;
}

Eigen::VectorXcd forward_weighted(const LiftingSpec& spec, std::size_t j,
                                  const Eigen::VectorXcd& x) {
  Eigen::VectorXcd z = spec.weights(j).cwiseProduct(x);
  idft_inplace(z, spec.data_box().extent());
  return z;
}

// sum_j M_j^* F (d .* F^* M_j x)
Eigen::VectorXcd penalty_normal(const LiftingSpec& spec, const Eigen::VectorXd& d,
                                const Eigen::VectorXcd& x) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(x.size());
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    Eigen::VectorXcd z = forward_weighted(spec, j, x);
    z.array() *= d.array();
    dft_inplace(z, spec.data_box().extent());
    out += spec.weights(j).conjugate().cwiseProduct(z);
  }
  return out;
}

void check_problem(const LsProblem& prob) {
  const IndexBox& box = prob.spec.data_box();
  if (prob.a.box() != box) throw DataError("least squares: sampling box " + prob.a.box().str() +
                                           " does not match " + box.str());
  if (prob.d.box() != box) throw DataError("least squares: weight box does not match data box");
  if (prob.lambda && !(*prob.lambda > 0.0)) throw ConfigError("least squares: lambda must be > 0");
}

// Every unsampled entry must be seen by some weighting, otherwise it is free.
void check_determined(const LiftingSpec& spec, const SamplingOp& a) {
  const Eigen::VectorXd& energy = spec.weight_energy();
  for (Index i = 0; i < energy.size(); ++i)
    if (!a.mask[i] && energy[i] == 0.0)
      throw ConfigError("entry " + std::to_string(i) + " of " + spec.data_box().str() +
                        " is neither sampled nor seen by the weighting (sample k = 0)");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  if (lambda && !(*lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (eps0 && !(*eps0 > 0.0)) throw ConfigError("eps0 must be > 0");
  if (!(eta > 1.0)) throw ConfigError("eta must be > 1");
  if (eps_min && !(*eps_min >= 0.0)) throw ConfigError("eps_min must be >= 0");
  if (outer_iters < 1) throw ConfigError("outer_iters must be >= 1");
  if (admm_iters < 1) throw ConfigError("admm_iters must be >= 1");
  if (!(delta >= 1.0)) throw ConfigError("delta must be >= 1");
  if (cg_iters < 1) throw ConfigError("cg_iters must be >= 1");
  if (!(cg_tol >= 0.0)) throw ConfigError("cg_tol must be >= 0");
  if (!(oversample_factor == 0.0 || oversample_factor >= 1.0))
    throw ConfigError("oversample_factor must be 0 or >= 1");
  if (!(tol >= 0.0)) throw ConfigError("tol must be >= 0");
}

double eps_schedule(double eps0, double eta, double eps_min, int n) {
  return std::max(eps0 * std::pow(eta, -static_cast<double>(n)), eps_min);
}

GramSpectrum gram_spectrum(const LiftingSpec& spec, const ComplexGrid& x) {
  const DenseMatrix g = gram_surrogate(spec, x);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g);
  if (es.info() != Eigen::Success) throw SolverError("Gram eigendecomposition failed");
  GramSpectrum out;
  out.eigvals = es.eigenvalues().cwiseMax(0.0);
  out.eigvecs = es.eigenvectors();
  return out;
}

FilterState filter_from_spectrum(const LiftingSpec& spec, const GramSpectrum& spectrum,
                                 double eps, double p) {
  if (!(eps > 0.0)) throw ConfigError("filter update: eps must be > 0");
  const IndexBox& filt = spec.filter_box();
  const IndexBox& diff = spec.difference_box();
  const Index n = filt.size();
  if (spectrum.eigvals.size() != n || spectrum.eigvecs.rows() != n)
    throw DataError("filter update: spectrum does not match the filter support");
  const double q = 1.0 - p / 2.0;

  // Autocorrelations live on diff; any torus at least that large avoids
  // wrap-around, so use FFT-friendly extents.
  IndexVec torus_ext(diff.ndim());
  for (std::size_t i = 0; i < diff.ndim(); ++i) torus_ext[i] = fast_size_at_least(diff.extent(i));
  const IndexBox torus(IndexVec(diff.ndim(), 0), torus_ext);

  Eigen::VectorXd power = Eigen::VectorXd::Zero(torus.size());
  for (Index i = 0; i < n; ++i) {
    const double w = std::pow(spectrum.eigvals[i] + eps, -q);
    Eigen::VectorXcd v = origin_anchored(ComplexGrid(filt, spectrum.eigvecs.col(i)), torus);
    dft_inplace(v, torus_ext);
    power += w * v.cwiseAbs2();
  }
  Eigen::VectorXcd acc = power.cast<cplx>();
  idft_inplace(acc, torus_ext);
  acc *= std::sqrt(static_cast<double>(torus.size()));

  FilterState st;
  st.eps = eps;
  st.eigvals = spectrum.eigvals;
  st.h = ComplexGrid(diff);
  for_each_index(diff, [&](const IndexVec& k, Index lin) { st.h[lin] = acc[torus.origin_linear(k)]; });

  const IndexBox& data = spec.data_box();
  Eigen::VectorXcd dv = origin_anchored(st.h, data);
  idft_inplace(dv, data.extent());
  dv *= std::sqrt(static_cast<double>(data.size()));
  st.d = RealGrid(data);
  for (Index i = 0; i < data.size(); ++i) st.d[i] = std::max(dv[i].real(), 0.0);
  return st;
}

FilterState filter_update(const LiftingSpec& spec, const ComplexGrid& x, double eps, double p) {
  return filter_from_spectrum(spec, gram_spectrum(spec, x), eps, p);
}

double surrogate_penalty(const Eigen::VectorXd& eigvals, double p, double eps) {
  double s = 0.0;
  for (Index i = 0; i < eigvals.size(); ++i) {
    const double y = std::max(eigvals[i], 0.0) + eps;
    if (p > 0.0)
      s += std::pow(y, p / 2.0);
    else
      s += 0.5 * std::log(y);
  }
  return s;
}

double giraf_cost(const SamplingOp& a, const ComplexGrid& x, const Eigen::VectorXd& eigvals,
                  const SolverConfig& cfg, double eps) {
  const double pen = surrogate_penalty(eigvals, cfg.p, eps);
  if (!cfg.lambda) return pen;
  const double fit = (a.project(x).values() - a.measured.values()).squaredNorm();
  return fit + *cfg.lambda * pen;
}

void admm_ls(const LsProblem& prob, ComplexGrid& x, double delta, int iters,
             const std::function<void(int, const ComplexGrid&)>& observer) {
  check_problem(prob);
  const LiftingSpec& spec = prob.spec;
  const IndexBox& box = spec.data_box();
  if (x.box() != box) throw DataError("admm_ls: iterate box does not match data box");
  if (!(delta >= 1.0)) throw ConfigError("admm_ls: delta must be >= 1");
  const Eigen::VectorXd& d = prob.d.values();
  const Eigen::VectorXd& energy = spec.weight_energy();
  const Index len = box.size();
  const std::size_t blocks = spec.blocks();

  Eigen::VectorXd sampled(len);
  for (Index i = 0; i < len; ++i) sampled[i] = prob.a.mask[i] ? 1.0 : 0.0;
  const Eigen::VectorXcd& b = prob.a.measured.values();

  const double gamma = d.maxCoeff() / delta;
  if (!(gamma > 0.0)) {
    // The penalty vanishes: keep the data and leave unsampled entries alone.
    for (Index i = 0; i < len; ++i)
      if (prob.a.mask[i] || prob.lambda) x[i] = prob.a.mask[i] ? b[i] : cplx(0.0);
    return;
  }

  Eigen::VectorXd denom;
  double rho = 0.0;
  if (prob.lambda) {
    rho = *prob.lambda * prob.c_p * gamma;
    denom = sampled + rho * energy;
    for (Index i = 0; i < len; ++i)
      if (!(denom[i] > 0.0)) throw ConfigError("admm_ls: singular x-update at entry " + std::to_string(i));
  } else {
    check_determined(spec, prob.a);
  }

  const Eigen::ArrayXd shrink = gamma / (d.array() + gamma);
  std::vector<Eigen::VectorXcd> z(blocks), u(blocks, Eigen::VectorXcd::Zero(len)), y(blocks);
  for (std::size_t j = 0; j < blocks; ++j) z[j] = forward_weighted(spec, j, x.values());

  Eigen::VectorXcd acc(len);
  for (int it = 0; it < iters; ++it) {
    acc.setZero();
    for (std::size_t j = 0; j < blocks; ++j) {
      y[j] = (shrink * (z[j] - u[j]).array()).matrix();
      Eigen::VectorXcd t = y[j] + u[j];
      dft_inplace(t, box.extent());
      acc += spec.weights(j).conjugate().cwiseProduct(t);
    }
    if (prob.lambda) {
      x.values() = ((sampled.cast<cplx>().cwiseProduct(b) + rho * acc).array() /
                    denom.cast<cplx>().array())
                       .matrix();
    } else {
      for (Index i = 0; i < len; ++i) x[i] = prob.a.mask[i] ? b[i] : acc[i] / energy[i];
    }
    for (std::size_t j = 0; j < blocks; ++j) {
      z[j] = forward_weighted(spec, j, x.values());
      u[j] += y[j] - z[j];
    }
    if (observer) observer(it + 1, x);
  }
}

CgReport conjugate_gradient(const LinearOp& op, const Eigen::VectorXcd& rhs, Eigen::VectorXcd& x,
                            int max_iters, double tol,
                            const std::function<void(int, const Eigen::VectorXcd&)>& observer) {
  CgReport rep;
  const double bnorm = rhs.norm();
  Eigen::VectorXcd r = rhs - op(x);
  double rr = r.squaredNorm();
  const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);
  rep.residual = std::sqrt(rr);
  if (rep.residual <= stop) {
    rep.converged = true;
    return rep;
  }
  Eigen::VectorXcd p = r;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXcd ap = op(p);
    const double pap = p.dot(ap).real();
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    rep.iterations = it + 1;
    rep.residual = std::sqrt(rr_new);
    if (observer) observer(rep.iterations, x);
    if (rep.residual <= stop) {
      rep.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return rep;
}

CgReport cg_ls(const LsProblem& prob, ComplexGrid& x, int max_iters, double tol,
               const std::function<void(int, const ComplexGrid&)>& observer) {
  check_problem(prob);
  const LiftingSpec& spec = prob.spec;
  const IndexBox& box = spec.data_box();
  if (x.box() != box) throw DataError("cg_ls: iterate box does not match data box");
  const Eigen::VectorXd& d = prob.d.values();
  const Index len = box.size();
  Eigen::VectorXd sampled(len);
  for (Index i = 0; i < len; ++i) sampled[i] = prob.a.mask[i] ? 1.0 : 0.0;
  const Eigen::VectorXcd& b = prob.a.measured.values();
  const Eigen::VectorXd& energy = spec.weight_energy();

  if (prob.lambda) {
    for (Index i = 0; i < len; ++i)
      if (sampled[i] == 0.0 && energy[i] == 0.0)
        throw ConfigError("cg_ls: singular normal equations at entry " + std::to_string(i));
    const double scale = *prob.lambda * prob.c_p;
    LinearOp op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
      return sampled.cast<cplx>().cwiseProduct(v) + scale * penalty_normal(spec, d, v);
    };
    const Eigen::VectorXcd rhs = sampled.cast<cplx>().cwiseProduct(b);
    Eigen::VectorXcd v = x.values();
    const CgReport rep = conjugate_gradient(op, rhs, v, max_iters, tol, [&](int it, const Eigen::VectorXcd& cur) {
      if (observer) observer(it, ComplexGrid(box, cur));
    });
    x.values() = v;
    return rep;
  }

  check_determined(spec, prob.a);
  const Eigen::VectorXd free = Eigen::VectorXd::Ones(len) - sampled;
  Eigen::VectorXcd b0 = sampled.cast<cplx>().cwiseProduct(b);
  LinearOp op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return free.cast<cplx>().cwiseProduct(penalty_normal(spec, d, free.cast<cplx>().cwiseProduct(v)));
  };
  const Eigen::VectorXcd rhs = -free.cast<cplx>().cwiseProduct(penalty_normal(spec, d, b0));
  Eigen::VectorXcd v = free.cast<cplx>().cwiseProduct(x.values());
  const CgReport rep = conjugate_gradient(op, rhs, v, max_iters, tol, [&](int it, const Eigen::VectorXcd& cur) {
    if (observer) observer(it, ComplexGrid(box, b0 + cur));
  });
  x.values() = b0 + v;
  return rep;
}

IndexBox solve_box(const LiftingSpec& spec, const SolverConfig& cfg) {
  const IndexBox& data = spec.data_box();
  if (!cfg.oversample) return data;
  IndexVec margin(data.ndim());
  for (std::size_t i = 0; i < data.ndim(); ++i) {
    if (cfg.oversample_factor == 0.0)
      margin[i] = spec.filter_box().extent(i) - 1;
    else
      margin[i] = static_cast<Index>(
          std::llround((cfg.oversample_factor - 1.0) * static_cast<double>(data.extent(i)) / 2.0));
  }
  return grow(data, margin);
}

RecoveryTrace giraf_solve(const LiftingSpec& spec, const SamplingOp& a, const SolverConfig& cfg,
                          const ComplexGrid* truth) {
  cfg.validate();
  const IndexBox& data = spec.data_box();
  if (a.box() != data) throw DataError("giraf: sampling box " + a.box().str() + " does not match " + data.str());
  if (truth && truth->box() != data) throw DataError("giraf: ground truth box does not match data box");

  const IndexBox box = solve_box(spec, cfg);
  const LiftingSpec lift = box == data ? spec : spec.with_data_box(box);
  const SamplingOp samp = box == data ? a : a.embedded(box);
  if (!cfg.lambda) check_determined(lift, samp);

  const auto start = Clock::now();
  auto clock = [&] { return cfg.record_timing ? elapsed(start) : 0.0; };
  auto error_of = [&](const ComplexGrid& x) {
    return truth ? nmse(restrict(x, data), *truth) : std::numeric_limits<double>::quiet_NaN();
  };

  RecoveryTrace trace;
  trace.algorithm = "giraf";
  ComplexGrid x = samp.measured;
  GramSpectrum spectrum = gram_spectrum(lift, x);
  const double lambda_max = spectrum.eigvals.maxCoeff();
  double eps0 = 0.0;
  if (cfg.eps0) {
    eps0 = *cfg.eps0;
  } else {
    if (!(lambda_max > 0.0)) throw SolverError("giraf: zero initial Gram matrix, cannot pick eps0");
    eps0 = lambda_max / 100.0;
  }
  const double eps_min = cfg.eps_min ? *cfg.eps_min
                                     : std::max(eps0 * std::pow(cfg.eta, -cfg.outer_iters), 1e-9 * eps0);

  IterationRecord rec0;
  rec0.eps = eps0;
  rec0.nmse = error_of(x);
  rec0.cost = giraf_cost(samp, x, spectrum.eigvals, cfg, eps0);
  rec0.sigma_min = std::sqrt(spectrum.eigvals.minCoeff());
  rec0.sigma_max = std::sqrt(lambda_max);
  rec0.seconds = clock();
  trace.records.push_back(rec0);

  for (int n = 1; n <= cfg.outer_iters; ++n) {
    const double eps = eps_schedule(eps0, cfg.eta, eps_min, n - 1);
    const auto t0 = Clock::now();
    const FilterState fs = filter_from_spectrum(lift, spectrum, eps, cfg.p);
    const double weight_time = elapsed(t0);

    const auto t1 = Clock::now();
    const ComplexGrid previous = x;
    const LsProblem prob{lift, samp, fs.d, cfg.lambda, cfg.c_p()};
    if (cfg.ls_solver == LsSolver::admm)
      admm_ls(prob, x, cfg.delta, cfg.admm_iters);
    else
      cg_ls(prob, x, cfg.cg_iters, cfg.cg_tol);
    const double ls_time = elapsed(t1);

    const auto t2 = Clock::now();
    spectrum = gram_spectrum(lift, x);
    const double spectrum_time = elapsed(t2);

    IterationRecord rec;
    rec.iter = n;
    rec.eps = eps;
    rec.nmse = error_of(x);
    rec.cost = giraf_cost(samp, x, spectrum.eigvals, cfg, eps);
    rec.sigma_min = std::sqrt(spectrum.eigvals.minCoeff());
    rec.sigma_max = std::sqrt(spectrum.eigvals.maxCoeff());
    const double prev_norm = previous.values().squaredNorm();
    rec.rel_change = prev_norm > 0.0 ? (x.values() - previous.values()).squaredNorm() / prev_norm : 0.0;
    rec.seconds = clock();
    if (cfg.record_timing) {
      rec.weight_seconds = weight_time + spectrum_time;
      rec.ls_seconds = ls_time;
    }
    trace.records.push_back(rec);
    if (cfg.tol > 0.0 && rec.rel_change < cfg.tol) {
      trace.converged = true;
      break;
    }
  }
  trace.x = restrict(x, data);
  return trace;
}

}  // namespace cslr
