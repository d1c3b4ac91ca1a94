#include "doctest.h"

#include <algorithm>

#include "cslr/fft.hpp"
#include "cslr/giraf.hpp"
#include "support.hpp"

using namespace cslr;
using testing::random_grid;

namespace {

struct Instance {
  LiftingSpec spec;
  ComplexGrid truth;
  SamplingOp a;
};

Instance pwc(const IndexVec& data_ext, const IndexVec& filt_ext, double usf, std::uint64_t seed) {
  const IndexBox data = IndexBox::centered(data_ext);
  LiftingSpec spec(data, IndexBox::centered(filt_ext), gradient_weighting(data));
  ComplexGrid truth = rect_fourier(random_phantom(1, seed), data);
  SamplingOp a = sample(truth, random_mask(data, usf, seed + 1, true));
  return {std::move(spec), std::move(truth), std::move(a)};
}

Instance diracs(Index extent, Index filt, double usf, std::uint64_t seed) {
  const IndexBox data = IndexBox::centered({extent});
  LiftingSpec spec(data, IndexBox::centered({filt}), {Weighting::identity()});
  ComplexGrid truth = dirac_fourier(random_diracs(3, 0.1, seed), data);
  SamplingOp a = sample(truth, random_mask(data, usf, seed + 1, false));
  return {std::move(spec), std::move(truth), std::move(a)};
}

// d_direct[n] = sum_i w_i |sum_l v_i[l] exp(j 2 pi l.n / L)|^2 over box positions n.
Eigen::VectorXd direct_weights(const LiftingSpec& spec, const GramSpectrum& s, double eps, double p) {
  const IndexBox& data = spec.data_box();
  const IndexBox& filt = spec.filter_box();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(data.size());
  for (Index i = 0; i < s.eigvals.size(); ++i) {
    const double w = std::pow(s.eigvals[i] + eps, -(1.0 - p / 2.0));
    for_each_index(data, [&](const IndexVec& k, Index lk) {
      cplx acc = 0.0;
      for_each_index(filt, [&](const IndexVec& l, Index ll) {
        acc += s.eigvecs(ll, i) * testing::twiddle(l, testing::position(data, k), data.extent(), 1.0);
      });
      d[lk] += w * std::norm(acc);
    });
  }
  return d;
}

// Dense sum_j M_j^* F D F^* M_j.
DenseMatrix dense_penalty(const LiftingSpec& spec, const RealGrid& d) {
  const DenseMatrix f = testing::dft_matrix(spec.data_box());
  const Index n = spec.data_box().size();
  DenseMatrix q = DenseMatrix::Zero(n, n);
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    const DenseMatrix fm = f.adjoint() * spec.weights(j).asDiagonal();
    q += fm.adjoint() * d.values().cast<cplx>().asDiagonal() * fm;
  }
  return q;
}

Eigen::VectorXcd dense_solution(const LsProblem& prob) {
  const DenseMatrix q = dense_penalty(prob.spec, prob.d);
  const Index n = q.rows();
  const Eigen::VectorXcd& b = prob.a.measured.values();
  if (prob.lambda) {
    DenseMatrix lhs = *prob.lambda * prob.c_p * q;
    for (Index i = 0; i < n; ++i) lhs(i, i) += prob.a.mask[i] ? 1.0 : 0.0;
    return lhs.ldlt().solve(prob.a.project(prob.a.measured).values());
  }
  std::vector<Index> s, u;
  for (Index i = 0; i < n; ++i) (prob.a.mask[i] ? s : u).push_back(i);
  DenseMatrix quu(u.size(), u.size());
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(u.size());
  for (std::size_t r = 0; r < u.size(); ++r) {
    for (std::size_t c = 0; c < u.size(); ++c) quu(r, c) = q(u[r], u[c]);
    for (Index k : s) rhs[r] -= q(u[r], k) * b[k];
  }
  const Eigen::VectorXcd xu = quu.ldlt().solve(rhs);
  Eigen::VectorXcd x = b;
  for (std::size_t r = 0; r < u.size(); ++r) x[u[r]] = xu[r];
  return x;
}

double rel_err(const Eigen::VectorXcd& x, const Eigen::VectorXcd& ref) { return (x - ref).norm() / ref.norm(); }

}  // namespace

TEST_CASE("solver configuration") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.c_p() == 0.5);
  cfg.p = 0.5;
  CHECK(cfg.c_p() == 0.25);
  CHECK(cfg.q() == 0.75);
  cfg.p = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.p = 1.0;
  cfg.eta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.eta = 2.0;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK(eps_schedule(1.0, 2.0, 0.1, 0) == 1.0);
  CHECK(eps_schedule(1.0, 2.0, 0.1, 2) == 0.25);
  CHECK(eps_schedule(1.0, 2.0, 0.1, 10) == 0.1);
}

TEST_CASE("filter update") {
  Rng rng(21);
  SUBCASE("weights from the filter match the direct sum") {
    for (int trial = 0; trial < 3; ++trial) {
      const bool two_d = trial > 0;
      const IndexBox data = IndexBox::centered(two_d ? IndexVec{9, 10} : IndexVec{23});
      LiftingSpec spec(data, IndexBox::centered(two_d ? IndexVec{3, 3} : IndexVec{5}),
                       trial == 2 ? gradient_weighting(data) : std::vector{Weighting::identity()});
      const ComplexGrid x = random_grid(data, rng);
      const GramSpectrum s = gram_spectrum(spec, x);
      for (double p : {0.0, 0.5, 1.0}) {
        const double eps = 1e-2 * s.eigvals.maxCoeff();
        const FilterState fs = filter_from_spectrum(spec, s, eps, p);
        const Eigen::VectorXd ref = direct_weights(spec, s, eps, p);
        CHECK((fs.d.values() - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() < 1e-10);
        CHECK(fs.h.box() == spec.difference_box());
        CHECK(fs.d.values().minCoeff() >= 0.0);
      }
    }
  }
  SUBCASE("zero data gives constant weights") {
    const IndexBox data = IndexBox::centered({8, 7});
    LiftingSpec spec(data, IndexBox::centered({3, 3}), gradient_weighting(data));
    const double eps = 0.3, p = 0.5;
    const FilterState fs = filter_update(spec, ComplexGrid(data), eps, p);
    CHECK(fs.eigvals.cwiseAbs().maxCoeff() == 0.0);
    const double want = std::pow(eps, -(1.0 - p / 2)) * 9.0;
    CHECK((fs.d.values().array() - want).abs().maxCoeff() < 1e-12 * want);
    // h collapses to a scaled delta.
    CHECK(std::abs(fs.h.at({0, 0}) - std::pow(eps, -(1.0 - p / 2)) * 9.0) < 1e-12);
  }
  SUBCASE("smaller p spreads the weights") {
    const Instance in = pwc({33, 33}, {7, 7}, 1.0, 3);
    const GramSpectrum s = gram_spectrum(in.spec, in.truth);
    const double eps = 1e-3 * s.eigvals.maxCoeff();
    auto ratio = [&](double p) {
      const Eigen::VectorXd d = filter_from_spectrum(in.spec, s, eps, p).d.values();
      return d.minCoeff() / d.maxCoeff();
    };
    CHECK(ratio(0.0) <= ratio(0.5));
    CHECK(ratio(0.5) <= ratio(1.0));
  }
}

TEST_CASE("cost") {
  const Eigen::VectorXd ev = (Eigen::VectorXd(3) << 0.0, 1.0, 3.0).finished();
  CHECK(surrogate_penalty(ev, 1.0, 1.0) == doctest::Approx(1.0 + std::sqrt(2.0) + 2.0));
  CHECK(surrogate_penalty(ev, 0.0, 1.0) == doctest::Approx(0.5 * (std::log(2.0) + std::log(4.0))));
}

TEST_CASE("weighted least squares") {
  Rng rng(22);
  SUBCASE("vanishing weights return the zero-filled data") {
    const Instance in = diracs(31, 5, 0.5, 4);
    const RealGrid d(in.spec.data_box());
    const LsProblem prob{in.spec, in.a, d, 1.0, 0.5};
    ComplexGrid x = random_grid(in.spec.data_box(), rng);
    admm_ls(prob, x, 10.0, 1);
    CHECK(x.values() == in.a.measured.values());
  }
  for (int trial = 0; trial < 4; ++trial) {
    CAPTURE(trial);
    const Instance in = trial < 2 ? diracs(41, 7, 0.5, 10 + trial) : pwc({8, 8}, {3, 3}, 0.5, 10 + trial);
    const FilterState fs = filter_update(in.spec, in.a.measured,
                                         1e-2 * gram_spectrum(in.spec, in.a.measured).eigvals.maxCoeff(), 0.0);
    const std::optional<double> lambda = trial % 2 ? std::optional<double>(1e-3) : std::nullopt;
    const LsProblem prob{in.spec, in.a, fs.d, lambda, 0.5};
    const Eigen::VectorXcd ref = dense_solution(prob);

    ComplexGrid x = in.a.measured;
    admm_ls(prob, x, 10.0, 500);
    CHECK(rel_err(x.values(), ref) < 1e-6);

    ComplexGrid y = in.a.measured;
    const CgReport rep = cg_ls(prob, y, 500, 1e-14);
    CHECK(rep.iterations <= 500);
    CHECK(rel_err(y.values(), ref) < 1e-6);
    CHECK(rel_err(y.values(), x.values()) < 1e-5);
  }
  SUBCASE("delta trades off conditioning") {
    // Subproblem met after a few outer iterations.
    const Instance in = pwc({65, 65}, {9, 9}, 0.5, 30);
    SolverConfig warm;
    warm.outer_iters = 3;
    const RecoveryTrace tr = giraf_solve(in.spec, in.a, warm);
    const FilterState fs = filter_update(in.spec, tr.x, tr.records.back().eps, 0.0);
    const LsProblem prob{in.spec, in.a, fs.d, std::nullopt, 0.5};
    ComplexGrid ref = tr.x;
    cg_ls(prob, ref, 5000, 1e-14);
    auto nmsd_after = [&](double delta) {
      ComplexGrid x = tr.x;
      admm_ls(prob, x, delta, 50);
      return (x.values() - ref.values()).squaredNorm() / ref.values().squaredNorm();
    };
    const double mid = nmsd_after(10.0);
    CHECK(mid < nmsd_after(1.0));
    CHECK(mid < nmsd_after(1e4));
  }
  SUBCASE("unsampled entries the penalty cannot see") {
    const Instance in = pwc({9, 9}, {3, 3}, 1.0, 5);
    SamplingOp a = in.a;
    a.mask.at({0, 0}) = false;
    a.measured.at({0, 0}) = 0.0;
    const RealGrid d = RealGrid::Constant(in.spec.data_box(), 1.0);
    ComplexGrid x = a.measured;
    CHECK_THROWS_AS(admm_ls(LsProblem{in.spec, a, d, std::nullopt, 0.5}, x, 10.0, 5), ConfigError);
  }
}

TEST_CASE("conjugate gradients") {
  Rng rng(23);
  const Index n = 12;
  SUBCASE("diagonal operator") {
    Eigen::VectorXd diag(n);
    for (Index i = 0; i < n; ++i) diag[i] = 1.0 + static_cast<double>(i % 4);
    const LinearOp op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return diag.cast<cplx>().cwiseProduct(v); };
    Eigen::VectorXcd rhs(n);
    for (Index i = 0; i < n; ++i) rhs[i] = rng.complex_normal();
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
    const CgReport rep = conjugate_gradient(op, rhs, x, 4, 1e-13);
    CHECK(rep.iterations <= 4);
    CHECK((x - rhs.cwiseQuotient(diag.cast<cplx>())).norm() < 1e-12);
  }
  SUBCASE("error decreases in the operator norm") {
    const DenseMatrix b = testing::random_matrix(n, n, rng);
    const DenseMatrix a = b.adjoint() * b + 0.1 * DenseMatrix::Identity(n, n);
    const LinearOp op = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return a * v; };
    Eigen::VectorXcd rhs(n);
    for (Index i = 0; i < n; ++i) rhs[i] = rng.complex_normal();
    const Eigen::VectorXcd sol = a.ldlt().solve(rhs);
    auto a_norm = [&](const Eigen::VectorXcd& v) { return std::sqrt((v - sol).dot(a * (v - sol)).real()); };
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
    std::vector<double> errs{a_norm(x)};
    conjugate_gradient(op, rhs, x, 3 * n, 0.0, [&](int, const Eigen::VectorXcd& v) { errs.push_back(a_norm(v)); });
    for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] <= errs[i - 1] * (1 + 1e-12) + 1e-12);
    CHECK(a_norm(x) < 1e-8);
  }
}

TEST_CASE("giraf") {
  SUBCASE("fully sampled data is reproduced") {
    for (double p : {0.0, 0.5, 1.0}) {
      const Instance in = diracs(31, 5, 1.0, 40);
      SolverConfig cfg;
      cfg.p = p;
      cfg.outer_iters = 1;
      const RecoveryTrace tr = giraf_solve(in.spec, in.a, cfg, &in.truth);
      CHECK(tr.records.size() == 2);
      CHECK(tr.records[0].iter == 0);
      CHECK(nmse(tr.x, in.truth) < 1e-28);
    }
  }
  SUBCASE("diracs: p = 0 beats p = 1") {
    const IndexBox data = IndexBox::centered({127});
    LiftingSpec spec(data, IndexBox::centered({15}), {Weighting::identity()});
    const ComplexGrid truth = dirac_fourier(random_diracs(4, 2.0 / 15, 1000), data);
    const SamplingOp a = sample(truth, random_mask(data, 0.5, 2000, false));
    SolverConfig cfg;
    cfg.outer_iters = 100;
    cfg.admm_iters = 50;
    cfg.oversample = true;
    cfg.oversample_factor = 2.0;
    const RecoveryTrace t0 = giraf_solve(spec, a, cfg, &truth);
    cfg.p = 1.0;
    const RecoveryTrace t1 = giraf_solve(spec, a, cfg, &truth);
    CHECK(t0.records.back().nmse <= 1e-4);
    CHECK(t1.records.back().nmse > t0.records.back().nmse);
    CHECK(t0.x.box() == data);
  }
  SUBCASE("oversampled grids") {
    const LiftingSpec spec(IndexBox::centered({127}), IndexBox::centered({15}), {Weighting::identity()});
    SolverConfig cfg;
    CHECK(solve_box(spec, cfg) == spec.data_box());
    cfg.oversample = true;
    CHECK(solve_box(spec, cfg).extent(0) == 127 + 2 * 14);
    cfg.oversample_factor = 2.0;
    CHECK(solve_box(spec, cfg).extent(0) == 255);
    cfg.oversample_factor = 1.0;
    CHECK(solve_box(spec, cfg).extent(0) == 127);
  }
  SUBCASE("trace without ground truth") {
    const Instance in = diracs(31, 5, 0.6, 41);
    SolverConfig cfg;
    cfg.outer_iters = 3;
    const RecoveryTrace tr = giraf_solve(in.spec, in.a, cfg);
    CHECK(tr.iterations() == 3);
    CHECK(std::isnan(tr.records.back().nmse));
  }
  SUBCASE("tolerance stops early") {
    const Instance in = diracs(63, 9, 0.6, 42);
    SolverConfig cfg;
    cfg.outer_iters = 200;
    cfg.tol = 1e-6;
    const RecoveryTrace tr = giraf_solve(in.spec, in.a, cfg, &in.truth);
    CHECK(tr.converged);
    CHECK(tr.iterations() < 200);
  }
  SUBCASE("box mismatch") {
    const Instance in = diracs(31, 5, 0.6, 43);
    const Instance other = diracs(33, 5, 0.6, 43);
    CHECK_THROWS_AS(giraf_solve(in.spec, other.a, SolverConfig{}), DataError);
  }
}
