#include "doctest.h"

#include "cslr/schatten.hpp"
#include "support.hpp"

using namespace cslr;

TEST_CASE("schatten quasi-norms") {
  CHECK(schatten_p(DenseMatrix::Identity(5, 5), 1.0) == doctest::Approx(5.0));
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  CHECK(schatten_p(d, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(smoothed_schatten(d, 0.0, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(schatten_p(DenseMatrix::Zero(2, 2), 0.0), DataError);

  Rng rng(31);
  const DenseMatrix x = testing::random_matrix(9, 5, rng);
  const Eigen::VectorXd s = singular_values_dense(x);
  for (double p : {0.25, 0.5, 1.0}) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(x.adjoint() * x);
    const double trace = es.eigenvalues().array().pow(p / 2).sum();
    CHECK(std::abs(std::pow(trace, 1.0 / p) - schatten_p(x, p)) < 1e-10 * schatten_p(x, p));
    CHECK(std::abs(s.array().pow(p).sum() - std::pow(schatten_p(x, p), p)) < 1e-10 * trace);
    CHECK(smoothed_schatten(x, p, 0.3) ==
          doctest::Approx((s.array().square() + 0.3).pow(p / 2).sum()).epsilon(1e-12));
  }
  // Columns beyond the rank count as zero singular values.
  const DenseMatrix wide = testing::random_matrix(2, 4, rng);
  const Eigen::VectorXd sw = singular_values_dense(wide);
  CHECK(smoothed_schatten(wide, 0.0, 0.5) ==
        doctest::Approx(0.5 * ((sw.array().square() + 0.5).log().sum() + 2 * std::log(0.5))));
}

TEST_CASE("majorizer gap") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const DenseMatrix x = testing::random_matrix(10, 6, rng);
    const DenseMatrix x0 = testing::random_matrix(10, 6, rng);
    const double p = std::vector<double>{0.0, 0.5, 1.0}[trial % 3];
    const double eps = std::pow(10.0, rng.uniform(-4.0, 1.0));
    CHECK(majorizer_gap(x, x0, p, eps) >= -1e-10);
    CHECK(std::abs(majorizer_gap(x0, x0, p, eps)) < 1e-10);
    CHECK(majorizer_gap(x, rng.uniform(0.01, 100.0) * x0, p, eps) >= -1e-10);
  }
}

TEST_CASE("rank helpers") {
  const Eigen::VectorXd s = (Eigen::VectorXd(4) << 10.0, 1.0, 1e-3, 0.0).finished();
  CHECK(numerical_rank(s, 1e-2) == 2);
  CHECK(numerical_rank(s, 1e-5) == 3);

  Rng rng(33);
  const DenseMatrix low = testing::random_matrix(12, 3, rng) * testing::random_matrix(3, 8, rng);
  CHECK((truncate_rank(low, 3) - low).norm() < 1e-10 * low.norm());
  CHECK((truncate_rank(low, 2) - low).norm() > 1e-3 * low.norm());
  const Eigen::VectorXd st = singular_values_dense(truncate_rank(testing::random_matrix(8, 8, rng), 4));
  CHECK(st[4] < 1e-10 * st[0]);
}

TEST_CASE("singular value thresholding") {
  Rng rng(34);
  const DenseMatrix y = testing::random_matrix(7, 5, rng);
  const double s1 = singular_values_dense(y)[0];
  CHECK(singular_value_threshold(y, 1.01 * s1).norm() == 0.0);

  // Diagonal Y: the prox decouples into scalar soft thresholds.
  const std::vector<double> diag{3.0, 1.5, 0.7, 0.2};
  DenseMatrix yd = DenseMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) yd(i, i) = diag[i];
  const double tau = 0.6;
  const DenseMatrix xd = singular_value_threshold(yd, tau);
  for (int i = 0; i < 4; ++i) {
    double best = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (int g = -4000; g <= 4000; ++g) {
      const double v = g * 1e-3;
      const double f = 0.5 * (v - diag[i]) * (v - diag[i]) + tau * std::abs(v);
      if (f < best_val) best_val = f, best = v;
    }
    CHECK(std::abs(xd(i, i) - best) < 1e-3);
  }

  // Optimality against random perturbations for a general matrix.
  const DenseMatrix x = singular_value_threshold(y, 0.8);
  auto objective = [&](const DenseMatrix& m) {
    return 0.5 * (m - y).squaredNorm() + 0.8 * singular_values_dense(m).sum();
  };
  const double fx = objective(x);
  for (int t = 0; t < 20; ++t) CHECK(objective(x + 1e-3 * testing::random_matrix(7, 5, rng)) >= fx - 1e-12);
}
