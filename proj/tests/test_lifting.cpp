#include "doctest.h"

#include "cslr/lifting.hpp"
#include "cslr/models.hpp"
#include "support.hpp"

using namespace cslr;
using testing::random_grid;

namespace {

Eigen::VectorXcd stacked(const std::vector<ComplexGrid>& blocks) {
  Index n = 0;
  for (const ComplexGrid& b : blocks) n += b.size();
  Eigen::VectorXcd out(n);
  Index at = 0;
  for (const ComplexGrid& b : blocks) {
    out.segment(at, b.size()) = b.values();
    at += b.size();
  }
  return out;
}

}  // namespace

TEST_CASE("apply_lift") {
  Rng rng(11);
  SUBCASE("identity weighting, delta filter") {
    const IndexBox data = IndexBox::centered({8, 7});
    LiftingSpec spec(data, IndexBox::centered({3, 3}), {Weighting::identity()});
    const ComplexGrid x = random_grid(data, rng);
    ComplexGrid h(spec.filter_box());
    h.at({0, 0}) = 1.0;
    const auto out = apply_lift(spec, x, h);
    REQUIRE(out.size() == 1);
    CHECK(testing::max_abs(out[0].values() - restrict(x, spec.valid_box()).values()) < 1e-13);
  }
  SUBCASE("gradient lifting against the dense matrix") {
    const IndexBox data = IndexBox::centered({8, 8});
    LiftingSpec spec(data, IndexBox::centered({3, 3}), gradient_weighting(data));
    const ComplexGrid x = random_grid(data, rng);
    const ComplexGrid h = random_grid(spec.filter_box(), rng);
    const Eigen::VectorXcd dense = materialize_exact(spec, x) * h.values();
    CHECK(testing::max_abs(stacked(apply_lift(spec, x, h)) - dense) < 1e-12);
  }
  SUBCASE("filter support away from the origin") {
    const IndexBox data({-5, 0}, {12, 6});
    LiftingSpec spec(data, IndexBox({2, -3}, {4, 2}), {Weighting::identity()});
    CHECK_FALSE(data.contains(spec.valid_box()));
    const ComplexGrid x = random_grid(data, rng);
    const ComplexGrid h = random_grid(spec.filter_box(), rng);
    CHECK(testing::max_abs(stacked(apply_lift(spec, x, h)) - linear_conv_valid(x, h).values()) < 1e-12);
  }
  SUBCASE("linear in x and h") {
    const IndexBox data = IndexBox::centered({11});
    LiftingSpec spec(data, IndexBox({0}, {4}), {Weighting::identity()});
    const ComplexGrid x1 = random_grid(data, rng), x2 = random_grid(data, rng);
    const ComplexGrid h1 = random_grid(spec.filter_box(), rng), h2 = random_grid(spec.filter_box(), rng);
    const cplx a(0.3, -1.2);
    const ComplexGrid xs(data, x1.values() + a * x2.values());
    const ComplexGrid hs(spec.filter_box(), h1.values() + a * h2.values());
    CHECK(testing::max_abs(stacked(apply_lift(spec, xs, h1)) - stacked(apply_lift(spec, x1, h1)) -
                           a * stacked(apply_lift(spec, x2, h1))) < 1e-12);
    CHECK(testing::max_abs(stacked(apply_lift(spec, x1, hs)) - stacked(apply_lift(spec, x1, h1)) -
                           a * stacked(apply_lift(spec, x1, h2))) < 1e-12);
  }
}

TEST_CASE("materialize_exact") {
  SUBCASE("small Toeplitz by hand") {
    ComplexGrid y(IndexBox({0}, {5}));
    for (Index i = 0; i < 5; ++i) y[i] = static_cast<double>(10 * i);
    LiftingSpec spec(y.box(), IndexBox({0}, {2}), {Weighting::identity()});
    const DenseMatrix t = materialize_exact(spec, y);
    REQUIRE(t.rows() == 4);
    REQUIRE(t.cols() == 2);
    for (Index r = 0; r < 4; ++r) {
      CHECK(t(r, 0) == y[r + 1]);
      CHECK(t(r, 1) == y[r]);
    }
  }
  SUBCASE("65x65 gradient lifting dimensions") {
    const IndexBox data = IndexBox::centered({65, 65});
    LiftingSpec spec(data, IndexBox::centered({9, 9}), gradient_weighting(data));
    CHECK(spec.exact_rows() == 6498);
    CHECK(spec.filter_size() == 81);
  }
  SUBCASE("definition and columns") {
    Rng rng(12);
    const IndexBox data({-3, 1}, {7, 6});
    LiftingSpec spec(data, IndexBox({-1, 0}, {3, 2}), gradient_weighting(data));
    const ComplexGrid x = random_grid(data, rng);
    const DenseMatrix t = materialize_exact(spec, x);
    CHECK((t - testing::brute_lifting(spec, x, false)).cwiseAbs().maxCoeff() < 1e-12);
    for (Index c = 0; c < spec.filter_size(); ++c) {
      ComplexGrid unit(spec.filter_box());
      unit[c] = 1.0;
      CHECK(testing::max_abs(t.col(c) - stacked(apply_lift(spec, x, unit))) < 1e-12);
    }
  }
}

TEST_CASE("materialize_surrogate") {
  Rng rng(13);
  SUBCASE("1-D circulant section") {
    ComplexGrid y(IndexBox({0}, {5}));
    for (Index i = 0; i < 5; ++i) y[i] = static_cast<double>(i + 1);
    LiftingSpec spec(y.box(), IndexBox({0}, {2}), {Weighting::identity()});
    const DenseMatrix t = materialize_surrogate(spec, y);
    REQUIRE(t.rows() == 5);
    CHECK(t(0, 0) == y[0]);
    CHECK(t(0, 1) == y[4]);  // wrap-around row
    for (Index r = 1; r < 5; ++r) {
      CHECK(t(r, 0) == y[r]);
      CHECK(t(r, 1) == y[r - 1]);
    }
  }
  SUBCASE("contains every exact row") {
    const IndexBox data = IndexBox::centered({6, 7});
    LiftingSpec spec(data, IndexBox::centered({3, 2}), gradient_weighting(data));
    const ComplexGrid x = random_grid(data, rng);
    const DenseMatrix exact = materialize_exact(spec, x);
    const DenseMatrix sur = materialize_surrogate(spec, x);
    CHECK((sur - testing::brute_lifting(spec, x, true)).cwiseAbs().maxCoeff() < 1e-12);
    for (Index r = 0; r < exact.rows(); ++r) {
      double best = std::numeric_limits<double>::infinity();
      for (Index s = 0; s < sur.rows(); ++s) best = std::min(best, (sur.row(s) - exact.row(r)).norm());
      CHECK(best < 1e-12);
    }
  }
  SUBCASE("singular values dominate") {
    for (int trial = 0; trial < 5; ++trial) {
      const IndexBox data = IndexBox::centered({9, 8});
      LiftingSpec spec(data, IndexBox::centered({3, 3}),
                       trial % 2 ? gradient_weighting(data) : std::vector{Weighting::identity()});
      const ComplexGrid x = random_grid(data, rng);
      const Eigen::VectorXd se = singular_values_dense(materialize_exact(spec, x));
      const Eigen::VectorXd ss = singular_values_dense(materialize_surrogate(spec, x));
      for (Index i = 0; i < se.size(); ++i) CHECK(se[i] <= ss[i] + 1e-10);
    }
  }
}

TEST_CASE("Gram matrix of the surrogate") {
  Rng rng(14);
  for (const IndexVec& ext : {IndexVec{17}, IndexVec{9, 8}}) {
    const IndexBox data = IndexBox::centered(ext);
    const IndexBox filt = IndexBox::centered(IndexVec(ext.size(), 3));
    for (bool grad : {false, true}) {
      if (grad && ext.size() != 2) continue;
      LiftingSpec spec(data, filt, grad ? gradient_weighting(data) : std::vector{Weighting::identity()});
      const ComplexGrid x = random_grid(data, rng);
      const DenseMatrix s = materialize_surrogate(spec, x);
      const DenseMatrix ref = s.adjoint() * s;
      CHECK((gram_surrogate(spec, x) - ref).norm() / ref.norm() < 1e-10);
    }
  }
  SUBCASE("zero data") {
    const IndexBox data = IndexBox::centered({7, 7});
    LiftingSpec spec(data, IndexBox::centered({3, 3}), gradient_weighting(data));
    CHECK(gram_surrogate(spec, ComplexGrid(data)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("1-D delta") {
    // Every column of the surrogate is a shifted delta: G = I.
    const IndexBox data = IndexBox::centered({11});
    LiftingSpec spec(data, IndexBox::centered({5}), {Weighting::identity()});
    ComplexGrid x(data);
    x.at({0}) = 1.0;
    const DenseMatrix g = gram_surrogate(spec, x);
    const DenseMatrix s = testing::brute_lifting(spec, x, true);
    CHECK((g - s.adjoint() * s).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g - DenseMatrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("singular_values_dense") {
  DenseMatrix d = DenseMatrix::Zero(3, 3);
  d(0, 0) = -1.0;
  d(1, 1) = cplx(0.0, 4.0);
  d(2, 2) = 2.0;
  const Eigen::VectorXd s = singular_values_dense(d);
  CHECK(s[0] == doctest::Approx(4.0));
  CHECK(s[1] == doctest::Approx(2.0));
  CHECK(s[2] == doctest::Approx(1.0));
  CHECK((singular_values_dense(DenseMatrix::Identity(6, 6)).array() - 1.0).abs().maxCoeff() < 1e-14);

  Rng rng(15);
  const DenseMatrix m = testing::random_matrix(20, 8, rng);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.adjoint() * m);
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  const Eigen::VectorXd sv = singular_values_dense(m);
  CHECK((sv.array().square() - ev.array()).abs().maxCoeff() < 1e-9);
}

TEST_CASE("adjoint and structured projection") {
  Rng rng(16);
  const IndexBox data = IndexBox::centered({7, 6});
  LiftingSpec spec(data, IndexBox::centered({3, 2}), gradient_weighting(data));
  const ComplexGrid x = random_grid(data, rng);
  const DenseMatrix y = testing::random_matrix(spec.exact_rows(), spec.filter_size(), rng);
  const DenseMatrix tx = materialize_exact(spec, x);
  const cplx lhs = (tx.adjoint() * y).trace();
  const cplx rhs = inner(x, lift_adjoint_exact(spec, y));
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));

  // Diagonal of T^* T by applying T^* T to unit vectors.
  const RealGrid diag = exact_normal_diagonal(spec);
  for (Index k = 0; k < data.size(); k += 5) {
    ComplexGrid e(data);
    e[k] = 1.0;
    const ComplexGrid te = lift_adjoint_exact(spec, materialize_exact(spec, e));
    CHECK(std::abs(te[k] - diag[k]) < 1e-10);
  }

  // T^dagger(T(x)) = x wherever the lifting sees x; the DC entry is invisible
  // to the gradient weighting and comes from the fallback.
  ComplexGrid fallback = random_grid(data, rng);
  const ComplexGrid back = structured_projection(spec, tx, fallback);
  for (Index k = 0; k < data.size(); ++k) {
    if (diag[k] > 0)
      CHECK(std::abs(back[k] - x[k]) < 1e-10);
    else
      CHECK(back[k] == fallback[k]);
  }
  LiftingSpec plain(data, IndexBox::centered({3, 2}), {Weighting::identity()});
  const ComplexGrid back2 = structured_projection(plain, materialize_exact(plain, x), fallback);
  CHECK(testing::max_abs(back2.values() - x.values()) < 1e-12);
}

TEST_CASE("dense budget") {
  CHECK_NOTHROW(require_dense_budget(1000, 1000, "test"));
  CHECK_THROWS_AS(require_dense_budget(100000, 1000, "test"), BudgetError);
}
