#include "cslr/schatten.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace cslr {

namespace {

Eigen::VectorXd gram_eigenvalues(const DenseMatrix& m) {
  require_dense_budget(m.rows(), m.cols(), "smoothed_schatten");
  const DenseMatrix g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("eigendecomposition failed");
  return es.eigenvalues().cwiseMax(0.0);
}

// f(Y) = Y^{p/2} (p > 0) or 1/2 log Y, and its derivative f'(Y), on a
// Hermitian positive definite Y.
struct SpectralPair {
  double value = 0.0;
  DenseMatrix derivative;
};

SpectralPair penalty_and_gradient(const DenseMatrix& y, double p) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(y);
  if (es.info() != Eigen::Success) throw SolverError("eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  Eigen::VectorXd df(ev.size());
  SpectralPair out;
  for (Index i = 0; i < ev.size(); ++i) {
    if (!(ev[i] > 0.0)) throw DataError("majorizer: matrix is not positive definite");
    if (p > 0.0) {
      out.value += std::pow(ev[i], p / 2.0);
      df[i] = (p / 2.0) * std::pow(ev[i], p / 2.0 - 1.0);
    } else {
      out.value += 0.5 * std::log(ev[i]);
      df[i] = 0.5 / ev[i];
    }
  }
  out.derivative = es.eigenvectors() * df.asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

}  // namespace

double schatten_p(const DenseMatrix& m, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("schatten_p: p must lie in [0, 1]");
  const Eigen::VectorXd s = singular_values_dense(m);
  if (p == 0.0) {
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
      if (!(s[i] > 0.0)) throw DataError("schatten_p: log of a zero singular value");
      acc += std::log(s[i]);
    }
    return acc;
  }
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) acc += std::pow(s[i], p);
  return std::pow(acc, 1.0 / p);
}

double smoothed_schatten_from_gram(const Eigen::VectorXd& gram_eigvals, double p, double eps) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("smoothed_schatten: p must lie in [0, 1]");
  if (!(eps >= 0.0)) throw ConfigError("smoothed_schatten: eps must be >= 0");
  double acc = 0.0;
  for (Index i = 0; i < gram_eigvals.size(); ++i) {
    const double y = std::max(gram_eigvals[i], 0.0) + eps;
    if (p > 0.0) {
      acc += std::pow(y, p / 2.0);
    } else {
      if (!(y > 0.0)) throw DataError("smoothed_schatten: log det of a singular matrix");
      acc += 0.5 * std::log(y);
    }
  }
  return acc;
}

double smoothed_schatten(const DenseMatrix& m, double p, double eps) {
  return smoothed_schatten_from_gram(gram_eigenvalues(m), p, eps);
}

double majorizer_gap(const DenseMatrix& x, const DenseMatrix& x0, double p, double eps) {
  if (!(eps > 0.0)) throw ConfigError("majorizer_gap: eps must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("majorizer_gap: p must lie in [0, 1]");
  if (x.rows() != x0.rows() || x.cols() != x0.cols())
    throw DataError("majorizer_gap: shape mismatch");
  require_dense_budget(x.rows(), x.cols(), "majorizer_gap");
  const Index n = x.cols();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  const DenseMatrix y = x.adjoint() * x + eps * id;
  const DenseMatrix y0 = x0.adjoint() * x0 + eps * id;
  const SpectralPair at = penalty_and_gradient(y, p);
  const SpectralPair tangent = penalty_and_gradient(y0, p);
  const double linear = (tangent.derivative * (y - y0)).trace().real();
  return tangent.value + linear - at.value;
}

Index numerical_rank(const Eigen::VectorXd& s, double rel) {
  if (s.size() == 0) return 0;
  const double top = s.maxCoeff();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > rel * top) ++r;
  return r;
}

DenseMatrix singular_value_threshold(const DenseMatrix& y, double tau) {
  require_dense_budget(y.rows(), y.cols(), "singular_value_threshold");
  Eigen::BDCSVD<DenseMatrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = (svd.singularValues().array() - tau).cwiseMax(0.0);
  Index k = 0;
  while (k < s.size() && s[k] > 0.0) ++k;
  return svd.matrixU().leftCols(k) * s.head(k).asDiagonal() * svd.matrixV().leftCols(k).adjoint();
}

DenseMatrix truncate_rank(const DenseMatrix& y, Index r) {
  require_dense_budget(y.rows(), y.cols(), "truncate_rank");
  Eigen::BDCSVD<DenseMatrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index k = std::min<Index>(r, svd.singularValues().size());
  return svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
         svd.matrixV().leftCols(k).adjoint();
}

}  // namespace cslr
