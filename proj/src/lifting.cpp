#include "cslr/lifting.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <string>

#include "cslr/fft.hpp"

namespace cslr {

void require_dense_budget(Index rows, Index cols, const char* what) {
  if (rows <= 0 || cols <= 0 || rows > kDenseBudget / cols)
    throw BudgetError(std::string(what) + ": " + std::to_string(rows) + " x " +
                      std::to_string(cols) + " exceeds the dense budget");
}

Weighting Weighting::identity() { return Weighting{}; }

Weighting Weighting::fourier_derivative(std::size_t axis) {
  Weighting w;
  w.kind_ = Kind::fourier_derivative;
  w.axis_ = axis;
  return w;
}

Weighting Weighting::elementwise(ComplexGrid weights) {
  Weighting w;
  w.kind_ = Kind::elementwise;
  w.weights_ = std::move(weights);
  return w;
}

Eigen::VectorXcd Weighting::diagonal(const IndexBox& box) const {
  switch (kind_) {
    case Kind::identity:
      return Eigen::VectorXcd::Ones(box.size());
    case Kind::fourier_derivative: {
      if (axis_ >= box.ndim()) throw ConfigError("fourier_derivative: axis out of range");
      Eigen::VectorXcd w(box.size());
      const double two_pi = 2.0 * std::numbers::pi;
      for_each_index(box, [&](const IndexVec& k, Index lin) {
        w[lin] = cplx(0.0, two_pi * static_cast<double>(k[axis_]));
      });
      return w;
    }
    case Kind::elementwise:
      if (weights_.box() != box)
        throw ConfigError("elementwise weighting defined on " + weights_.box().str() +
                          ", requested on " + box.str());
      return weights_.values();
  }
  return {};
}

LiftingSpec::LiftingSpec(IndexBox data_box, IndexBox filter_box,
                         std::vector<Weighting> weightings)
    : data_box_(std::move(data_box)),
      filter_box_(std::move(filter_box)),
      weightings_(std::move(weightings)) {
  if (weightings_.empty()) throw ConfigError("LiftingSpec: at least one block is required");
  valid_box_ = valid_set(data_box_, filter_box_);
  difference_box_ = minkowski_sum(filter_box_, reflect(filter_box_));
  energy_ = Eigen::VectorXd::Zero(data_box_.size());
  for (const auto& w : weightings_) {
    diagonals_.push_back(w.diagonal(data_box_));
    energy_ += diagonals_.back().cwiseAbs2();
  }
}

ComplexGrid LiftingSpec::weighted(std::size_t j, const ComplexGrid& x) const {
  if (x.box() != data_box_)
    throw DataError("lifting: data " + x.box().str() + " does not match " + data_box_.str());
  return ComplexGrid(data_box_, x.values().cwiseProduct(diagonals_[j]));
}

LiftingSpec LiftingSpec::with_data_box(const IndexBox& box) const {
  return LiftingSpec(box, filter_box_, weightings_);
}

std::vector<ComplexGrid> apply_lift(const LiftingSpec& spec, const ComplexGrid& x,
                                    const ComplexGrid& h) {
  if (h.box() != spec.filter_box())
    throw DataError("apply_lift: filter " + h.box().str() + " does not match " +
                    spec.filter_box().str());
  std::vector<ComplexGrid> out;
  out.reserve(spec.blocks());
  const IndexBox& data = spec.data_box();
  const IndexBox& gamma = spec.valid_box();
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    // The valid set may stick out of the data box when the filter support
    // excludes the origin; read it off the torus.
    const ComplexGrid full = circ_conv(spec.weighted(j, x), h);
    ComplexGrid y(gamma);
    for_each_index(gamma, [&](const IndexVec& k, Index lin) { y[lin] = full[data.wrap_linear(k)]; });
    out.push_back(std::move(y));
  }
  return out;
}

namespace {

template <typename RowBox, typename Lookup>
DenseMatrix materialize(const LiftingSpec& spec, const ComplexGrid& x, const RowBox& rows,
                        Lookup&& lookup) {
  const Index n = spec.filter_size();
  const Index per_block = rows.size();
  require_dense_budget(per_block * static_cast<Index>(spec.blocks()), n, "materialize");
  DenseMatrix m(per_block * static_cast<Index>(spec.blocks()), n);
  IndexVec diff(rows.ndim());
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    const ComplexGrid y = spec.weighted(j, x);
    for_each_index(rows, [&](const IndexVec& k, Index r) {
      for_each_index(spec.filter_box(), [&](const IndexVec& l, Index c) {
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = k[i] - l[i];
        m(static_cast<Index>(j) * per_block + r, c) = y[lookup(diff)];
      });
    });
  }
  return m;
}

}  // namespace

DenseMatrix materialize_exact(const LiftingSpec& spec, const ComplexGrid& x) {
  const IndexBox& data = spec.data_box();
  return materialize(spec, x, spec.valid_box(),
                     [&](const IndexVec& k) { return data.linear(k); });
}

DenseMatrix materialize_surrogate(const LiftingSpec& spec, const ComplexGrid& x) {
  const IndexBox& data = spec.data_box();
  return materialize(spec, x, data, [&](const IndexVec& k) { return data.wrap_linear(k); });
}

Eigen::VectorXcd gram_generator(const LiftingSpec& spec, const ComplexGrid& x) {
  const IndexBox& box = spec.data_box();
  const IndexVec& ext = box.extent();
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(box.size());
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    Eigen::VectorXcd s = spec.weighted(j, x).values();
    idft_inplace(s, ext);
    g += s.cwiseAbs2().cast<cplx>();
  }
  dft_inplace(g, ext);
  g *= std::sqrt(static_cast<double>(box.size()));
  return g;
}

DenseMatrix gram_surrogate(const LiftingSpec& spec, const ComplexGrid& x) {
  const Eigen::VectorXcd g = gram_generator(spec, x);
  const IndexBox& data = spec.data_box();
  const IndexBox& filt = spec.filter_box();
  const Index n = filt.size();
  std::vector<IndexVec> pts(static_cast<std::size_t>(n));
  for_each_index(filt, [&](const IndexVec& k, Index lin) { pts[lin] = k; });
  DenseMatrix G(n, n);
  IndexVec diff(filt.ndim());
  for (Index b = 0; b < n; ++b) {
    for (Index a = b; a < n; ++a) {
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pts[a][i] - pts[b][i];
      const cplx v = g[data.origin_linear(diff)];
      G(a, b) = v;
      G(b, a) = std::conj(v);
    }
    G(b, b) = cplx(G(b, b).real(), 0.0);
  }
  return G;
}

Eigen::VectorXd singular_values_dense(const DenseMatrix& m) {
  require_dense_budget(m.rows(), m.cols(), "singular_values_dense");
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

ComplexGrid lift_adjoint_exact(const LiftingSpec& spec, const DenseMatrix& X) {
  const IndexBox& data = spec.data_box();
  const IndexBox& gamma = spec.valid_box();
  if (X.rows() != spec.exact_rows() || X.cols() != spec.filter_size())
    throw DataError("lift_adjoint_exact: matrix shape does not match the lifting");
  Eigen::VectorXcd acc(data.size());
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(data.size());
  IndexVec diff(data.ndim());
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    acc.setZero();
    const Index base = static_cast<Index>(j) * gamma.size();
    for_each_index(gamma, [&](const IndexVec& k, Index r) {
      for_each_index(spec.filter_box(), [&](const IndexVec& l, Index c) {
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = k[i] - l[i];
        acc[data.linear(diff)] += X(base + r, c);
      });
    });
    out += spec.weights(j).conjugate().cwiseProduct(acc);
  }
  return ComplexGrid(data, std::move(out));
}

RealGrid exact_normal_diagonal(const LiftingSpec& spec) {
  const IndexBox& data = spec.data_box();
  const IndexBox& gamma = spec.valid_box();
  const IndexBox& filt = spec.filter_box();
  // Multiplicity factorizes over axes: count pairs (g, l) with g - l = k.
  std::vector<std::vector<double>> axis_counts(data.ndim());
  for (std::size_t i = 0; i < data.ndim(); ++i) {
    auto& counts = axis_counts[i];
    counts.assign(static_cast<std::size_t>(data.extent(i)), 0.0);
    for (Index g = gamma.offset(i); g < gamma.end(i); ++g)
      for (Index l = filt.offset(i); l < filt.end(i); ++l)
        counts[static_cast<std::size_t>(g - l - data.offset(i))] += 1.0;
  }
  RealGrid diag(data);
  for_each_index(data, [&](const IndexVec& k, Index lin) {
    double m = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i)
      m *= axis_counts[i][static_cast<std::size_t>(k[i] - data.offset(i))];
    diag[lin] = m * spec.weight_energy()[lin];
  });
  return diag;
}

ComplexGrid structured_projection(const LiftingSpec& spec, const DenseMatrix& X,
                                  const ComplexGrid& fallback) {
  if (fallback.box() != spec.data_box()) throw DataError("structured_projection: box mismatch");
  ComplexGrid z = lift_adjoint_exact(spec, X);
  const RealGrid diag = exact_normal_diagonal(spec);
  for (Index i = 0; i < z.size(); ++i) z[i] = diag[i] > 0.0 ? z[i] / diag[i] : fallback[i];
  return z;
}

}  // namespace cslr
