#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "cslr/grids.hpp"
#include "cslr/lifting.hpp"
#include "cslr/models.hpp"

namespace testing {

using namespace cslr;

inline ComplexGrid random_grid(const IndexBox& box, Rng& rng, double scale = 1.0) {
  ComplexGrid g(box);
  for (Index i = 0; i < g.size(); ++i) g[i] = scale * rng.complex_normal();
  return g;
}

inline DenseMatrix random_matrix(Index rows, Index cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = rng.complex_normal();
  return m;
}

// Position of k inside the box (k - offset), per axis.
inline IndexVec position(const IndexBox& box, const IndexVec& k) {
  IndexVec p(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) p[i] = k[i] - box.offset(i);
  return p;
}

inline cplx twiddle(const IndexVec& a, const IndexVec& b, const IndexVec& ext, double sign) {
  double phase = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    phase += static_cast<double>(a[i] * b[i] % ext[i]) / static_cast<double>(ext[i]);
  return std::polar(1.0, sign * 2.0 * std::numbers::pi * phase);
}

// O(L^2) unitary DFT over box positions.
inline ComplexGrid brute_dft(const ComplexGrid& x, double sign = -1.0) {
  const IndexBox& box = x.box();
  ComplexGrid out(box);
  const double scale = 1.0 / std::sqrt(static_cast<double>(box.size()));
  for_each_index(box, [&](const IndexVec& m, Index lm) {
    cplx acc = 0.0;
    for_each_index(box, [&](const IndexVec& n, Index ln) {
      acc += x[ln] * twiddle(position(box, m), position(box, n), box.extent(), sign);
    });
    out[lm] = scale * acc;
  });
  return out;
}

// (y * h)[k] = sum_l h[l] y[k - l], indices of y taken modulo the box.
inline ComplexGrid brute_circ_conv(const ComplexGrid& y, const ComplexGrid& h) {
  const IndexBox& box = y.box();
  ComplexGrid out(box);
  for_each_index(box, [&](const IndexVec& k, Index lk) {
    cplx acc = 0.0;
    for_each_index(h.box(), [&](const IndexVec& l, Index ll) {
      IndexVec kl(k.size());
      for (std::size_t i = 0; i < k.size(); ++i) kl[i] = k[i] - l[i];
      acc += h[ll] * y[box.wrap_linear(kl)];
    });
    out[lk] = acc;
  });
  return out;
}

// Toeplitz lifting by definition: row (j, k), column l holds (M_j x)[k - l].
// With `wrap`, rows run over the data box and k - l wraps around it.
inline DenseMatrix brute_lifting(const LiftingSpec& spec, const ComplexGrid& x, bool wrap) {
  const IndexBox& rows_box = wrap ? spec.data_box() : spec.valid_box();
  const Index rb = rows_box.size();
  DenseMatrix t(static_cast<Index>(spec.blocks()) * rb, spec.filter_size());
  for (std::size_t j = 0; j < spec.blocks(); ++j) {
    const ComplexGrid y = spec.weighted(j, x);
    for_each_index(rows_box, [&](const IndexVec& k, Index lk) {
      for_each_index(spec.filter_box(), [&](const IndexVec& l, Index ll) {
        IndexVec kl(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) kl[i] = k[i] - l[i];
        t(static_cast<Index>(j) * rb + lk, ll) = wrap ? y[spec.data_box().wrap_linear(kl)] : y.at(kl);
      });
    });
  }
  return t;
}

// Unitary DFT matrix over the positions of a box.
inline DenseMatrix dft_matrix(const IndexBox& box) {
  DenseMatrix f(box.size(), box.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(box.size()));
  for_each_index(box, [&](const IndexVec& m, Index lm) {
    for_each_index(box, [&](const IndexVec& n, Index ln) {
      f(lm, ln) = scale * twiddle(position(box, m), position(box, n), box.extent(), -1.0);
    });
  });
  return f;
}

inline double max_abs(const Eigen::VectorXcd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing
