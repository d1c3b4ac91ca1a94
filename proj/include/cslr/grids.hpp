#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "cslr/errors.hpp"

namespace cslr {

using Index = std::int64_t;
using cplx = std::complex<double>;
using IndexVec = std::vector<Index>;

/// Axis-aligned box of integer indices {k : offset <= k < offset + extent}.
///
/// Linearization is row-major (last axis fastest) with the box offset at
/// linear index 0. Every grid, dense matrix row and column ordering in the
/// library uses this convention.
class IndexBox {
 public:
  IndexBox() = default;
  IndexBox(IndexVec offset, IndexVec extent);

  /// Box of the given extent containing the origin, symmetric for odd extents.
  static IndexBox centered(const IndexVec& extent);
  /// The one-point box {point}.
  static IndexBox single(const IndexVec& point);

  std::size_t ndim() const { return offset_.size(); }
  const IndexVec& offset() const { return offset_; }
  const IndexVec& extent() const { return extent_; }
  Index offset(std::size_t axis) const { return offset_[axis]; }
  Index extent(std::size_t axis) const { return extent_[axis]; }
  /// One past the last index along `axis`.
  Index end(std::size_t axis) const { return offset_[axis] + extent_[axis]; }
  Index size() const { return size_; }

  bool contains(const IndexVec& k) const;
  bool contains(const IndexBox& other) const;

  /// Row-major position of k (which must lie in the box).
  Index linear(const IndexVec& k) const;
  /// Inverse of linear().
  IndexVec point(Index linear) const;
  /// Position of k after reducing each coordinate modulo the extent so that
  /// it lands inside the box (torus view of the box).
  Index wrap_linear(const IndexVec& k) const;
  /// Position of k on the torus anchored at the origin: coordinate k[i] goes
  /// to k[i] mod extent[i]. Used to embed filters for circular convolution.
  Index origin_linear(const IndexVec& k) const;

  /// Row-major strides.
  IndexVec strides() const;

  friend bool operator==(const IndexBox& a, const IndexBox& b) {
    return a.offset_ == b.offset_ && a.extent_ == b.extent_;
  }
  friend bool operator!=(const IndexBox& a, const IndexBox& b) { return !(a == b); }

  std::string str() const;

 private:
  IndexVec offset_;
  IndexVec extent_;
  Index size_ = 0;
};

/// Valid index set of a linear convolution: {k : k - l in data for all l in filt}.
IndexBox valid_set(const IndexBox& data, const IndexBox& filt);
/// {a + b : a in A, b in B}.
IndexBox minkowski_sum(const IndexBox& a, const IndexBox& b);
/// {-k : k in box}.
IndexBox reflect(const IndexBox& box);
/// Box grown by `margin[i]` indices on both sides of every axis.
IndexBox grow(const IndexBox& box, const IndexVec& margin);

/// Visits every index of `box` in row-major order; `f(k, linear)`.
template <typename F>
void for_each_index(const IndexBox& box, F&& f) {
  const std::size_t d = box.ndim();
  if (box.size() == 0) return;
  IndexVec k = box.offset();
  for (Index lin = 0; lin < box.size(); ++lin) {
    f(static_cast<const IndexVec&>(k), lin);
    for (std::size_t i = d; i-- > 0;) {
      if (++k[i] < box.end(i)) break;
      k[i] = box.offset(i);
    }
  }
}

/// Values on an IndexBox, stored row-major.
template <typename T>
class Grid {
 public:
  using Scalar = T;
  using Values = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Grid() = default;
  explicit Grid(IndexBox box) : box_(std::move(box)), values_(Values::Zero(box_.size())) {}
  Grid(IndexBox box, Values values) : box_(std::move(box)), values_(std::move(values)) {
    if (values_.size() != box_.size())
      throw DataError("grid values length " + std::to_string(values_.size()) +
                      " does not match box cardinality " + std::to_string(box_.size()));
  }

  static Grid Zero(const IndexBox& box) { return Grid(box); }
  static Grid Constant(const IndexBox& box, const T& value) {
    return Grid(box, Values::Constant(box.size(), value));
  }

  const IndexBox& box() const { return box_; }
  Index size() const { return box_.size(); }
  const Values& values() const { return values_; }
  Values& values() { return values_; }

  T& operator[](Index lin) { return values_[lin]; }
  const T& operator[](Index lin) const { return values_[lin]; }
  T& at(const IndexVec& k) { return values_[box_.linear(k)]; }
  const T& at(const IndexVec& k) const { return values_[box_.linear(k)]; }

 private:
  IndexBox box_;
  Values values_;
};

using ComplexGrid = Grid<cplx>;
using RealGrid = Grid<double>;
using MaskGrid = Grid<bool>;

namespace detail {

inline cplx conj_value(const cplx& v) { return std::conj(v); }
inline double conj_value(double v) { return v; }

void require_same_ndim(const IndexBox& a, const IndexBox& b, const char* what);

}  // namespace detail

/// Values of `x` at the indices of `sub`, which must lie inside x.box().
template <typename T>
Grid<T> restrict(const Grid<T>& x, const IndexBox& sub) {
  detail::require_same_ndim(x.box(), sub, "restrict");
  if (!x.box().contains(sub))
    throw DataError("restrict: " + sub.str() + " is not contained in " + x.box().str());
  Grid<T> out(sub);
  for_each_index(sub, [&](const IndexVec& k, Index lin) { out[lin] = x.at(k); });
  return out;
}

/// Embeds `x` into `target` (which must contain x.box()), zero elsewhere.
/// Adjoint of restrict().
template <typename T>
Grid<T> zero_pad(const Grid<T>& x, const IndexBox& target) {
  detail::require_same_ndim(x.box(), target, "zero_pad");
  if (!target.contains(x.box()))
    throw DataError("zero_pad: " + x.box().str() + " is not contained in " + target.str());
  Grid<T> out(target);
  for_each_index(x.box(), [&](const IndexVec& k, Index lin) { out.at(k) = x[lin]; });
  return out;
}

/// h~[k] = conj(h[-k]), supported on the reflected box.
template <typename T>
Grid<T> reverse_conjugate(const Grid<T>& h) {
  const IndexBox rbox = reflect(h.box());
  Grid<T> out(rbox);
  const Index n = h.size();
  // Row-major reversal of a box is a reversal of the linear order.
  for (Index i = 0; i < n; ++i) out[i] = detail::conj_value(h[n - 1 - i]);
  return out;
}

/// Sum of h[l] into position (l mod extent) of a torus with the box's extent,
/// anchored at the origin. Returns a flat row-major array over the torus.
Eigen::VectorXcd origin_anchored(const ComplexGrid& h, const IndexBox& torus);

/// Circular convolution on y.box() (torus), h wrapped onto the same torus.
ComplexGrid circ_conv(const ComplexGrid& y, const ComplexGrid& h);

/// Direct evaluation of (y * h)[k] = sum_l y[k - l] h[l] on the valid set.
ComplexGrid linear_conv_valid(const ComplexGrid& y, const ComplexGrid& h);

/// Hermitian inner product <a, b> = sum conj(a) b over identical boxes.
cplx inner(const ComplexGrid& a, const ComplexGrid& b);

}  // namespace cslr
