#include "cslr/grids.hpp"

#include <cmath>
#include <sstream>

#include "cslr/fft.hpp"

namespace cslr {

namespace {

Index floor_mod(Index a, Index n) {
  Index r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

IndexBox::IndexBox(IndexVec offset, IndexVec extent)
    : offset_(std::move(offset)), extent_(std::move(extent)) {
  if (offset_.size() != extent_.size())
    throw ConfigError("IndexBox: offset and extent have different lengths");
  if (offset_.empty()) throw ConfigError("IndexBox: zero-dimensional box");
  size_ = 1;
  for (Index e : extent_) {
    if (e < 1) throw ConfigError("IndexBox: extent must be >= 1 on every axis");
    if (size_ > (Index{1} << 40) / e) throw ConfigError("IndexBox: cardinality overflow");
    size_ *= e;
  }
}

IndexBox IndexBox::centered(const IndexVec& extent) {
  IndexVec offset(extent.size());
  for (std::size_t i = 0; i < extent.size(); ++i) offset[i] = -(extent[i] / 2);
  return IndexBox(std::move(offset), extent);
}

IndexBox IndexBox::single(const IndexVec& point) {
  return IndexBox(point, IndexVec(point.size(), 1));
}

bool IndexBox::contains(const IndexVec& k) const {
  if (k.size() != ndim()) return false;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k[i] < offset_[i] || k[i] >= end(i)) return false;
  return true;
}

bool IndexBox::contains(const IndexBox& other) const {
  if (other.ndim() != ndim()) return false;
  for (std::size_t i = 0; i < ndim(); ++i)
    if (other.offset(i) < offset_[i] || other.end(i) > end(i)) return false;
  return true;
}

Index IndexBox::linear(const IndexVec& k) const {
  Index lin = 0;
  for (std::size_t i = 0; i < ndim(); ++i) lin = lin * extent_[i] + (k[i] - offset_[i]);
  return lin;
}

IndexVec IndexBox::point(Index linear) const {
  IndexVec k(ndim());
  for (std::size_t i = ndim(); i-- > 0;) {
    k[i] = offset_[i] + linear % extent_[i];
    linear /= extent_[i];
  }
  return k;
}

Index IndexBox::wrap_linear(const IndexVec& k) const {
  Index lin = 0;
  for (std::size_t i = 0; i < ndim(); ++i)
    lin = lin * extent_[i] + floor_mod(k[i] - offset_[i], extent_[i]);
  return lin;
}

Index IndexBox::origin_linear(const IndexVec& k) const {
  Index lin = 0;
  for (std::size_t i = 0; i < ndim(); ++i) lin = lin * extent_[i] + floor_mod(k[i], extent_[i]);
  return lin;
}

IndexVec IndexBox::strides() const {
  IndexVec s(ndim());
  Index acc = 1;
  for (std::size_t i = ndim(); i-- > 0;) {
    s[i] = acc;
    acc *= extent_[i];
  }
  return s;
}

std::string IndexBox::str() const {
  std::ostringstream os;
  os << "box{offset=(";
  for (std::size_t i = 0; i < ndim(); ++i) os << (i ? "," : "") << offset_[i];
  os << "), extent=(";
  for (std::size_t i = 0; i < ndim(); ++i) os << (i ? "," : "") << extent_[i];
  os << ")}";
  return os.str();
}

namespace detail {

void require_same_ndim(const IndexBox& a, const IndexBox& b, const char* what) {
  if (a.ndim() != b.ndim())
    throw DataError(std::string(what) + ": dimension mismatch (" + std::to_string(a.ndim()) +
                    " vs " + std::to_string(b.ndim()) + ")");
}

}  // namespace detail

IndexBox valid_set(const IndexBox& data, const IndexBox& filt) {
  detail::require_same_ndim(data, filt, "valid_set");
  IndexVec off(data.ndim()), ext(data.ndim());
  for (std::size_t i = 0; i < data.ndim(); ++i) {
    if (filt.extent(i) > data.extent(i))
      throw ConfigError("valid_set: filter " + filt.str() + " larger than data " + data.str());
    off[i] = data.offset(i) + filt.offset(i) + filt.extent(i) - 1;
    ext[i] = data.extent(i) - filt.extent(i) + 1;
  }
  return IndexBox(std::move(off), std::move(ext));
}

IndexBox minkowski_sum(const IndexBox& a, const IndexBox& b) {
  detail::require_same_ndim(a, b, "minkowski_sum");
  IndexVec off(a.ndim()), ext(a.ndim());
  for (std::size_t i = 0; i < a.ndim(); ++i) {
    off[i] = a.offset(i) + b.offset(i);
    ext[i] = a.extent(i) + b.extent(i) - 1;
  }
  return IndexBox(std::move(off), std::move(ext));
}

IndexBox reflect(const IndexBox& box) {
  IndexVec off(box.ndim());
  for (std::size_t i = 0; i < box.ndim(); ++i) off[i] = -(box.end(i) - 1);
  return IndexBox(std::move(off), box.extent());
}

IndexBox grow(const IndexBox& box, const IndexVec& margin) {
  if (margin.size() != box.ndim()) throw ConfigError("grow: dimension mismatch");
  IndexVec off(box.ndim()), ext(box.ndim());
  for (std::size_t i = 0; i < box.ndim(); ++i) {
    if (margin[i] < 0) throw ConfigError("grow: negative margin");
    off[i] = box.offset(i) - margin[i];
    ext[i] = box.extent(i) + 2 * margin[i];
  }
  return IndexBox(std::move(off), std::move(ext));
}

Eigen::VectorXcd origin_anchored(const ComplexGrid& h, const IndexBox& torus) {
  detail::require_same_ndim(h.box(), torus, "origin_anchored");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(torus.size());
  for_each_index(h.box(), [&](const IndexVec& k, Index lin) {
    out[torus.origin_linear(k)] += h[lin];
  });
  return out;
}

ComplexGrid circ_conv(const ComplexGrid& y, const ComplexGrid& h) {
  detail::require_same_ndim(y.box(), h.box(), "circ_conv");
  const IndexVec& ext = y.box().extent();
  Eigen::VectorXcd Y = y.values();
  Eigen::VectorXcd H = origin_anchored(h, y.box());
  dft_inplace(Y, ext);
  dft_inplace(H, ext);
  Y.array() *= H.array() * std::sqrt(static_cast<double>(y.size()));
  idft_inplace(Y, ext);
  return ComplexGrid(y.box(), std::move(Y));
}

ComplexGrid linear_conv_valid(const ComplexGrid& y, const ComplexGrid& h) {
  const IndexBox gamma = valid_set(y.box(), h.box());
  ComplexGrid out(gamma);
  IndexVec diff(gamma.ndim());
  for_each_index(gamma, [&](const IndexVec& k, Index lin) {
    cplx acc = 0.0;
    for_each_index(h.box(), [&](const IndexVec& l, Index hl) {
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = k[i] - l[i];
      acc += y.at(diff) * h[hl];
    });
    out[lin] = acc;
  });
  return out;
}

cplx inner(const ComplexGrid& a, const ComplexGrid& b) {
  if (a.box() != b.box()) throw DataError("inner: box mismatch");
  return a.values().dot(b.values());
}

}  // namespace cslr
