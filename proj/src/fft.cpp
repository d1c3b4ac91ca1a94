#include "cslr/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

namespace cslr {

namespace {

// Eigen's FFT caches twiddle plans and is not safe to share across threads.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

void transform(Eigen::VectorXcd& values, const IndexVec& extent, bool inverse) {
  Index total = 1;
  for (Index e : extent) total *= e;
  if (total != values.size()) throw DataError("dft: extent does not match array length");
  if (total == 0) return;

  auto& fft = engine();
  Index stride = 1;
  std::vector<cplx> in, out;
  for (std::size_t axis = extent.size(); axis-- > 0;) {
    const Index n = extent[axis];
    if (n > 1) {
      in.resize(static_cast<std::size_t>(n));
      out.resize(static_cast<std::size_t>(n));
      const Index block = stride * n;
      for (Index outer = 0; outer < total; outer += block) {
        for (Index inner = 0; inner < stride; ++inner) {
          cplx* base = values.data() + outer + inner;
          for (Index i = 0; i < n; ++i) in[i] = base[i * stride];
          if (inverse)
            fft.inv(out.data(), in.data(), n);
          else
            fft.fwd(out.data(), in.data(), n);
          for (Index i = 0; i < n; ++i) base[i * stride] = out[i];
        }
      }
    }
    stride *= n;
  }
  values *= 1.0 / std::sqrt(static_cast<double>(total));
}

}  // namespace

void dft_inplace(Eigen::VectorXcd& values, const IndexVec& extent) {
  transform(values, extent, false);
}

void idft_inplace(Eigen::VectorXcd& values, const IndexVec& extent) {
  transform(values, extent, true);
}

ComplexGrid dft(const ComplexGrid& x) {
  Eigen::VectorXcd v = x.values();
  dft_inplace(v, x.box().extent());
  return ComplexGrid(x.box(), std::move(v));
}

ComplexGrid idft(const ComplexGrid& X) {
  Eigen::VectorXcd v = X.values();
  idft_inplace(v, X.box().extent());
  return ComplexGrid(X.box(), std::move(v));
}

}  // namespace cslr
