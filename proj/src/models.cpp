#include "cslr/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace cslr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Integral of exp(-j 2 pi k x) over [a, b].
cplx interval_coefficient(Index k, double a, double b) {
  if (k == 0) return b - a;
  const double w = kTwoPi * static_cast<double>(k);
  const cplx eb = std::polar(1.0, -w * b);
  const cplx ea = std::polar(1.0, -w * a);
  return (eb - ea) / cplx(0.0, -w);
}

double circular_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ConfigError("Rng::below: empty range");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

cplx Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return cplx(re, im) * std::numbers::sqrt2 * 0.5;
}

DiracSignal random_diracs(std::size_t r, double min_separation, std::uint64_t seed) {
  if (r == 0) throw ConfigError("random_diracs: r must be >= 1");
  if (min_separation * static_cast<double>(r) >= 1.0)
    throw ConfigError("random_diracs: separation too large for r impulses");
  Rng rng(seed);
  DiracSignal sig;
  int attempts = 0;
  while (sig.locations.size() < r) {
    if (++attempts > 100000) throw ConfigError("random_diracs: could not place impulses");
    const double x = rng.uniform();
    const bool ok = std::all_of(sig.locations.begin(), sig.locations.end(), [&](double y) {
      return circular_distance(x, y) >= min_separation;
    });
    if (ok) sig.locations.push_back(x);
  }
  for (std::size_t i = 0; i < r; ++i) {
    const double mag = rng.uniform(0.5, 1.5);
    const double phase = rng.uniform(0.0, kTwoPi);
    sig.amplitudes.push_back(std::polar(mag, phase));
  }
  return sig;
}

ComplexGrid dirac_fourier(const DiracSignal& sig, const IndexBox& box) {
  if (box.ndim() != 1) throw ConfigError("dirac_fourier: 1-D box required");
  if (sig.locations.size() != sig.amplitudes.size())
    throw ConfigError("dirac_fourier: locations and amplitudes differ in length");
  ComplexGrid out(box);
  for (Index i = 0; i < box.size(); ++i) {
    const double k = static_cast<double>(box.offset(0) + i);
    cplx acc = 0.0;
    for (std::size_t s = 0; s < sig.locations.size(); ++s)
      acc += sig.amplitudes[s] * std::polar(1.0, -kTwoPi * k * sig.locations[s]);
    out[i] = acc;
  }
  return out;
}

ComplexGrid dirac_annihilator(const DiracSignal& sig) {
  // Coefficients of prod_i (z - z_i), z = exp(j 2 pi x), lowest degree first.
  std::vector<cplx> poly{1.0};
  for (double loc : sig.locations) {
    const cplx root = std::polar(1.0, kTwoPi * loc);
    std::vector<cplx> next(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= root * poly[i];
    }
    poly = std::move(next);
  }
  const IndexBox box({0}, {static_cast<Index>(poly.size())});
  ComplexGrid h(box);
  for (std::size_t i = 0; i < poly.size(); ++i) h[static_cast<Index>(i)] = poly[i];
  return h;
}

ComplexGrid rect_fourier(const RectPhantom& ph, const IndexBox& box) {
  if (box.ndim() != 2) throw ConfigError("rect_fourier: 2-D box required");
  ComplexGrid out(box);
  std::vector<cplx> cx(static_cast<std::size_t>(box.extent(0)));
  std::vector<cplx> cy(static_cast<std::size_t>(box.extent(1)));
  for (const Rect& r : ph.rects) {
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
      throw ConfigError("rect_fourier: rectangle with non-positive side");
    for (Index i = 0; i < box.extent(0); ++i)
      cx[i] = interval_coefficient(box.offset(0) + i, r.x0, r.x1);
    for (Index i = 0; i < box.extent(1); ++i)
      cy[i] = interval_coefficient(box.offset(1) + i, r.y0, r.y1);
    for (Index a = 0; a < box.extent(0); ++a)
      for (Index b = 0; b < box.extent(1); ++b)
        out[a * box.extent(1) + b] += r.amplitude * cx[a] * cy[b];
  }
  return out;
}

RectPhantom random_phantom(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  RectPhantom ph;
  for (std::size_t i = 0; i < count; ++i) {
    Rect r;
    const double wx = rng.uniform(0.25, 0.55);
    const double wy = rng.uniform(0.25, 0.55);
    r.x0 = rng.uniform(0.1, 0.9 - wx);
    r.y0 = rng.uniform(0.1, 0.9 - wy);
    r.x1 = r.x0 + wx;
    r.y1 = r.y0 + wy;
    r.amplitude = rng.uniform(0.5, 1.5);
    ph.rects.push_back(r);
  }
  return ph;
}

std::vector<Weighting> gradient_weighting(const IndexBox& box) {
  if (box.ndim() != 2) throw ConfigError("gradient_weighting: 2-D box required");
  return {Weighting::fourier_derivative(0), Weighting::fourier_derivative(1)};
}

Index SamplingOp::count() const {
  return static_cast<Index>(std::count(mask.values().begin(), mask.values().end(), true));
}

ComplexGrid SamplingOp::project(const ComplexGrid& x) const {
  if (x.box() != box()) throw DataError("SamplingOp: box mismatch");
  ComplexGrid out(box());
  for (Index i = 0; i < out.size(); ++i) out[i] = mask[i] ? x[i] : cplx(0.0);
  return out;
}

SamplingOp SamplingOp::embedded(const IndexBox& target) const {
  return SamplingOp{zero_pad(mask, target), zero_pad(measured, target)};
}

MaskGrid random_mask(const IndexBox& box, double usf, std::uint64_t seed, bool force_dc) {
  if (!(usf > 0.0) || usf > 1.0) throw ConfigError("random_mask: usf must lie in (0, 1]");
  const Index n = box.size();
  const Index count = std::min<Index>(n, static_cast<Index>(std::ceil(usf * static_cast<double>(n) - 1e-9)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Index start = 0;
  const IndexVec origin(box.ndim(), 0);
  if (force_dc && box.contains(origin)) {
    std::swap(order[0], order[static_cast<std::size_t>(box.linear(origin))]);
    start = 1;
  }
  Rng rng(seed);
  for (Index i = start; i < count; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[i], order[j]);
  }
  MaskGrid mask = MaskGrid::Constant(box, false);
  for (Index i = 0; i < count; ++i) mask[order[i]] = true;
  return mask;
}

SamplingOp sample(const ComplexGrid& truth, const MaskGrid& mask) {
  if (truth.box() != mask.box()) throw DataError("sample: mask and data boxes differ");
  SamplingOp op{mask, ComplexGrid(truth.box())};
  op.measured = op.project(truth);
  return op;
}

SamplingOp add_noise(const SamplingOp& a, double snr_db_target, std::uint64_t seed) {
  if (std::isinf(snr_db_target) && snr_db_target > 0) return a;
  const double signal = a.measured.values().squaredNorm();
  if (signal == 0.0) throw DataError("add_noise: zero signal");
  Rng rng(seed);
  Eigen::VectorXcd noise = Eigen::VectorXcd::Zero(a.measured.size());
  for (Index i = 0; i < noise.size(); ++i)
    if (a.mask[i]) noise[i] = rng.complex_normal();
  const double target = signal * std::pow(10.0, -snr_db_target / 10.0);
  noise *= std::sqrt(target / noise.squaredNorm());
  SamplingOp out = a;
  out.measured.values() += noise;
  return out;
}

double nmse(const ComplexGrid& x, const ComplexGrid& x0) {
  if (x.box() != x0.box()) throw DataError("nmse: box mismatch");
  const double ref = x0.values().squaredNorm();
  if (ref == 0.0) throw DataError("nmse: zero reference");
  return (x.values() - x0.values()).squaredNorm() / ref;
}

double snr_db(double nmse_value) {
  if (nmse_value <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(nmse_value);
}

}  // namespace cslr
