#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cslr/grids.hpp"
#include "cslr/lifting.hpp"

namespace cslr {

/// Seeded generator for every random draw in the library. The engine is
/// std::mt19937_64, whose output sequence is fixed by the standard; the
/// helpers below map raw draws to distributions without relying on the
/// implementation-defined std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Circular complex Gaussian with E|z|^2 = 1.
  cplx complex_normal();

 private:
  std::mt19937_64 engine_;
};

/// Stream of Dirac impulses on [0, 1): rho(x) = sum_i c_i delta(x - x_i).
struct DiracSignal {
  std::vector<double> locations;
  std::vector<cplx> amplitudes;
};

/// Random Dirac stream with pairwise circular distance >= min_separation and
/// amplitudes of modulus in [0.5, 1.5] with uniform phase.
DiracSignal random_diracs(std::size_t r, double min_separation, std::uint64_t seed);

/// Exact Fourier coefficients rho^[k] = sum_i c_i exp(-j 2 pi k x_i) on a 1-D box.
ComplexGrid dirac_fourier(const DiracSignal& sig, const IndexBox& box);

/// Annihilating filter of a Dirac stream: Fourier coefficients of
/// prod_i (1 - exp(j 2 pi (x - x_i)))-type trigonometric polynomial vanishing
/// at every location, supported on {0, ..., r}.
ComplexGrid dirac_annihilator(const DiracSignal& sig);

struct Rect {
  cplx amplitude = 1.0;
  double x0 = 0.0, x1 = 1.0;  // interval along axis 0
  double y0 = 0.0, y1 = 1.0;  // interval along axis 1
};

/// Piecewise constant image made of axis-aligned rectangles in [0, 1)^2.
struct RectPhantom {
  std::vector<Rect> rects;
};

/// Exact Fourier coefficients of a rectangle phantom on a 2-D box.
ComplexGrid rect_fourier(const RectPhantom& ph, const IndexBox& box);

/// Random phantom of `count` rectangles with sides in [0.25, 0.55] placed
/// inside [0.1, 0.9]^2, amplitudes in [0.5, 1.5].
RectPhantom random_phantom(std::size_t count, std::uint64_t seed);

/// The two Fourier-derivative weightings j 2 pi k_x and j 2 pi k_y.
std::vector<Weighting> gradient_weighting(const IndexBox& box);

/// Fourier-domain sampling operator: A^*A = diag(mask), measured values at
/// sampled positions, zero elsewhere.
struct SamplingOp {
  MaskGrid mask;
  ComplexGrid measured;

  const IndexBox& box() const { return mask.box(); }
  Index count() const;
  /// A^*A x.
  ComplexGrid project(const ComplexGrid& x) const;
  /// Same samples on a larger box; new positions are unsampled.
  SamplingOp embedded(const IndexBox& box) const;
};

/// ceil(usf * |box|) distinct positions drawn without replacement. When
/// `force_dc` is set, index 0 is always included.
MaskGrid random_mask(const IndexBox& box, double usf, std::uint64_t seed, bool force_dc);

/// Samples `truth` on `mask`.
SamplingOp sample(const ComplexGrid& truth, const MaskGrid& mask);

/// Adds circular complex white Gaussian noise to the sampled entries, rescaled
/// so that the measured SNR equals `snr_db` exactly. An infinite target leaves
/// the measurements unchanged.
SamplingOp add_noise(const SamplingOp& a, double snr_db, std::uint64_t seed);

/// ||x - x0||^2 / ||x0||^2.
double nmse(const ComplexGrid& x, const ComplexGrid& x0);
/// -10 log10(nmse).
double snr_db(double nmse_value);

}  // namespace cslr
