#pragma once

#include "cslr/grids.hpp"

namespace cslr {

/// Unitary multi-dimensional DFT over the positions of the grid's box
/// (position 0 is the box offset). Arbitrary extents are supported.
ComplexGrid dft(const ComplexGrid& x);
/// Inverse of dft(); also its adjoint.
ComplexGrid idft(const ComplexGrid& X);

/// In-place unitary transform of a flat row-major array with the given extent.
void dft_inplace(Eigen::VectorXcd& values, const IndexVec& extent);
void idft_inplace(Eigen::VectorXcd& values, const IndexVec& extent);

}  // namespace cslr
