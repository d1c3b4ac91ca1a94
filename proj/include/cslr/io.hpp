#pragma once

#include <string>
#include <string_view>

#include "cslr/giraf.hpp"
#include "cslr/grids.hpp"

namespace cslr {

/// CSLR1 grid encoding: "CSLR", u32 version = 1, u32 ndim, per axis (i64
/// offset, u64 extent), then (f64 re, f64 im) per entry in row-major order.
/// All fields little-endian.
std::string encode_grid(const ComplexGrid& g);
ComplexGrid decode_grid(std::string_view bytes);

void write_grid(const std::string& path, const ComplexGrid& g);
ComplexGrid read_grid(const std::string& path);

/// Masks are stored as grids of exact 0/1 values.
ComplexGrid mask_to_grid(const MaskGrid& m);
MaskGrid grid_to_mask(const ComplexGrid& g);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Shortest decimal that round-trips, independent of the locale. NaN and
/// infinities print as "nan", "inf", "-inf".
std::string format_double(double v);

/// Trace CSV: iter,eps,nmse,cost,sigma_min,sigma_max,seconds (nmse column
/// omitted when `with_nmse` is false).
std::string trace_csv(const RecoveryTrace& trace, bool with_nmse);

}  // namespace cslr
