#include "cslr/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace cslr {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'L', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (bytes_.size() - pos_ < sizeof(T)) throw DataError("CSLR1: truncated input");
    char buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_grid(const ComplexGrid& g) {
  const IndexBox& box = g.box();
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(box.ndim()));
  for (std::size_t i = 0; i < box.ndim(); ++i) {
    put<std::int64_t>(out, box.offset(i));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(box.extent(i)));
  }
  out.reserve(out.size() + static_cast<std::size_t>(g.size()) * 16);
  for (Index i = 0; i < g.size(); ++i) {
    put<double>(out, g[i].real());
    put<double>(out, g[i].imag());
  }
  return out;
}

ComplexGrid decode_grid(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("CSLR1: bad magic");
  Reader in(bytes.substr(4));
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw DataError("CSLR1: unsupported version " + std::to_string(version));
  const auto ndim = in.get<std::uint32_t>();
  if (ndim == 0 || ndim > 16) throw DataError("CSLR1: bad dimension count");
  IndexVec off(ndim), ext(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) {
    off[i] = in.get<std::int64_t>();
    const auto e = in.get<std::uint64_t>();
    if (e == 0 || e > (std::uint64_t{1} << 40)) throw DataError("CSLR1: bad extent");
    ext[i] = static_cast<Index>(e);
  }
  IndexBox box = [&] {
    try {
      return IndexBox(off, ext);
    } catch (const ConfigError& e) {
      throw DataError(std::string("CSLR1: ") + e.what());
    }
  }();
  if (in.remaining() != static_cast<std::size_t>(box.size()) * 16)
    throw DataError("CSLR1: payload length does not match the box");
  ComplexGrid g(std::move(box));
  for (Index i = 0; i < g.size(); ++i) {
    const double re = in.get<double>();
    const double im = in.get<double>();
    g[i] = cplx(re, im);
  }
  return g;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("write to '" + path + "' failed");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_grid(const std::string& path, const ComplexGrid& g) { write_text(path, encode_grid(g)); }

ComplexGrid read_grid(const std::string& path) {
  try {
    return decode_grid(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

ComplexGrid mask_to_grid(const MaskGrid& m) {
  ComplexGrid g(m.box());
  for (Index i = 0; i < m.size(); ++i) g[i] = m[i] ? 1.0 : 0.0;
  return g;
}

MaskGrid grid_to_mask(const ComplexGrid& g) {
  MaskGrid m(g.box());
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] == cplx(1.0))
      m[i] = true;
    else if (g[i] == cplx(0.0))
      m[i] = false;
    else
      throw DataError("mask entries must be exactly 0 or 1");
  }
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const RecoveryTrace& trace, bool with_nmse) {
  std::ostringstream os;
  os << (with_nmse ? "iter,eps,nmse,cost,sigma_min,sigma_max,seconds\n"
                   : "iter,eps,cost,sigma_min,sigma_max,seconds\n");
  for (const IterationRecord& r : trace.records) {
    os << r.iter << ',' << format_double(r.eps) << ',';
    if (with_nmse) os << format_double(r.nmse) << ',';
    os << format_double(r.cost) << ',' << format_double(r.sigma_min) << ','
       << format_double(r.sigma_max) << ',' << format_double(r.seconds) << '\n';
  }
  return os.str();
}

}  // namespace cslr
