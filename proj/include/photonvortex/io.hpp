#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "dynamics.hpp"
#include "observables.hpp"

namespace photonvortex {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Little-endian byte buffer with an FNV-1a running checksum.
class Writer {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    bytes_.insert(bytes_.end(), b.begin(), b.end());
  }
  void put_bytes(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  void put_checksum() { put(fnv1a(bytes_.data(), bytes_.size())); }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

  void save(const std::filesystem::path& path) const {
    // write-then-rename so an interrupted run never leaves a truncated file behind
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
      out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
      if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + name_);
    bytes_.assign(std::istreambuf_iterator<char>(in), {});
  }

  template <class T>
  T get() {
    need(sizeof(T));
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  /// Verifies the trailing checksum over everything read so far.
  void check_checksum() {
    const std::uint64_t expect = fnv1a(bytes_.data(), pos_);
    if (get<std::uint64_t>() != expect) throw FormatError(name_ + ": checksum mismatch (corrupt file)");
    if (pos_ != bytes_.size()) throw FormatError(name_ + ": trailing bytes after checksum");
  }
  const std::string& name() const { return name_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(name_ + ": truncated file");
  }
  std::string name_;
  std::vector<unsigned char> bytes_;
  std::size_t pos_{0};
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout, all little-endian:
//   char[8]  "PVCKPT01"
//   u64      config hash
//   i64      snapshot index
//   f64      time
//   u32 K, u32 M
//   K*K x (f64 re, f64 im)   n, row-major
//   M x f64                  m
//   u64      FNV-1a of all preceding bytes

inline constexpr char kCheckpointMagic[8] = {'P', 'V', 'C', 'K', 'P', 'T', '0', '1'};

struct Checkpoint {
  std::uint64_t config_hash{0};
  std::int64_t index{0};
  SimState state;
};

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  detail::Writer w;
  w.put_bytes(kCheckpointMagic, 8);
  w.put(c.config_hash);
  w.put(c.index);
  w.put(c.state.time);
  const auto K = static_cast<std::uint32_t>(c.state.n.rows());
  const auto M = static_cast<std::uint32_t>(c.state.m.size());
  w.put(K);
  w.put(M);
  for (Eigen::Index r = 0; r < c.state.n.rows(); ++r)
    for (Eigen::Index col = 0; col < c.state.n.cols(); ++col) {
      w.put(c.state.n(r, col).real());
      w.put(c.state.n(r, col).imag());
    }
  for (Eigen::Index j = 0; j < c.state.m.size(); ++j) w.put(c.state.m(j));
  w.put_checksum();
  w.save(path);
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  detail::Reader r(path);
  if (r.get_bytes(8) != std::string(kCheckpointMagic, 8)) throw FormatError(r.name() + ": not a checkpoint");
  Checkpoint c;
  c.config_hash = r.get<std::uint64_t>();
  c.index = r.get<std::int64_t>();
  c.state.time = r.get<double>();
  const auto K = r.get<std::uint32_t>();
  const auto M = r.get<std::uint32_t>();
  if (K > 100000 || M > 100000000) throw FormatError(r.name() + ": implausible dimensions");
  c.state.n.resize(K, K);
  for (std::uint32_t i = 0; i < K; ++i)
    for (std::uint32_t j = 0; j < K; ++j) {
      const double re = r.get<double>();
      c.state.n(i, j) = cplx(re, r.get<double>());
    }
  c.state.m.resize(M);
  for (std::uint32_t j = 0; j < M; ++j) c.state.m(j) = r.get<double>();
  r.check_checksum();
  return c;
}

// ---------------------------------------------------------------------------
// Field files
//
//   char[8]  "PVFIELD1"
//   u64      config hash
//   u32      kind (0 density, 1 g1, 2 phase, 3 molecular)
//   u32      complex flag
//   f64      time
//   f64      grid extent
//   u32      grid resolution
//   payload  row-major (iy outer, ix inner); f64 per value, or (re, im) pairs if complex
//   u64      FNV-1a of all preceding bytes

inline constexpr char kFieldMagic[8] = {'P', 'V', 'F', 'I', 'E', 'L', 'D', '1'};

inline void write_field_binary(const std::filesystem::path& path, const FieldSnapshot& f,
                               std::uint64_t config_hash = 0) {
  detail::Writer w;
  w.put_bytes(kFieldMagic, 8);
  w.put(config_hash);
  w.put(static_cast<std::uint32_t>(f.kind));
  const bool complex = !f.is_real();
  w.put(static_cast<std::uint32_t>(complex));
  w.put(f.time);
  w.put(f.grid.extent());
  w.put(static_cast<std::uint32_t>(f.grid.resolution()));
  for (Eigen::Index j = 0; j < f.values.size(); ++j) {
    w.put(f.values(j).real());
    if (complex) w.put(f.values(j).imag());
  }
  w.put_checksum();
  w.save(path);
}

inline FieldSnapshot read_field_binary(const std::filesystem::path& path,
                                       std::uint64_t* config_hash = nullptr) {
  detail::Reader r(path);
  if (r.get_bytes(8) != std::string(kFieldMagic, 8)) throw FormatError(r.name() + ": not a field file");
  const auto hash = r.get<std::uint64_t>();
  if (config_hash) *config_hash = hash;
  const auto kind = r.get<std::uint32_t>();
  if (kind > 3) throw FormatError(r.name() + ": unknown field kind");
  const bool complex = r.get<std::uint32_t>() != 0;
  const double time = r.get<double>();
  const double extent = r.get<double>();
  const int res = static_cast<int>(r.get<std::uint32_t>());
  FieldSnapshot f{time, SpatialGrid(extent, res), static_cast<FieldKind>(kind), {}};
  f.values.resize(static_cast<Eigen::Index>(f.grid.size()));
  for (Eigen::Index j = 0; j < f.values.size(); ++j) {
    const double re = r.get<double>();
    f.values(j) = cplx(re, complex ? r.get<double>() : 0.0);
  }
  r.check_checksum();
  return f;
}

/// Lossless text export: one row per bin with %.17g values.
inline void write_field_csv(const std::filesystem::path& path, const FieldSnapshot& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# kind=" << to_string(f.kind) << " time=" << detail::format_double(f.time)
      << " extent=" << detail::format_double(f.grid.extent()) << " resolution=" << f.grid.resolution()
      << "\n";
  out << (f.is_real() ? "ix,iy,x,y,value\n" : "ix,iy,x,y,re,im\n");
  const int R = f.grid.resolution();
  for (int iy = 0; iy < R; ++iy)
    for (int ix = 0; ix < R; ++ix) {
      const cplx v = f.values(static_cast<Eigen::Index>(f.grid.flat(ix, iy)));
      out << ix << ',' << iy << ',' << detail::format_double(f.grid.coord(ix)) << ','
          << detail::format_double(f.grid.coord(iy)) << ',' << detail::format_double(v.real());
      if (!f.is_real()) out << ',' << detail::format_double(v.imag());
      out << '\n';
    }
}

// ---------------------------------------------------------------------------
// PNG rendering

using Rgb = std::array<unsigned char, 3>;

/// Viridis, sampled at 16 evenly spaced points and linearly interpolated.
inline Rgb viridis(double t) {
  static constexpr std::array<std::array<double, 3>, 16> lut = {{
      {0.267, 0.005, 0.329}, {0.283, 0.073, 0.435}, {0.279, 0.141, 0.507}, {0.262, 0.204, 0.545},
      {0.237, 0.263, 0.565}, {0.208, 0.319, 0.576}, {0.182, 0.371, 0.578}, {0.160, 0.422, 0.576},
      {0.139, 0.472, 0.572}, {0.121, 0.522, 0.562}, {0.126, 0.571, 0.541}, {0.186, 0.619, 0.502},
      {0.290, 0.663, 0.441}, {0.425, 0.703, 0.360}, {0.584, 0.735, 0.258}, {0.993, 0.906, 0.144},
  }};
  if (std::isnan(t)) return {0, 0, 0};
  t = std::clamp(t, 0.0, 1.0) * (lut.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), lut.size() - 2);
  const double a = t - static_cast<double>(i);
  Rgb out;
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<unsigned char>(std::lround(255.0 * ((1 - a) * lut[i][c] + a * lut[i + 1][c])));
  return out;
}

/// Phase wheel: hue from the argument, brightness from the normalised modulus.
inline Rgb phase_wheel(double arg, double brightness) {
  if (std::isnan(arg) || std::isnan(brightness)) return {0, 0, 0};
  const double h = (arg + std::numbers::pi) / (2.0 * std::numbers::pi) * 6.0;
  const double v = std::clamp(brightness, 0.0, 1.0);
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = 0.0, q = v * (1 - f), u = v * f;
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v; g = u; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = u; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = u; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {static_cast<unsigned char>(std::lround(255 * r)), static_cast<unsigned char>(std::lround(255 * g)),
          static_cast<unsigned char>(std::lround(255 * b))};
}

inline void write_png_rgb(const std::filesystem::path& path, int width, int height,
                          const std::vector<Rgb>& pixels) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(pixels[static_cast<std::size_t>(y) * width].data());
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

/// Heatmap with +y pointing up; each bin is drawn as a `scale` x `scale` block.
/// Real fields use viridis normalised to their maximum; complex fields use the
/// phase wheel with brightness |v| / max |v|.
inline void write_field_png(const std::filesystem::path& path, const FieldSnapshot& f, int scale = 4) {
  const int R = f.grid.resolution();
  const int W = R * scale;
  double vmax = 0.0, vmin = 0.0;
  bool first = true;
  for (Eigen::Index j = 0; j < f.values.size(); ++j) {
    const double v = f.is_real() ? f.values(j).real() : std::abs(f.values(j));
    if (std::isnan(v)) continue;
    if (first) { vmax = vmin = v; first = false; }
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  if (f.kind == FieldKind::Phase) { vmin = -std::numbers::pi; vmax = std::numbers::pi; }
  else if (f.kind != FieldKind::Molecular) vmin = std::min(0.0, vmin);
  const double span = vmax > vmin ? vmax - vmin : 1.0;

  std::vector<Rgb> px(static_cast<std::size_t>(W) * W);
  for (int iy = 0; iy < R; ++iy)
    for (int ix = 0; ix < R; ++ix) {
      const cplx v = f.values(static_cast<Eigen::Index>(f.grid.flat(ix, iy)));
      Rgb c;
      if (f.is_real()) c = viridis((v.real() - vmin) / span);
      else c = phase_wheel(std::arg(v), vmax > 0 ? std::abs(v) / vmax : 0.0);
      const int row0 = (R - 1 - iy) * scale;
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx)
          px[static_cast<std::size_t>(row0 + dy) * W + ix * scale + dx] = c;
    }
  write_png_rgb(path, W, W, px);
}

}  // namespace photonvortex
