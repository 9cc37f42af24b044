#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace idbp {

/// Row-major 2-D raster of real intensities. Values are nominally in
/// [0, 255] but are never clamped except when written to disk.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(std::size_t height, std::size_t width, double fill = 0.0);
  ImageGrid(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ImageGrid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const;

  ImageGrid& operator+=(const ImageGrid& rhs);
  ImageGrid& operator-=(const ImageGrid& rhs);
  ImageGrid& operator*=(double s);
  ImageGrid& operator+=(double c);

  friend ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
  friend ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
  friend ImageGrid operator*(double s, ImageGrid a) { return a *= s; }
  friend ImageGrid operator*(ImageGrid a, double s) { return a *= s; }
  friend ImageGrid operator+(ImageGrid a, double c) { return a += c; }

  bool operator==(const ImageGrid&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Throws std::invalid_argument when the shapes differ.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

double norm2(const ImageGrid& x);
double dot(const ImageGrid& a, const ImageGrid& b);
double distance(const ImageGrid& a, const ImageGrid& b);
double mean(const ImageGrid& x);
/// Sum of squared deviations from the mean, divided by the pixel count.
double variance(const ImageGrid& x);

/// Counter-based generator: output i is the SplitMix64 finalizer applied to
/// seed + i * 0x9E3779B97F4A7C15. Identical (seed, counter) pairs give
/// identical streams on every platform.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_uniform();
  /// Uniform integer in [0, bound) by multiply-high reduction.
  std::uint64_t next_below(std::uint64_t bound);
  /// Standard normal via Box-Muller; consumes two draws per call.
  double next_gaussian();
};

struct MetricReport {
  double psnr_db = 0.0;
  std::optional<double> isnr_db;
  std::optional<double> bsnr_db;
};

inline constexpr double kPeakIntensity = 255.0;

/// 10 log10(255^2 / MSE); +inf for identical images.
double psnr(const ImageGrid& reference, const ImageGrid& estimate);

/// psnr(reference, estimate) - psnr(reference, degraded).
double isnr(const ImageGrid& reference, const ImageGrid& degraded, const ImageGrid& estimate);

/// 10 log10(V / sigma_n^2) with V the per-pixel variance of the blurred clean image.
double bsnr(const ImageGrid& blurred_clean, double sigma_n);

/// Inverse of bsnr(): the noise std that makes bsnr() hit target_db.
double sigma_for_bsnr(const ImageGrid& blurred_clean, double target_db);

/// Returns x + e, e ~ N(0, sigma_n^2) i.i.d., drawn in raster order from rng.
ImageGrid add_gaussian_noise(const ImageGrid& x, double sigma_n, RngState& rng);

/// Binary PGM (P5), maxval 255 only.
ImageGrid load_pgm(const std::filesystem::path& path);
/// Clamps to [0, 255] and rounds half away from zero.
void save_pgm(const ImageGrid& image, const std::filesystem::path& path);

}  // namespace idbp
