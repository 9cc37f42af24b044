#include "idbp/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace idbp {

ImageGrid::ImageGrid(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
  if (height == 0 || width == 0) {
    throw std::invalid_argument("ImageGrid: dimensions must be positive");
  }
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height == 0 || width == 0) {
    throw std::invalid_argument("ImageGrid: dimensions must be positive");
  }
  if (data_.size() != height * width) {
    throw std::invalid_argument("ImageGrid: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
}

bool ImageGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageGrid& ImageGrid::operator+=(const ImageGrid& rhs) {
  require_same_shape(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

ImageGrid& ImageGrid::operator-=(const ImageGrid& rhs) {
  require_same_shape(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

ImageGrid& ImageGrid::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

ImageGrid& ImageGrid::operator+=(double c) {
  for (double& v : data_) v += c;
  return *this;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                " vs " + std::to_string(b.height()) + "x" +
                                std::to_string(b.width()) + ")");
  }
}

double norm2(const ImageGrid& x) { return std::sqrt(dot(x, x)); }

double dot(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double distance(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double mean(const ImageGrid& x) {
  double s = 0.0;
  for (double v : x.pixels()) s += v;
  return s / static_cast<double>(x.size());
}

double variance(const ImageGrid& x) {
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x.pixels()) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// RNG

std::uint64_t RngState::next_u64() {
  ++counter;
  std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngState::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngState::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
  const unsigned __int128 product = static_cast<unsigned __int128>(next_u64()) * bound;
  return static_cast<std::uint64_t>(product >> 64);
}

double RngState::next_gaussian() {
  const double u1 = 1.0 - next_uniform();  // (0, 1]
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// Metrics

double psnr(const ImageGrid& reference, const ImageGrid& estimate) {
  require_same_shape(reference, estimate, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(reference.size());
  return 10.0 * std::log10(kPeakIntensity * kPeakIntensity / mse);
}

double isnr(const ImageGrid& reference, const ImageGrid& degraded, const ImageGrid& estimate) {
  return psnr(reference, estimate) - psnr(reference, degraded);
}

double bsnr(const ImageGrid& blurred_clean, double sigma_n) {
  if (!(sigma_n > 0.0)) throw std::invalid_argument("bsnr: sigma_n must be positive");
  const double v = variance(blurred_clean);
  if (v == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(v / (sigma_n * sigma_n));
}

double sigma_for_bsnr(const ImageGrid& blurred_clean, double target_db) {
  const double v = variance(blurred_clean);
  if (v == 0.0) throw std::invalid_argument("sigma_for_bsnr: input image is constant");
  return std::sqrt(v) * std::pow(10.0, -target_db / 20.0);
}

ImageGrid add_gaussian_noise(const ImageGrid& x, double sigma_n, RngState& rng) {
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("add_gaussian_noise: sigma_n must be >= 0");
  ImageGrid out = x;
  if (sigma_n == 0.0) return out;
  for (double& v : out.pixels()) v += sigma_n * rng.next_gaussian();
  return out;
}

// ---------------------------------------------------------------------------
// PGM

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string read_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw std::runtime_error("load_pgm: malformed header (unexpected end of file)");
  return tok;
}

std::size_t parse_positive(const std::string& tok, const char* field) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || v == 0) {
    throw std::runtime_error(std::string("load_pgm: malformed header field ") + field + " '" +
                             tok + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

ImageGrid load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_pgm: cannot open " + path.string());
  if (read_token(in) != "P5") {
    throw std::runtime_error("load_pgm: malformed header in " + path.string() + " (expected P5)");
  }
  const std::size_t width = parse_positive(read_token(in), "width");
  const std::size_t height = parse_positive(read_token(in), "height");
  const std::size_t maxval = parse_positive(read_token(in), "maxval");
  if (maxval != 255) {
    throw std::runtime_error("load_pgm: unsupported maxval " + std::to_string(maxval));
  }
  // read_token consumed the single whitespace byte that ends the header.
  std::vector<unsigned char> raw(width * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error("load_pgm: truncated payload in " + path.string() + " (expected " +
                             std::to_string(raw.size()) + " bytes, got " +
                             std::to_string(in.gcount()) + ")");
  }
  std::vector<double> data(raw.begin(), raw.end());
  return ImageGrid(height, width, std::move(data));
}

void save_pgm(const ImageGrid& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_pgm: cannot open " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> raw(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 255.0);
    raw[i] = static_cast<unsigned char>(std::round(v));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("save_pgm: write failed for " + path.string());
}

}  // namespace idbp
