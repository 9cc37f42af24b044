#include "idbp/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace idbp {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Complex unit_root(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("FftPlan: length must be positive");
  m_ = is_pow2(n) ? n : std::bit_ceil(2 * n - 1);

  twiddles_.resize(m_ / 2);
  for (std::size_t k = 0; k < m_ / 2; ++k) {
    twiddles_[k] = unit_root(-2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(m_));
  }
  bitrev_.resize(m_);
  const int bits = std::countr_zero(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    bitrev_[i] = r;
  }

  if (m_ != n_) {
    chirp_.resize(n_);
    // k^2 mod 2n keeps the angle argument small for large k.
    const std::size_t two_n = 2 * n_;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t k2 = static_cast<std::size_t>((static_cast<unsigned long long>(k) * k) %
                                                      two_n);
      chirp_[k] = unit_root(-std::numbers::pi * static_cast<double>(k2) /
                            static_cast<double>(n_));
    }
    chirp_fft_.assign(m_, Complex{});
    chirp_fft_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n_; ++k) {
      chirp_fft_[k] = std::conj(chirp_[k]);
      chirp_fft_[m_ - k] = std::conj(chirp_[k]);
    }
    radix2(chirp_fft_, false);
  }
}

void FftPlan::transform(std::span<Complex> x, bool inverse) const {
  if (x.size() != n_) throw std::invalid_argument("FftPlan: length mismatch");
  if (n_ == 1) return;
  if (m_ == n_) {
    radix2(x, inverse);
  } else {
    bluestein(x, inverse);
  }
}

void FftPlan::radix2(std::span<Complex> x, bool inverse) const {
  const std::size_t m = x.size();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = bitrev_[i];
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= m; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = m / len;
    for (std::size_t start = 0; start < m; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const Complex a = x[start + k];
        const Complex b = x[start + k + half] * w;
        x[start + k] = a + b;
        x[start + k + half] = a - b;
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> x, bool inverse) const {
  // The inverse transform is conj(DFT(conj(x))).
  std::vector<Complex> work(m_, Complex{});
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex v = inverse ? std::conj(x[k]) : x[k];
    work[k] = v * chirp_[k];
  }
  radix2(work, false);
  for (std::size_t k = 0; k < m_; ++k) work[k] *= chirp_fft_[k];
  radix2(work, true);
  const double scale = 1.0 / static_cast<double>(m_);
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex v = work[k] * scale * chirp_[k];
    x[k] = inverse ? std::conj(v) : v;
  }
}

Fft2d::Fft2d(std::size_t height, std::size_t width)
    : height_(height),
      width_(width),
      rows_(std::make_shared<FftPlan>(width)),
      cols_(height == width ? rows_ : std::make_shared<FftPlan>(height)) {}

void Fft2d::apply(ComplexGrid& x, bool inverse) const {
  if (x.height != height_ || x.width != width_) {
    throw std::invalid_argument("Fft2d: grid shape does not match the plan");
  }
  for (std::size_t r = 0; r < height_; ++r) {
    rows_->transform(std::span<Complex>(x.data.data() + r * width_, width_), inverse);
  }
  std::vector<Complex> column(height_);
  for (std::size_t c = 0; c < width_; ++c) {
    for (std::size_t r = 0; r < height_; ++r) column[r] = x(r, c);
    cols_->transform(column, inverse);
    for (std::size_t r = 0; r < height_; ++r) x(r, c) = column[r];
  }
}

ComplexGrid Fft2d::forward(const ImageGrid& x) const {
  ComplexGrid out(x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = Complex(x[i], 0.0);
  apply(out, false);
  return out;
}

void Fft2d::forward_inplace(ComplexGrid& x) const { apply(x, false); }

void Fft2d::inverse_inplace(ComplexGrid& x) const {
  apply(x, true);
  const double scale = 1.0 / static_cast<double>(height_ * width_);
  for (Complex& v : x.data) v *= scale;
}

ImageGrid Fft2d::inverse_real(ComplexGrid spectrum) const {
  inverse_inplace(spectrum);
  ImageGrid out(height_, width_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum.data[i].real();
  return out;
}

ComplexGrid fft2(const ImageGrid& x) { return Fft2d(x.height(), x.width()).forward(x); }

ImageGrid ifft2(const ComplexGrid& spectrum) {
  return Fft2d(spectrum.height, spectrum.width).inverse_real(spectrum);
}

}  // namespace idbp
