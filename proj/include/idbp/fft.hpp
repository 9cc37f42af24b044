#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "idbp/image.hpp"

namespace idbp {

using Complex = std::complex<double>;

/// Row-major complex grid holding a 2-D spectrum.
struct ComplexGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Complex> data;

  ComplexGrid() = default;
  ComplexGrid(std::size_t h, std::size_t w) : height(h), width(w), data(h * w) {}

  Complex& operator()(std::size_t r, std::size_t c) { return data[r * width + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data[r * width + c]; }
};

/// Unnormalized 1-D DFT of a fixed length. Powers of two use an iterative
/// radix-2 transform, every other length goes through Bluestein's chirp-z
/// reduction onto a power-of-two convolution.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }
  /// In place. inverse=true computes the conjugate transform without the 1/n factor.
  void transform(std::span<Complex> x, bool inverse) const;

 private:
  void radix2(std::span<Complex> x, bool inverse) const;
  void bluestein(std::span<Complex> x, bool inverse) const;

  std::size_t n_;
  std::size_t m_;  // radix-2 working length (== n_ when n_ is a power of two)
  std::vector<Complex> twiddles_;     // exp(-2 pi i k / m_), k < m_/2
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> chirp_;        // exp(-pi i k^2 / n_)
  std::vector<Complex> chirp_fft_;    // FFT of the conjugate chirp, length m_
};

/// 2-D transform engine for one grid size. Immutable after construction and
/// safe to share between threads.
class Fft2d {
 public:
  Fft2d(std::size_t height, std::size_t width);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  ComplexGrid forward(const ImageGrid& x) const;
  void forward_inplace(ComplexGrid& x) const;
  /// Normalized inverse, returning the real part.
  ImageGrid inverse_real(ComplexGrid spectrum) const;
  void inverse_inplace(ComplexGrid& x) const;

 private:
  void apply(ComplexGrid& x, bool inverse) const;

  std::size_t height_;
  std::size_t width_;
  std::shared_ptr<const FftPlan> rows_;
  std::shared_ptr<const FftPlan> cols_;
};

ComplexGrid fft2(const ImageGrid& x);
/// Normalized inverse; imaginary residue is discarded.
ImageGrid ifft2(const ComplexGrid& spectrum);

}  // namespace idbp
