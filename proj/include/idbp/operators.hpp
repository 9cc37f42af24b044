#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idbp/fft.hpp"
#include "idbp/image.hpp"

namespace idbp {

/// A linear degradation y = H x + e together with the (possibly regularized)
/// pseudoinverse and the projectors P_H = H^+ H and Q_H = I - H^+ H.
///
/// Observations always live on a full-size grid. For inpainting the
/// unobserved entries are zero; for blur every entry is observed.
class DegradationOperator {
 public:
  virtual ~DegradationOperator() = default;

  virtual std::size_t height() const = 0;
  virtual std::size_t width() const = 0;

  virtual ImageGrid forward(const ImageGrid& x) const = 0;
  virtual ImageGrid pseudoinverse(const ImageGrid& y) const = 0;
  /// Q_H x = x - H^+ H x.
  virtual ImageGrid project_null(const ImageGrid& x) const = 0;
  /// P_H x = H^+ H x.
  ImageGrid project_row(const ImageGrid& x) const;
  /// H^+ y + Q_H x: the projection of x onto {H v = y}.
  virtual ImageGrid back_project(const ImageGrid& pinv_y, const ImageGrid& x) const;

  /// argmin_v ||y - H v||^2 + rho ||v - z||^2, i.e.
  /// (H^T H + rho I)^{-1} (H^T y + rho z).
  virtual ImageGrid regularized_solve(const ImageGrid& y, const ImageGrid& z,
                                      double rho) const = 0;

  /// Regularization weight of the pseudoinverse (0 when exact).
  virtual double epsilon() const { return 0.0; }

 protected:
  void check_shape(const ImageGrid& x, const char* what) const;
};

/// H selects the observed pixels; H^+ = H^T zero-pads.
class InpaintingOperator final : public DegradationOperator {
 public:
  /// mask[i] == true marks an observed pixel. Requires at least one.
  InpaintingOperator(std::size_t height, std::size_t width, std::vector<bool> mask);

  std::size_t height() const override { return height_; }
  std::size_t width() const override { return width_; }
  const std::vector<bool>& mask() const { return mask_; }
  bool observed(std::size_t i) const { return mask_[i]; }
  std::size_t observed_count() const { return observed_; }

  ImageGrid forward(const ImageGrid& x) const override;
  ImageGrid pseudoinverse(const ImageGrid& y) const override;
  ImageGrid project_null(const ImageGrid& x) const override;
  ImageGrid back_project(const ImageGrid& pinv_y, const ImageGrid& x) const override;
  ImageGrid regularized_solve(const ImageGrid& y, const ImageGrid& z, double rho) const override;

  /// Entries of y at observed pixels, in raster order (the m-vector).
  std::vector<double> observed_values(const ImageGrid& y) const;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<bool> mask_;
  std::size_t observed_ = 0;
};

/// Odd-sized convolution kernel, stored row-major with its center at
/// (rows/2, cols/2).
struct BlurKernel {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double sum() const;
  /// Throws unless dimensions are odd, positive and consistent with values.
  void validate() const;
  /// Divides every entry by the sum.
  BlurKernel normalized() const;
};

BlurKernel delta_kernel();
BlurKernel uniform_kernel(std::size_t size);

/// Spectral form of the Tikhonov-regularized pseudoinverse
///   g = conj(F h) / (|F h|^2 + epsilon * sigma_n^2).
/// Bins where the denominator is zero are set to zero.
struct SpectralInverse {
  ComplexGrid g_tilde;
  double epsilon = 0.0;
  double sigma_n = 0.0;

  static SpectralInverse build(const ComplexGrid& kernel_spectrum, double epsilon,
                               double sigma_n);
};

/// Circular (periodic) shift-invariant blur evaluated with the FFT.
class BlurOperator final : public DegradationOperator {
 public:
  /// Zero-pads the kernel to the image size and circularly centers it at (0, 0).
  BlurOperator(BlurKernel kernel, std::size_t height, std::size_t width, double epsilon = 0.0,
               double sigma_n = 0.0);

  std::size_t height() const override { return height_; }
  std::size_t width() const override { return width_; }
  const BlurKernel& kernel() const { return state_->kernel; }
  double kernel_sum() const { return state_->kernel.sum(); }
  const ComplexGrid& kernel_spectrum() const { return state_->spectrum; }
  const SpectralInverse& spectral_inverse() const { return inverse_; }
  double epsilon() const override { return inverse_.epsilon; }
  double sigma_n() const { return inverse_.sigma_n; }
  const Fft2d& engine() const { return state_->fft; }

  /// Same kernel and size with a rebuilt spectral inverse.
  BlurOperator with_regularization(double epsilon, double sigma_n) const;

  ImageGrid forward(const ImageGrid& x) const override;
  ImageGrid pseudoinverse(const ImageGrid& y) const override;
  ImageGrid project_null(const ImageGrid& x) const override;
  ImageGrid regularized_solve(const ImageGrid& y, const ImageGrid& z, double rho) const override;

 private:
  struct Shared {
    BlurKernel kernel;
    Fft2d fft;
    ComplexGrid spectrum;
  };
  static std::shared_ptr<const Shared> make_state(BlurKernel kernel, std::size_t height,
                                                  std::size_t width);
  BlurOperator(std::shared_ptr<const Shared> state, double epsilon, double sigma_n);

  ImageGrid apply_spectrum(const ImageGrid& x, const std::function<Complex(std::size_t)>& filter) const;

  std::size_t height_;
  std::size_t width_;
  std::shared_ptr<const Shared> state_;
  SpectralInverse inverse_;
  ComplexGrid null_filter_;  // 1 - g * F h
};

/// Unnormalized value of the scenario 1/2 kernel at offset (x1, x2).
using KernelFormula = std::function<double(int x1, int x2)>;

/// 1 / (1 + x1^2 + x2^2).
double rational_kernel_value(int x1, int x2);

/// One of the four standard deblurring benchmark settings.
struct ScenarioSpec {
  int id = 0;
  BlurKernel kernel;
  /// Fixed noise variance, or empty when calibrated to a target BSNR.
  std::optional<double> noise_variance;
  std::optional<double> target_bsnr_db;

  /// Noise std for a given clean blurred image.
  double noise_sigma(const ImageGrid& blurred_clean) const;
};

/// Scenario kernels, normalized to unit sum:
///   1, 2: 15x15 rational kernel (formula overridable), sigma_n^2 = 2 and 8
///   3: 9x9 uniform, sigma_n calibrated to BSNR 40 dB
///   4: [1 4 6 4 1]^T [1 4 6 4 1] / 256, sigma_n^2 = 49
BlurKernel generate_scenario_kernel(int id, const KernelFormula& formula = rational_kernel_value);
ScenarioSpec scenario(int id, const KernelFormula& formula = rational_kernel_value);

/// Marks exactly round(missing_fraction * n) pixels as missing, choosing them
/// with a seeded Fisher-Yates shuffle.
InpaintingOperator generate_random_mask(std::size_t height, std::size_t width,
                                        double missing_fraction, RngState& rng);

}  // namespace idbp
