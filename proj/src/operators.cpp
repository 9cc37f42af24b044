#include "idbp/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace idbp {

// ---------------------------------------------------------------------------
// DegradationOperator

void DegradationOperator::check_shape(const ImageGrid& x, const char* what) const {
  if (x.height() != height() || x.width() != width()) {
    throw std::invalid_argument(std::string(what) + ": image is " + std::to_string(x.height()) +
                                "x" + std::to_string(x.width()) + ", operator expects " +
                                std::to_string(height()) + "x" + std::to_string(width()));
  }
}

ImageGrid DegradationOperator::project_row(const ImageGrid& x) const {
  return x - project_null(x);
}

ImageGrid DegradationOperator::back_project(const ImageGrid& pinv_y, const ImageGrid& x) const {
  return pinv_y + project_null(x);
}

// ---------------------------------------------------------------------------
// InpaintingOperator

InpaintingOperator::InpaintingOperator(std::size_t height, std::size_t width,
                                       std::vector<bool> mask)
    : height_(height), width_(width), mask_(std::move(mask)) {
  if (mask_.size() != height * width) {
    throw std::invalid_argument("InpaintingOperator: mask size does not match image size");
  }
  observed_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
  if (observed_ == 0) {
    throw std::invalid_argument("InpaintingOperator: mask has no observed pixels");
  }
}

ImageGrid InpaintingOperator::forward(const ImageGrid& x) const {
  check_shape(x, "InpaintingOperator::forward");
  ImageGrid out(height_, width_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask_[i]) out[i] = x[i];
  }
  return out;
}

ImageGrid InpaintingOperator::pseudoinverse(const ImageGrid& y) const {
  check_shape(y, "InpaintingOperator::pseudoinverse");
  return forward(y);
}

ImageGrid InpaintingOperator::project_null(const ImageGrid& x) const {
  check_shape(x, "InpaintingOperator::project_null");
  ImageGrid out(height_, width_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask_[i]) out[i] = x[i];
  }
  return out;
}

ImageGrid InpaintingOperator::back_project(const ImageGrid& pinv_y, const ImageGrid& x) const {
  check_shape(pinv_y, "InpaintingOperator::back_project");
  check_shape(x, "InpaintingOperator::back_project");
  ImageGrid out(height_, width_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask_[i] ? pinv_y[i] : x[i];
  return out;
}

ImageGrid InpaintingOperator::regularized_solve(const ImageGrid& y, const ImageGrid& z,
                                                double rho) const {
  check_shape(y, "InpaintingOperator::regularized_solve");
  check_shape(z, "InpaintingOperator::regularized_solve");
  if (!(rho > 0.0)) throw std::invalid_argument("regularized_solve: rho must be positive");
  ImageGrid out(height_, width_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mask_[i] ? (y[i] + rho * z[i]) / (1.0 + rho) : z[i];
  }
  return out;
}

std::vector<double> InpaintingOperator::observed_values(const ImageGrid& y) const {
  check_shape(y, "InpaintingOperator::observed_values");
  std::vector<double> out;
  out.reserve(observed_);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask_[i]) out.push_back(y[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

double BlurKernel::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

void BlurKernel::validate() const {
  if (rows == 0 || cols == 0 || rows % 2 == 0 || cols % 2 == 0) {
    throw std::invalid_argument("BlurKernel: dimensions must be odd and positive");
  }
  if (values.size() != rows * cols) {
    throw std::invalid_argument("BlurKernel: value count does not match dimensions");
  }
}

BlurKernel BlurKernel::normalized() const {
  const double s = sum();
  if (s == 0.0) throw std::invalid_argument("BlurKernel: cannot normalize a zero-sum kernel");
  BlurKernel out = *this;
  for (double& v : out.values) v /= s;
  return out;
}

BlurKernel delta_kernel() { return BlurKernel{1, 1, {1.0}}; }

BlurKernel uniform_kernel(std::size_t size) {
  const double v = 1.0 / static_cast<double>(size * size);
  BlurKernel k{size, size, std::vector<double>(size * size, v)};
  k.validate();
  return k;
}

double rational_kernel_value(int x1, int x2) {
  return 1.0 / (1.0 + static_cast<double>(x1 * x1 + x2 * x2));
}

BlurKernel generate_scenario_kernel(int id, const KernelFormula& formula) {
  switch (id) {
    case 1:
    case 2: {
      BlurKernel k{15, 15, std::vector<double>(225)};
      for (int r = 0; r < 15; ++r) {
        for (int c = 0; c < 15; ++c) k.values[r * 15 + c] = formula(r - 7, c - 7);
      }
      return k.normalized();
    }
    case 3:
      return uniform_kernel(9);
    case 4: {
      constexpr double taps[5] = {1, 4, 6, 4, 1};
      BlurKernel k{5, 5, std::vector<double>(25)};
      for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 5; ++c) k.values[r * 5 + c] = taps[r] * taps[c] / 256.0;
      }
      return k;
    }
    default:
      throw std::invalid_argument("generate_scenario_kernel: scenario id must be 1..4, got " +
                                  std::to_string(id));
  }
}

ScenarioSpec scenario(int id, const KernelFormula& formula) {
  ScenarioSpec s;
  s.id = id;
  s.kernel = generate_scenario_kernel(id, formula);
  switch (id) {
    case 1: s.noise_variance = 2.0; break;
    case 2: s.noise_variance = 8.0; break;
    case 3: s.target_bsnr_db = 40.0; break;
    case 4: s.noise_variance = 49.0; break;
    default: break;
  }
  return s;
}

double ScenarioSpec::noise_sigma(const ImageGrid& blurred_clean) const {
  if (noise_variance) return std::sqrt(*noise_variance);
  if (target_bsnr_db) return sigma_for_bsnr(blurred_clean, *target_bsnr_db);
  throw std::logic_error("ScenarioSpec: no noise model");
}

// ---------------------------------------------------------------------------
// SpectralInverse / BlurOperator

SpectralInverse SpectralInverse::build(const ComplexGrid& kernel_spectrum, double epsilon,
                                       double sigma_n) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("SpectralInverse: epsilon must be >= 0");
  SpectralInverse inv;
  inv.epsilon = epsilon;
  inv.sigma_n = sigma_n;
  inv.g_tilde = ComplexGrid(kernel_spectrum.height, kernel_spectrum.width);
  const double reg = epsilon * sigma_n * sigma_n;
  for (std::size_t i = 0; i < kernel_spectrum.data.size(); ++i) {
    const Complex h = kernel_spectrum.data[i];
    const double denom = std::norm(h) + reg;
    inv.g_tilde.data[i] = denom > 0.0 ? std::conj(h) / denom : Complex{};
  }
  return inv;
}

std::shared_ptr<const BlurOperator::Shared> BlurOperator::make_state(BlurKernel kernel,
                                                                     std::size_t height,
                                                                     std::size_t width) {
  kernel.validate();
  if (height == 0 || width == 0) throw std::invalid_argument("BlurOperator: empty image size");
  ImageGrid padded(height, width);
  const auto half_r = static_cast<long>(kernel.rows / 2);
  const auto half_c = static_cast<long>(kernel.cols / 2);
  const auto h = static_cast<long>(height);
  const auto w = static_cast<long>(width);
  for (std::size_t r = 0; r < kernel.rows; ++r) {
    for (std::size_t c = 0; c < kernel.cols; ++c) {
      const long rr = ((static_cast<long>(r) - half_r) % h + h) % h;
      const long cc = ((static_cast<long>(c) - half_c) % w + w) % w;
      padded(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) += kernel.at(r, c);
    }
  }
  Fft2d fft(height, width);
  ComplexGrid spectrum = fft.forward(padded);
  return std::make_shared<const Shared>(Shared{std::move(kernel), std::move(fft),
                                               std::move(spectrum)});
}

BlurOperator::BlurOperator(BlurKernel kernel, std::size_t height, std::size_t width,
                           double epsilon, double sigma_n)
    : BlurOperator(make_state(std::move(kernel), height, width), epsilon, sigma_n) {}

BlurOperator::BlurOperator(std::shared_ptr<const Shared> state, double epsilon, double sigma_n)
    : height_(state->fft.height()),
      width_(state->fft.width()),
      state_(std::move(state)),
      inverse_(SpectralInverse::build(state_->spectrum, epsilon, sigma_n)),
      null_filter_(height_, width_) {
  for (std::size_t i = 0; i < null_filter_.data.size(); ++i) {
    null_filter_.data[i] = 1.0 - inverse_.g_tilde.data[i] * state_->spectrum.data[i];
  }
}

BlurOperator BlurOperator::with_regularization(double epsilon, double sigma_n) const {
  return BlurOperator(state_, epsilon, sigma_n);
}

ImageGrid BlurOperator::apply_spectrum(const ImageGrid& x,
                                       const std::function<Complex(std::size_t)>& filter) const {
  ComplexGrid spec = state_->fft.forward(x);
  for (std::size_t i = 0; i < spec.data.size(); ++i) spec.data[i] *= filter(i);
  return state_->fft.inverse_real(std::move(spec));
}

ImageGrid BlurOperator::forward(const ImageGrid& x) const {
  check_shape(x, "BlurOperator::forward");
  return apply_spectrum(x, [this](std::size_t i) { return state_->spectrum.data[i]; });
}

ImageGrid BlurOperator::pseudoinverse(const ImageGrid& y) const {
  check_shape(y, "BlurOperator::pseudoinverse");
  return apply_spectrum(y, [this](std::size_t i) { return inverse_.g_tilde.data[i]; });
}

ImageGrid BlurOperator::project_null(const ImageGrid& x) const {
  check_shape(x, "BlurOperator::project_null");
  return apply_spectrum(x, [this](std::size_t i) { return null_filter_.data[i]; });
}

ImageGrid BlurOperator::regularized_solve(const ImageGrid& y, const ImageGrid& z,
                                          double rho) const {
  check_shape(y, "BlurOperator::regularized_solve");
  check_shape(z, "BlurOperator::regularized_solve");
  if (!(rho > 0.0)) throw std::invalid_argument("regularized_solve: rho must be positive");
  const Fft2d& fft = state_->fft;
  ComplexGrid fy = fft.forward(y);
  const ComplexGrid fz = fft.forward(z);
  for (std::size_t i = 0; i < fy.data.size(); ++i) {
    const Complex h = state_->spectrum.data[i];
    fy.data[i] = (std::conj(h) * fy.data[i] + rho * fz.data[i]) / (std::norm(h) + rho);
  }
  return fft.inverse_real(std::move(fy));
}

// ---------------------------------------------------------------------------
// Masks

InpaintingOperator generate_random_mask(std::size_t height, std::size_t width,
                                        double missing_fraction, RngState& rng) {
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    throw std::invalid_argument("generate_random_mask: missing fraction must be in [0, 1)");
  }
  const std::size_t n = height * width;
  if (n == 0) throw std::invalid_argument("generate_random_mask: empty image");
  const auto missing = static_cast<std::size_t>(std::llround(missing_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> mask(n, true);
  for (std::size_t k = 0; k < missing; ++k) mask[order[k]] = false;
  return InpaintingOperator(height, width, std::move(mask));
}

}  // namespace idbp
