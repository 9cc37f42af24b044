#include "idbp/denoisers.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace idbp {

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n - 1.
std::size_t reflect(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

ImageGrid pad_reflect(const ImageGrid& z, std::size_t pad) {
  const std::size_t h = z.height() + 2 * pad;
  const std::size_t w = z.width() + 2 * pad;
  ImageGrid out(h, w);
  const auto p = static_cast<long>(pad);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t sr = reflect(static_cast<long>(r) - p, static_cast<long>(z.height()));
    for (std::size_t c = 0; c < w; ++c) {
      out(r, c) = z(sr, reflect(static_cast<long>(c) - p, static_cast<long>(z.width())));
    }
  }
  return out;
}

void require_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("denoise: sigma must be finite and >= 0");
  }
}

void require_finite(const ImageGrid& z) {
  if (!z.all_finite()) throw std::invalid_argument("denoise: input contains non-finite values");
}

// Native denoisers share the sigma == 0 identity and input validation.
class NativeDenoiser : public Denoiser {
 public:
  ImageGrid denoise(const ImageGrid& z, double sigma) const final {
    require_sigma(sigma);
    require_finite(z);
    if (sigma == 0.0) return z;
    return run(z, sigma);
  }

 protected:
  virtual ImageGrid run(const ImageGrid& z, double sigma) const = 0;
};

class MedianDenoiser final : public NativeDenoiser {
 public:
  explicit MedianDenoiser(int window) : window_(window) {
    if (window < 1 || window % 2 == 0) {
      throw std::invalid_argument("median denoiser: window must be odd and positive");
    }
  }
  std::string name() const override { return "median"; }

 protected:
  ImageGrid run(const ImageGrid& z, double) const override {
    const std::size_t half = static_cast<std::size_t>(window_ / 2);
    const ImageGrid padded = pad_reflect(z, half);
    ImageGrid out(z.height(), z.width());
    std::vector<double> buf(static_cast<std::size_t>(window_ * window_));
    const auto mid = static_cast<std::ptrdiff_t>(buf.size() / 2);
    for (std::size_t r = 0; r < z.height(); ++r) {
      for (std::size_t c = 0; c < z.width(); ++c) {
        std::size_t k = 0;
        for (int dr = 0; dr < window_; ++dr) {
          for (int dc = 0; dc < window_; ++dc) buf[k++] = padded(r + dr, c + dc);
        }
        std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
        out(r, c) = buf[static_cast<std::size_t>(mid)];
      }
    }
    return out;
  }

 private:
  int window_;
};

class GaussianDenoiser final : public NativeDenoiser {
 public:
  GaussianDenoiser(double std_per_sigma, double truncation)
      : std_per_sigma_(std_per_sigma), truncation_(truncation) {}
  std::string name() const override { return "gaussian"; }

 protected:
  ImageGrid run(const ImageGrid& z, double sigma) const override {
    const double s = std_per_sigma_ * sigma;
    const auto radius = static_cast<long>(std::floor(truncation_ * s));
    if (radius < 1) return z;
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      const double v = std::exp(-0.5 * static_cast<double>(k * k) / (s * s));
      taps[static_cast<std::size_t>(k + radius)] = v;
      total += v;
    }
    for (double& v : taps) v /= total;

    const auto h = static_cast<long>(z.height());
    const auto w = static_cast<long>(z.width());
    ImageGrid tmp(z.height(), z.width());
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += taps[static_cast<std::size_t>(k + radius)] *
                 z(static_cast<std::size_t>(r), reflect(c + k, w));
        }
        tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
      }
    }
    ImageGrid out(z.height(), z.width());
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += taps[static_cast<std::size_t>(k + radius)] *
                 tmp(reflect(r + k, h), static_cast<std::size_t>(c));
        }
        out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
      }
    }
    return out;
  }

 private:
  double std_per_sigma_;
  double truncation_;
};

/// Pixelwise non-local means with the 2 sigma^2 distance offset.
class NlmDenoiser final : public NativeDenoiser {
 public:
  NlmDenoiser(int patch, int search, double h_per_sigma)
      : patch_(patch), search_(search), h_per_sigma_(h_per_sigma) {
    if (patch < 1 || patch % 2 == 0 || search < 1 || search % 2 == 0) {
      throw std::invalid_argument("nlm denoiser: patch and search sizes must be odd");
    }
  }
  std::string name() const override { return "nlm"; }

 protected:
  ImageGrid run(const ImageGrid& z, double sigma) const override {
    const std::size_t ph = static_cast<std::size_t>(patch_ / 2);
    const std::size_t sh = static_cast<std::size_t>(search_ / 2);
    const std::size_t pad = ph + sh;
    const ImageGrid p = pad_reflect(z, pad);
    const double h = h_per_sigma_ * sigma;
    const double inv_h2 = 1.0 / (h * h);
    const double offset = 2.0 * sigma * sigma;
    const double inv_count = 1.0 / static_cast<double>(patch_ * patch_);
    ImageGrid out(z.height(), z.width());
    for (std::size_t r = 0; r < z.height(); ++r) {
      for (std::size_t c = 0; c < z.width(); ++c) {
        const std::size_t cr = r + pad;
        const std::size_t cc = c + pad;
        double wsum = 0.0;
        double acc = 0.0;
        for (std::size_t sr = cr - sh; sr <= cr + sh; ++sr) {
          for (std::size_t sc = cc - sh; sc <= cc + sh; ++sc) {
            double d2 = 0.0;
            for (std::size_t dr = 0; dr < static_cast<std::size_t>(patch_); ++dr) {
              const double* a = p.data().data() + (cr - ph + dr) * p.width() + (cc - ph);
              const double* b = p.data().data() + (sr - ph + dr) * p.width() + (sc - ph);
              for (int dc = 0; dc < patch_; ++dc) {
                const double d = a[dc] - b[dc];
                d2 += d * d;
              }
            }
            d2 *= inv_count;
            const double wgt = std::exp(-std::max(d2 - offset, 0.0) * inv_h2);
            wsum += wgt;
            acc += wgt * p(sr, sc);
          }
        }
        out(r, c) = acc / wsum;
      }
    }
    return out;
  }

 private:
  int patch_;
  int search_;
  double h_per_sigma_;
};

/// Sliding-window orthonormal 2-D DCT with hard thresholding of the AC
/// coefficients and uniform averaging of the overlapping reconstructions.
class DctThresholdDenoiser final : public NativeDenoiser {
 public:
  DctThresholdDenoiser(int patch, double multiplier) : patch_(patch), multiplier_(multiplier) {
    if (patch < 1) throw std::invalid_argument("dct denoiser: patch size must be positive");
  }
  std::string name() const override { return "dct_threshold"; }

 protected:
  ImageGrid run(const ImageGrid& z, double sigma) const override {
    const std::size_t p = std::min({static_cast<std::size_t>(patch_), z.height(), z.width()});
    // basis(k, i): orthonormal DCT-II
    std::vector<double> basis(p * p);
    for (std::size_t k = 0; k < p; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(p));
      for (std::size_t i = 0; i < p; ++i) {
        basis[k * p + i] = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                            static_cast<double>(k) / (2.0 * static_cast<double>(p)));
      }
    }
    const double threshold = multiplier_ * sigma;
    ImageGrid acc(z.height(), z.width());
    ImageGrid count(z.height(), z.width());
    std::vector<double> block(p * p), tmp(p * p), coef(p * p);

    for (std::size_t r0 = 0; r0 + p <= z.height(); ++r0) {
      for (std::size_t c0 = 0; c0 + p <= z.width(); ++c0) {
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) block[i * p + j] = z(r0 + i, c0 + j);
        }
        // tmp = block * basis^T (transform rows), coef = basis * tmp
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t k = 0; k < p; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += block[i * p + j] * basis[k * p + j];
            tmp[i * p + k] = s;
          }
        }
        for (std::size_t k = 0; k < p; ++k) {
          for (std::size_t l = 0; l < p; ++l) {
            double s = 0.0;
            for (std::size_t i = 0; i < p; ++i) s += basis[k * p + i] * tmp[i * p + l];
            coef[k * p + l] = s;
          }
        }
        for (std::size_t k = 1; k < p * p; ++k) {
          if (std::abs(coef[k]) < threshold) coef[k] = 0.0;
        }
        // inverse: block = basis^T * coef * basis
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t l = 0; l < p; ++l) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) s += basis[k * p + i] * coef[k * p + l];
            tmp[i * p + l] = s;
          }
        }
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < p; ++l) s += tmp[i * p + l] * basis[l * p + j];
            acc(r0 + i, c0 + j) += s;
            count(r0 + i, c0 + j) += 1.0;
          }
        }
      }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= count[i];
    return acc;
  }

 private:
  int patch_;
  double multiplier_;
};

class ExternalDenoiser final : public Denoiser {
 public:
  ExternalDenoiser(std::string command, std::chrono::milliseconds timeout)
      : command_(std::move(command)), timeout_(timeout) {
    if (command_.empty()) throw std::invalid_argument("external denoiser: empty command");
  }
  std::string name() const override { return "external"; }
  ImageGrid denoise(const ImageGrid& z, double sigma) const override {
    require_sigma(sigma);
    require_finite(z);
    return external_denoise(command_, z, sigma, timeout_);
  }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

class OracleLinearDenoiser final : public Denoiser {
 public:
  OracleLinearDenoiser(std::shared_ptr<const ImageGrid> truth, double alpha)
      : truth_(std::move(truth)), alpha_(alpha) {
    if (!truth_) throw std::invalid_argument("oracle_linear: ground truth required");
  }
  std::string name() const override { return "oracle_linear"; }
  ImageGrid denoise(const ImageGrid& z, double sigma) const override {
    require_sigma(sigma);
    require_same_shape(z, *truth_, "oracle_linear");
    ImageGrid out(z.height(), z.width());
    for (std::size_t i = 0; i < z.size(); ++i) {
      out[i] = alpha_ * (*truth_)[i] + (1.0 - alpha_) * z[i];
    }
    return out;
  }

 private:
  std::shared_ptr<const ImageGrid> truth_;
  double alpha_;
};

class OracleBoundedDenoiser final : public Denoiser {
 public:
  OracleBoundedDenoiser(std::shared_ptr<const ImageGrid> truth, double bound)
      : truth_(std::move(truth)), bound_(bound) {
    if (!truth_) throw std::invalid_argument("oracle_bounded: ground truth required");
  }
  std::string name() const override { return "oracle_bounded"; }
  ImageGrid denoise(const ImageGrid& z, double sigma) const override {
    require_sigma(sigma);
    require_same_shape(z, *truth_, "oracle_bounded");
    const double gap = distance(*truth_, z);
    const double step = gap > 0.0 ? std::min(1.0, sigma * bound_ / gap) : 0.0;
    ImageGrid out = z;
    for (std::size_t i = 0; i < z.size(); ++i) out[i] += step * ((*truth_)[i] - z[i]);
    return out;
  }

 private:
  std::shared_ptr<const ImageGrid> truth_;
  double bound_;
};

class LinearShrinkDenoiser final : public Denoiser {
 public:
  explicit LinearShrinkDenoiser(double gamma) : gamma_(gamma) {}
  std::string name() const override { return "linear_shrink"; }
  ImageGrid denoise(const ImageGrid& z, double sigma) const override {
    require_sigma(sigma);
    return z * (1.0 / (1.0 + gamma_ * sigma * sigma));
  }

 private:
  double gamma_;
};

class IdentityDenoiser final : public Denoiser {
 public:
  std::string name() const override { return "identity"; }
  ImageGrid denoise(const ImageGrid& z, double sigma) const override {
    require_sigma(sigma);
    return z;
  }
};

constexpr std::array<std::pair<DenoiserKind, const char*>, 9> kKindNames{{
    {DenoiserKind::median, "median"},
    {DenoiserKind::gaussian, "gaussian"},
    {DenoiserKind::nlm, "nlm"},
    {DenoiserKind::dct_threshold, "dct_threshold"},
    {DenoiserKind::external, "external"},
    {DenoiserKind::oracle_linear, "oracle_linear"},
    {DenoiserKind::oracle_bounded, "oracle_bounded"},
    {DenoiserKind::linear_shrink, "linear_shrink"},
    {DenoiserKind::identity, "identity"},
}};

}  // namespace

std::string to_string(DenoiserKind kind) {
  for (const auto& [k, n] : kKindNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

DenoiserKind parse_denoiser_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  if (name == "dct") return DenoiserKind::dct_threshold;
  throw std::invalid_argument("unknown denoiser '" + name + "'");
}

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec) {
  switch (spec.kind) {
    case DenoiserKind::median:
      return std::make_unique<MedianDenoiser>(spec.median_window);
    case DenoiserKind::gaussian:
      return std::make_unique<GaussianDenoiser>(spec.gaussian_std_per_sigma,
                                                spec.gaussian_truncation);
    case DenoiserKind::nlm:
      return std::make_unique<NlmDenoiser>(spec.nlm_patch, spec.nlm_search, spec.nlm_h_per_sigma);
    case DenoiserKind::dct_threshold:
      return std::make_unique<DctThresholdDenoiser>(spec.dct_patch, spec.dct_threshold_multiplier);
    case DenoiserKind::external:
      return std::make_unique<ExternalDenoiser>(spec.external_command, spec.external_timeout);
    case DenoiserKind::oracle_linear:
      return std::make_unique<OracleLinearDenoiser>(spec.truth, spec.oracle_alpha);
    case DenoiserKind::oracle_bounded:
      return std::make_unique<OracleBoundedDenoiser>(spec.truth, spec.oracle_bound);
    case DenoiserKind::linear_shrink:
      return std::make_unique<LinearShrinkDenoiser>(spec.shrink_gamma);
    case DenoiserKind::identity:
      return std::make_unique<IdentityDenoiser>();
  }
  throw std::invalid_argument("make_denoiser: unknown kind");
}

ImageGrid denoise(const DenoiserSpec& spec, const ImageGrid& z, double sigma) {
  return make_denoiser(spec)->denoise(z, sigma);
}

std::string bridge_header(std::size_t height, std::size_t width, double sigma) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), sigma);
  return "IDBP1 " + std::to_string(height) + " " + std::to_string(width) + " " +
         std::string(buf.data(), res.ptr) + "\n";
}

DenoiserDiagnostics estimate_conditions(const Denoiser& denoiser, const DegradationOperator& op,
                                        const std::vector<ImageGrid>& samples, double sigma,
                                        RngState& rng) {
  if (samples.empty()) throw std::invalid_argument("estimate_conditions: no samples");
  if (!(sigma > 0.0)) throw std::invalid_argument("estimate_conditions: sigma must be positive");

  DenoiserDiagnostics diag;
  std::vector<ImageGrid> denoised;
  denoised.reserve(samples.size());
  for (const ImageGrid& z : samples) {
    denoised.push_back(denoiser.denoise(z, sigma));
    diag.bound_estimate_B = std::max(diag.bound_estimate_B, distance(denoised.back(), z) / sigma);
  }

  auto probe = [&](const ImageGrid& a, const ImageGrid& da, const ImageGrid& target) {
    const ImageGrid b = a + op.project_null(target - a);
    const double gap = distance(a, b);
    if (gap <= 1e-9 * std::max(norm2(a), norm2(b))) return;
    const ImageGrid db = denoiser.denoise(b, sigma);
    const double num = norm2(op.project_null(da) - op.project_null(db));
    diag.contraction_estimate_K = std::max(diag.contraction_estimate_K, num / gap);
    ++diag.pairs;
  };

  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i != j) probe(samples[i], denoised[i], samples[j]);
    }
    probe(samples[i], denoised[i], add_gaussian_noise(samples[i], sigma, rng));
  }
  return diag;
}

}  // namespace idbp
