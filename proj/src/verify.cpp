#include "idbp/verify.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "idbp/denoisers.hpp"
#include "idbp/fft.hpp"
#include "idbp/operators.hpp"
#include "idbp/solvers.hpp"

namespace idbp {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

CheckResult projection_algebra(RngState& rng, std::size_t instances) {
  for (std::size_t t = 0; t < instances; ++t) {
    const double frac = rng.next_uniform() * 0.95;
    const InpaintingOperator op = generate_random_mask(16, 16, frac, rng);
    const ImageGrid x = synthetic_image(16, 16, rng);
    const ImageGrid a = add_gaussian_noise(ImageGrid(16, 16), 50.0, rng);
    const ImageGrid y = op.forward(x);
    if (op.forward(op.pseudoinverse(y)) != y) return {"projection algebra", false, "H H^+ != I"};
    const ImageGrid q = op.project_null(a);
    if (op.project_null(q) != q) return {"projection algebra", false, "Q_H not idempotent"};
    if (dot(op.project_row(x), op.project_null(a)) != 0.0) {
      return {"projection algebra", false, "P_H and Q_H not orthogonal"};
    }
    const ImageGrid yt = op.back_project(op.pseudoinverse(y), a);
    if (op.forward(yt) != y) return {"projection algebra", false, "H y_k != y"};
    if (op.project_null(yt) != op.project_null(a)) {
      return {"projection algebra", false, "Q_H y_k != Q_H x_k"};
    }
  }
  return {"projection algebra", true, std::to_string(instances) + " instances"};
}

CheckResult condition_identity(RngState& rng, std::size_t instances) {
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const InpaintingOperator op = generate_random_mask(16, 16, 0.8, rng);
    const ImageGrid x = synthetic_image(16, 16, rng);
    const double sigma_n = 1.0 + 20.0 * rng.next_uniform();
    const double delta = t % 2 == 0 ? 0.0 : 10.0 * rng.next_uniform();
    const ImageGrid y = op.forward(add_gaussian_noise(x, sigma_n, rng));
    const ImageGrid xt = add_gaussian_noise(x, 5.0, rng);
    const double expected = (sigma_n + delta) * (sigma_n + delta) / (sigma_n * sigma_n);
    const double got = condition_ratio(op, y, xt, sigma_n, delta);
    worst = std::max(worst, std::abs(got - expected) / expected);
  }
  return {"condition identity", worst <= 1e-12, "max relative error " + fmt(worst)};
}

struct OracleSetup {
  std::shared_ptr<const ImageGrid> truth;
  InpaintingOperator op;
  ImageGrid noise;
  ImageGrid y;
  ImageGrid init;
};

OracleSetup oracle_setup(RngState& rng, std::size_t size, double sigma_n) {
  auto truth = std::make_shared<const ImageGrid>(synthetic_image(size, size, rng));
  InpaintingOperator op = generate_random_mask(size, size, 0.8, rng);
  ImageGrid noise = add_gaussian_noise(ImageGrid(size, size), sigma_n, rng);
  ImageGrid y = op.forward(*truth + noise);
  ImageGrid init = median_initialize(op, y);
  return {std::move(truth), std::move(op), std::move(noise), std::move(y), std::move(init)};
}

CheckResult measurement_decay(RngState& rng) {
  for (double alpha : {0.1, 0.5, 0.9}) {
    const OracleSetup s = oracle_setup(rng, 32, 10.0);
    DenoiserSpec spec;
    spec.kind = DenoiserKind::oracle_linear;
    spec.oracle_alpha = alpha;
    spec.truth = s.truth;
    const auto denoiser = make_denoiser(spec);
    const ImageGrid y_bar = improved_measurements(*s.truth, s.op, s.noise);
    const double d0 = distance(s.init, y_bar);
    IdbpConfig cfg = noisy_inpainting_defaults();
    // Stop while (1 - alpha)^k stays above 1e-4; further on, rounding in the
    // observed-pixel copy dominates the shrinking distance.
    cfg.iterations = static_cast<std::size_t>(std::log(1e-4) / std::log(1.0 - alpha) + 1e-9);
    bool ok = true;
    double prev = d0;
    double worst = 0.0;
    idbp_run(s.op, s.y, 10.0, *denoiser, cfg, s.init, nullptr, [&](const IdbpIterate& it) {
      const double d = distance(it.y_tilde, y_bar);
      const double expected = std::pow(1.0 - alpha, static_cast<double>(it.iteration)) * d0;
      worst = std::max(worst, std::abs(d - expected) / expected);
      if (!(d < prev)) ok = false;
      prev = d;
    });
    if (!ok || worst > 1e-9) {
      return {"improved measurements decay", false,
              "alpha " + fmt(alpha) + ": relative deviation " + fmt(worst)};
    }
  }
  return {"improved measurements decay", true, "alpha in {0.1, 0.5, 0.9}"};
}

CheckResult error_bound(RngState& rng) {
  for (double sigma_n : {0.0, 10.0}) {
    for (double alpha : {0.1, 0.5, 0.9}) {
      const OracleSetup s = oracle_setup(rng, 32, sigma_n);
      DenoiserSpec spec;
      spec.kind = DenoiserKind::oracle_linear;
      spec.oracle_alpha = alpha;
      spec.truth = s.truth;
      const auto denoiser = make_denoiser(spec);
      IdbpConfig cfg = noisy_inpainting_defaults();
      cfg.delta = sigma_n > 0.0 ? 0.0 : 5.0;
      cfg.iterations = 30;
      const double sigma = sigma_n + cfg.delta;
      const ImageGrid y_bar = improved_measurements(*s.truth, s.op, s.noise);

      std::vector<ImageGrid> xs;
      std::vector<ImageGrid> ys{s.init};
      idbp_run(s.op, s.y, sigma_n, *denoiser, cfg, s.init, nullptr, [&](const IdbpIterate& it) {
        xs.push_back(it.x_tilde);
        ys.push_back(it.y_tilde);
      });
      // Bound constant measured on every point the proof feeds to the denoiser.
      double b = 0.0;
      for (const ImageGrid* z : {&y_bar, s.truth.get()}) {
        b = std::max(b, distance(denoiser->denoise(*z, sigma), *z) / sigma);
      }
      for (const ImageGrid& z : ys) b = std::max(b, distance(denoiser->denoise(z, sigma), z) / sigma);
      const double k_sigma = 1.0 - alpha;
      const double d0 = distance(ys[0], y_bar);
      const double pinv_e = norm2(s.op.pseudoinverse(s.noise));
      for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
        const double lhs = distance(xs[k], *s.truth);  // x_{k+1}
        const double rhs = std::pow(k_sigma, static_cast<double>(k)) * d0 +
                           pinv_e / (1.0 - k_sigma) + (1.0 / (1.0 - k_sigma) + 5.0) * sigma * b;
        if (lhs > rhs + 1e-9) {
          return {"recovery error bound", false,
                  "violated at k=" + std::to_string(k) + ": " + fmt(lhs) + " > " + fmt(rhs)};
        }
      }
    }
  }
  return {"recovery error bound", true, "noiseless and noisy inpainting"};
}

CheckResult denoiser_triangle(RngState& rng) {
  const OracleSetup s = oracle_setup(rng, 24, 10.0);
  DenoiserSpec spec;
  spec.kind = DenoiserKind::dct_threshold;
  const auto denoiser = make_denoiser(spec);
  IdbpConfig cfg = noisy_inpainting_defaults();
  cfg.iterations = 10;
  const double sigma = 10.0;
  std::vector<ImageGrid> inputs{s.init};
  std::vector<ImageGrid> outputs;
  idbp_run(s.op, s.y, 10.0, *denoiser, cfg, s.init, nullptr, [&](const IdbpIterate& it) {
    outputs.push_back(it.x_tilde);
    inputs.push_back(it.y_tilde);
  });
  inputs.pop_back();
  double b = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    b = std::max(b, distance(outputs[k], inputs[k]) / sigma);
  }
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const double lhs = distance(outputs[k], outputs[k - 1]);
    const double rhs = distance(inputs[k], inputs[k - 1]) + 2.0 * sigma * b;
    if (lhs > rhs + 1e-9) {
      return {"denoiser triangle bound", false, "violated at k=" + std::to_string(k)};
    }
  }
  return {"denoiser triangle bound", true, "B = " + fmt(b)};
}

CheckResult fixed_points(RngState& rng) {
  const InpaintingOperator op = generate_random_mask(16, 16, 0.5, rng);
  const ImageGrid x = synthetic_image(16, 16, rng);
  const ImageGrid y = op.forward(add_gaussian_noise(x, 5.0, rng));
  DenoiserSpec spec;
  spec.kind = DenoiserKind::linear_shrink;
  spec.shrink_gamma = 0.02;
  const auto denoiser = make_denoiser(spec);

  IdbpConfig icfg = noisy_inpainting_defaults();
  icfg.iterations = 400;
  double idbp_step = 0.0;
  idbp_run(op, y, 5.0, *denoiser, icfg, y, nullptr, [&](const IdbpIterate& it) {
    idbp_step = distance(it.y_tilde, it.y_tilde_prev);
  });

  PnpConfig pcfg;
  pcfg.beta = 1.0;
  pcfg.lambda = 0.05;
  pcfg.iterations = 3000;
  ImageGrid prev_x = y;
  double pnp_step = 0.0;
  pnp_run(op, y, 5.0, *denoiser, pcfg, y, nullptr, [&](const PnpIterate& it) {
    pnp_step = distance(it.x, prev_x);
    prev_x = it.x;
  });
  const bool ok = idbp_step < 1e-9 && pnp_step < 1e-9;
  return {"linear denoiser fixed points", ok,
          "final steps idbp " + fmt(idbp_step) + ", pnp " + fmt(pnp_step)};
}

CheckResult fft_consistency(RngState& rng) {
  double worst = 0.0;
  for (std::size_t n : {15, 64, 100}) {
    const ImageGrid x = add_gaussian_noise(ImageGrid(n, n), 1.0, rng);
    const ImageGrid h = add_gaussian_noise(ImageGrid(n, n), 1.0, rng);
    const Fft2d fft(n, n);
    const ComplexGrid fx = fft.forward(x);
    const ImageGrid back = fft.inverse_real(fx);
    worst = std::max(worst, distance(back, x) / norm2(x));
    double energy = 0.0;
    for (const Complex& c : fx.data) energy += std::norm(c);
    energy /= static_cast<double>(n * n);
    worst = std::max(worst, std::abs(energy - dot(x, x)) / dot(x, x));
    // Circular convolution by definition against the spectral product.
    ImageGrid conv(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < n; ++b) s += h(a, b) * x((r + n - a) % n, (c + n - b) % n);
        }
        conv(r, c) = s;
      }
    }
    ComplexGrid prod = fft.forward(h);
    for (std::size_t i = 0; i < prod.data.size(); ++i) prod.data[i] *= fx.data[i];
    worst = std::max(worst, distance(fft.inverse_real(prod), conv) / norm2(conv));
  }
  return {"fft consistency", worst <= 1e-9, "max relative error " + fmt(worst)};
}

}  // namespace

ImageGrid synthetic_image(std::size_t height, std::size_t width, RngState& rng) {
  ImageGrid img(height, width, 128.0);
  for (int term = 0; term < 6; ++term) {
    const double fx = 1.0 + 4.0 * rng.next_uniform();
    const double fy = 1.0 + 4.0 * rng.next_uniform();
    const double phase = 2.0 * std::numbers::pi * rng.next_uniform();
    const double amp = 10.0 + 20.0 * rng.next_uniform();
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        img(r, c) += amp * std::sin(2.0 * std::numbers::pi *
                                        (fx * static_cast<double>(r) / static_cast<double>(height) +
                                         fy * static_cast<double>(c) / static_cast<double>(width)) +
                                    phase);
      }
    }
  }
  return img;
}

std::vector<CheckResult> run_verification(std::uint64_t seed, std::size_t instances) {
  RngState rng{seed, 0};
  std::vector<CheckResult> out;
  out.push_back(projection_algebra(rng, instances));
  out.push_back(condition_identity(rng, instances));
  out.push_back(measurement_decay(rng));
  out.push_back(error_bound(rng));
  out.push_back(denoiser_triangle(rng));
  out.push_back(fixed_points(rng));
  out.push_back(fft_consistency(rng));
  return out;
}

}  // namespace idbp
