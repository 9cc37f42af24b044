#include "idbp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace idbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double psnr_or_nan(const ImageGrid* truth, const ImageGrid& estimate) {
  return truth ? psnr(*truth, estimate) : kNaN;
}

void require_finite_iterate(const ImageGrid& x, const char* solver, std::size_t k) {
  if (!x.all_finite()) {
    throw SolverError(std::string(solver) + ": non-finite iterate at iteration " +
                      std::to_string(k));
  }
}

void check_inputs(const DegradationOperator& op, const ImageGrid& y, const ImageGrid& init,
                  const ImageGrid* truth) {
  require_same_shape(y, init, "solver: observations vs initialization");
  if (y.height() != op.height() || y.width() != op.width()) {
    throw std::invalid_argument("solver: observations do not match the operator size");
  }
  if (truth) require_same_shape(y, *truth, "solver: observations vs ground truth");
  if (!y.all_finite() || !init.all_finite()) {
    throw std::invalid_argument("solver: non-finite observations or initialization");
  }
}

// One IDBP pass from init. When tau is set and the condition ratio falls
// below it at some k > 1, the pass stops and returns nullopt.
std::optional<ImageGrid> idbp_pass(const DegradationOperator& op, const ImageGrid& y,
                                   double sigma_n, const Denoiser& denoiser,
                                   const IdbpConfig& cfg, const ImageGrid& init,
                                   const ImageGrid* truth, const IdbpObserver& observer,
                                   std::size_t restarts, std::optional<double> tau,
                                   IterationTrace& trace) {
  const double sigma = sigma_n + cfg.delta;
  const ImageGrid pinv_y = op.pseudoinverse(y);
  ImageGrid y_prev = init;
  ImageGrid x_tilde;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    x_tilde = denoiser.denoise(y_prev, sigma);
    require_finite_iterate(x_tilde, "idbp", k);
    ImageGrid y_tilde = op.back_project(pinv_y, x_tilde);
    require_finite_iterate(y_tilde, "idbp", k);

    IterationRecord rec;
    rec.iteration = k;
    rec.restarts = restarts;
    rec.epsilon = op.epsilon();
    rec.condition_ratio =
        sigma_n > 0.0 ? condition_ratio(op, y, x_tilde, sigma_n, cfg.delta) : kNaN;
    rec.psnr_db =
        psnr_or_nan(truth, cfg.output_mode == OutputMode::last_x ? x_tilde : y_tilde);
    trace.records.push_back(rec);

    if (observer) observer(IdbpIterate{k, restarts, x_tilde, y_tilde, y_prev});
    y_prev = std::move(y_tilde);

    // The first ratio depends mostly on the initialization and is not checked.
    if (tau && k > 1 && rec.condition_ratio < *tau) return std::nullopt;
  }
  return cfg.output_mode == OutputMode::last_x ? x_tilde : y_prev;
}

}  // namespace

void IdbpConfig::validate() const {
  if (!(delta >= 0.0)) throw std::invalid_argument("IdbpConfig: delta must be >= 0");
  if (iterations == 0) throw std::invalid_argument("IdbpConfig: iterations must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("IdbpConfig: epsilon must be >= 0");
  if (!(condition_margin_tau > 1.0)) {
    throw std::invalid_argument("IdbpConfig: condition margin tau must exceed 1");
  }
  if (!(epsilon_increment > 0.0)) {
    throw std::invalid_argument("IdbpConfig: epsilon increment must be positive");
  }
}

void PnpConfig::validate() const {
  if (!(beta > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("PnpConfig: beta and lambda must be positive");
  }
  if (iterations == 0) throw std::invalid_argument("PnpConfig: iterations must be positive");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("PnpConfig: sigma floor must be positive");
  if (!std::isfinite(std::sqrt(beta / lambda))) {
    throw std::invalid_argument("PnpConfig: sqrt(beta / lambda) is not finite");
  }
}

IdbpConfig noiseless_inpainting_defaults() {
  IdbpConfig cfg;
  cfg.delta = 5.0;
  cfg.iterations = 150;
  cfg.output_mode = OutputMode::last_y;
  return cfg;
}

IdbpConfig noisy_inpainting_defaults() {
  IdbpConfig cfg;
  cfg.delta = 0.0;
  cfg.iterations = 75;
  cfg.output_mode = OutputMode::last_x;
  return cfg;
}

IdbpConfig deblurring_defaults(int scenario_id) {
  static constexpr double kEpsilon[4] = {7e-3, 4e-3, 8e-3, 2e-3};
  if (scenario_id < 1 || scenario_id > 4) {
    throw std::invalid_argument("deblurring_defaults: scenario id must be 1..4");
  }
  IdbpConfig cfg;
  cfg.delta = 5.0;
  cfg.iterations = 30;
  cfg.epsilon = kEpsilon[scenario_id - 1];
  return cfg;
}

IdbpConfig auto_tuned_defaults() {
  IdbpConfig cfg;
  cfg.delta = 5.0;
  cfg.iterations = 30;
  cfg.epsilon = 1e-3;
  cfg.epsilon_increment = 1e-4;
  cfg.condition_margin_tau = 3.0;
  return cfg;
}

PnpConfig pnp_inpainting_defaults(double sigma_n) {
  PnpConfig cfg;
  if (sigma_n > 0.0) {
    cfg.beta = 0.8;
    cfg.lambda = 5.0 / 255.0;
  } else {
    cfg.beta = 1.0;
    cfg.lambda = 10.0 / 255.0;
  }
  cfg.iterations = 150;
  return cfg;
}

PnpConfig pnp_deblurring_defaults(int scenario_id) {
  static constexpr double kBeta[4] = {0.85, 0.85, 0.9, 0.8};
  static constexpr double kLambda[4] = {2.0, 1.0, 3.0, 1.0};
  if (scenario_id < 1 || scenario_id > 4) {
    throw std::invalid_argument("pnp_deblurring_defaults: scenario id must be 1..4");
  }
  PnpConfig cfg;
  cfg.beta = kBeta[scenario_id - 1];
  cfg.lambda = kLambda[scenario_id - 1] / 255.0;
  cfg.iterations = 50;
  return cfg;
}

double condition_ratio(const DegradationOperator& op, const ImageGrid& y,
                       const ImageGrid& x_tilde, double sigma_n, double delta) {
  if (!(sigma_n > 0.0)) throw std::invalid_argument("condition_ratio: sigma_n must be positive");
  const ImageGrid residual = y - op.forward(x_tilde);
  const double lhs = norm2(residual) / (sigma_n * sigma_n);
  const double s = sigma_n + delta;
  const double rhs = norm2(op.pseudoinverse(residual)) / (s * s);
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

SolverResult idbp_run(const DegradationOperator& op, const ImageGrid& y, double sigma_n,
                      const Denoiser& denoiser, const IdbpConfig& cfg, const ImageGrid& init,
                      const ImageGrid* truth, const IdbpObserver& observer) {
  cfg.validate();
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("idbp: sigma_n must be >= 0");
  if (!(sigma_n + cfg.delta > 0.0)) {
    throw std::invalid_argument("idbp: sigma_n + delta must be positive");
  }
  check_inputs(op, y, init, truth);
  SolverResult result;
  result.estimate = *idbp_pass(op, y, sigma_n, denoiser, cfg, init, truth, observer, 0,
                               std::nullopt, result.trace);
  result.trace.final_epsilon = op.epsilon();
  return result;
}

SolverResult idbp_auto_tuned(const BlurOperator& op, const ImageGrid& y, double sigma_n,
                             const Denoiser& denoiser, const IdbpConfig& cfg,
                             const ImageGrid& init, const ImageGrid* truth,
                             const IdbpObserver& observer) {
  cfg.validate();
  if (!(sigma_n > 0.0)) throw std::invalid_argument("idbp_auto_tuned: sigma_n must be positive");
  check_inputs(op, y, init, truth);

  SolverResult result;
  double epsilon = cfg.epsilon;
  for (std::size_t restarts = 0;; ++restarts) {
    const BlurOperator tuned = op.with_regularization(epsilon, sigma_n);
    auto estimate = idbp_pass(tuned, y, sigma_n, denoiser, cfg, init, truth, observer, restarts,
                              cfg.condition_margin_tau, result.trace);
    if (estimate) {
      result.estimate = std::move(*estimate);
      result.trace.restarts = restarts;
      result.trace.final_epsilon = epsilon;
      return result;
    }
    if (restarts == cfg.max_restarts) {
      throw SolverError("idbp_auto_tuned: restart budget of " + std::to_string(cfg.max_restarts) +
                        " exhausted (epsilon reached " + std::to_string(epsilon) +
                        "); the margin tau cannot be met");
    }
    epsilon += cfg.epsilon_increment;
  }
}

SolverResult pnp_run(const DegradationOperator& op, const ImageGrid& y, double sigma_n,
                     const Denoiser& denoiser, const PnpConfig& cfg, const ImageGrid& init,
                     const ImageGrid* truth, const PnpObserver& observer) {
  cfg.validate();
  if (!(sigma_n >= 0.0)) throw std::invalid_argument("pnp: sigma_n must be >= 0");
  check_inputs(op, y, init, truth);

  const double s = std::max(sigma_n, cfg.sigma_floor);
  const double rho = cfg.lambda * s * s;
  const double denoiser_sigma = std::sqrt(cfg.beta / cfg.lambda);

  SolverResult result;
  ImageGrid v = init;
  ImageGrid u(y.height(), y.width());
  ImageGrid x;
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    x = op.regularized_solve(y, v - u, rho);
    v = denoiser.denoise(x + u, denoiser_sigma);
    u += x;
    u -= v;
    require_finite_iterate(x, "pnp", k);
    require_finite_iterate(u, "pnp", k);

    IterationRecord rec;
    rec.iteration = k;
    rec.psnr_db = psnr_or_nan(truth, x);
    rec.condition_ratio = kNaN;
    rec.epsilon = op.epsilon();
    result.trace.records.push_back(rec);
    if (observer) observer(PnpIterate{k, x, v, u});
  }
  result.estimate = std::move(x);
  result.trace.final_epsilon = op.epsilon();
  return result;
}

ImageGrid median_initialize(const InpaintingOperator& op, const ImageGrid& y) {
  if (y.height() != op.height() || y.width() != op.width()) {
    throw std::invalid_argument("median_initialize: observations do not match the mask");
  }
  const std::size_t h = y.height();
  const std::size_t w = y.width();
  ImageGrid out = op.pseudoinverse(y);
  std::vector<bool> known = op.mask();
  std::size_t missing = static_cast<std::size_t>(std::count(known.begin(), known.end(), false));

  std::vector<double> neighbours;
  neighbours.reserve(8);
  while (missing > 0) {
    const std::vector<bool> snapshot = known;
    const ImageGrid values = out;
    std::size_t filled = 0;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = r * w + c;
        if (snapshot[i]) continue;
        neighbours.clear();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const long rr = static_cast<long>(r) + dr;
            const long cc = static_cast<long>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) {
              continue;
            }
            const std::size_t j = static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc);
            if (snapshot[j]) neighbours.push_back(values[j]);
          }
        }
        if (neighbours.empty()) continue;
        std::sort(neighbours.begin(), neighbours.end());
        const std::size_t n = neighbours.size();
        out[i] = n % 2 == 1 ? neighbours[n / 2] : 0.5 * (neighbours[n / 2 - 1] + neighbours[n / 2]);
        known[i] = true;
        ++filled;
      }
    }
    // A mask with at least one observed pixel always makes progress.
    if (filled == 0) throw std::logic_error("median_initialize: no progress");
    missing -= filled;
  }
  return out;
}

ImageGrid improved_measurements(const ImageGrid& x_true, const DegradationOperator& op,
                                const ImageGrid& noise) {
  return x_true + op.pseudoinverse(noise);
}

}  // namespace idbp
