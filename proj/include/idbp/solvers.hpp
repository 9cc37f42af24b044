#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "idbp/denoisers.hpp"
#include "idbp/image.hpp"
#include "idbp/operators.hpp"

namespace idbp {

enum class OutputMode { last_x, last_y };

struct IdbpConfig {
  double delta = 0.0;
  std::size_t iterations = 75;
  OutputMode output_mode = OutputMode::last_x;
  /// Blur only. idbp_run uses the operator as given; idbp_auto_tuned starts here.
  double epsilon = 1e-3;
  double condition_margin_tau = 3.0;
  double epsilon_increment = 1e-4;
  std::size_t max_restarts = 200;

  void validate() const;
};

/// Noiseless inpainting: delta 5, 150 iterations, returns the last y.
IdbpConfig noiseless_inpainting_defaults();
/// Noisy inpainting: delta 0, 75 iterations, returns the last x.
IdbpConfig noisy_inpainting_defaults();
/// Deblurring: delta 5, 30 iterations, epsilon {7e-3, 4e-3, 8e-3, 2e-3} per scenario.
IdbpConfig deblurring_defaults(int scenario_id);
/// Auto-tuned deblurring: delta 5, epsilon 1e-3, increment 1e-4, tau 3, 30 iterations.
IdbpConfig auto_tuned_defaults();

struct PnpConfig {
  double beta = 1.0;
  double lambda = 10.0 / 255.0;
  std::size_t iterations = 150;
  /// Noise std used in the least-squares step when sigma_n is smaller.
  double sigma_floor = 1e-3;

  void validate() const;
};

PnpConfig pnp_inpainting_defaults(double sigma_n);
PnpConfig pnp_deblurring_defaults(int scenario_id);

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based within the current (re)start
  double psnr_db = 0.0;       // NaN without ground truth
  double condition_ratio = 0.0;  // NaN when undefined
  double epsilon = 0.0;
  std::size_t restarts = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  std::size_t restarts = 0;
  double final_epsilon = 0.0;
};

struct SolverResult {
  ImageGrid estimate;
  IterationTrace trace;
};

/// State handed to an observer after each completed IDBP iteration.
struct IdbpIterate {
  std::size_t iteration;
  std::size_t restarts;
  const ImageGrid& x_tilde;
  const ImageGrid& y_tilde;
  const ImageGrid& y_tilde_prev;
};
using IdbpObserver = std::function<void(const IdbpIterate&)>;

struct PnpIterate {
  std::size_t iteration;
  const ImageGrid& x;
  const ImageGrid& v;
  const ImageGrid& u;
};
using PnpObserver = std::function<void(const PnpIterate&)>;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// [(1/sigma_n^2) ||y - H x||] / [(1/(sigma_n + delta)^2) ||H^+ (y - H x)||].
/// Values below 1 certify that delta violates the feasibility condition.
/// Returns +inf when the denominator vanishes.
double condition_ratio(const DegradationOperator& op, const ImageGrid& y,
                       const ImageGrid& x_tilde, double sigma_n, double delta);

/// Iterative denoising and backward projections:
///   x_k = D(y_{k-1}; sigma_n + delta),  y_k = H^+ y + Q_H x_k,
/// starting from y_0 = init.
SolverResult idbp_run(const DegradationOperator& op, const ImageGrid& y, double sigma_n,
                      const Denoiser& denoiser, const IdbpConfig& cfg, const ImageGrid& init,
                      const ImageGrid* truth = nullptr, const IdbpObserver& observer = {});

/// IDBP for deblurring with epsilon tuned on the fly: whenever the condition
/// ratio drops below tau at an iteration k > 1, epsilon grows by the
/// increment and the iteration restarts from init.
SolverResult idbp_auto_tuned(const BlurOperator& op, const ImageGrid& y, double sigma_n,
                             const Denoiser& denoiser, const IdbpConfig& cfg,
                             const ImageGrid& init, const ImageGrid* truth = nullptr,
                             const IdbpObserver& observer = {});

/// Plug-and-play ADMM:
///   x_k = (H^T H + lambda s^2 I)^{-1} (H^T y + lambda s^2 (v_{k-1} - u_{k-1}))
///   v_k = D(x_k + u_{k-1}; sqrt(beta / lambda))
///   u_k = u_{k-1} + x_k - v_k
/// with s = max(sigma_n, sigma_floor), v_0 = init, u_0 = 0.
SolverResult pnp_run(const DegradationOperator& op, const ImageGrid& y, double sigma_n,
                     const Denoiser& denoiser, const PnpConfig& cfg, const ImageGrid& init,
                     const ImageGrid* truth = nullptr, const PnpObserver& observer = {});

/// Fills every missing pixel with the median of its available 3x3 neighbours,
/// sweeping in raster order until nothing is missing. Each sweep only reads
/// values available when it started.
ImageGrid median_initialize(const InpaintingOperator& op, const ImageGrid& y);

/// x + H^+ e, the best measurements IDBP can hope to reconstruct.
ImageGrid improved_measurements(const ImageGrid& x_true, const DegradationOperator& op,
                                const ImageGrid& noise);

}  // namespace idbp
