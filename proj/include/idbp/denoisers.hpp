#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "idbp/image.hpp"
#include "idbp/operators.hpp"

namespace idbp {

/// D(z; sigma): removes white Gaussian noise of std sigma from z. The prior
/// used by the restoration solvers is whatever the denoiser implies.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual ImageGrid denoise(const ImageGrid& z, double sigma) const = 0;
  virtual std::string name() const = 0;
};

enum class DenoiserKind {
  median,
  gaussian,
  nlm,
  dct_threshold,
  external,
  oracle_linear,
  oracle_bounded,
  linear_shrink,
  identity,
};

std::string to_string(DenoiserKind kind);
DenoiserKind parse_denoiser_kind(const std::string& name);

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::dct_threshold;

  int median_window = 3;

  double gaussian_std_per_sigma = 1.0 / 20.0;
  double gaussian_truncation = 3.0;

  int nlm_patch = 7;
  int nlm_search = 21;
  double nlm_h_per_sigma = 0.6;

  int dct_patch = 8;
  double dct_threshold_multiplier = 3.0;

  std::string external_command;
  std::chrono::milliseconds external_timeout{300'000};

  // oracle_linear: alpha * truth + (1 - alpha) * z
  // oracle_bounded: moves z toward truth by at most sigma * bound
  double oracle_alpha = 0.5;
  double oracle_bound = 1.0;
  std::shared_ptr<const ImageGrid> truth;

  // linear_shrink: z / (1 + gamma sigma^2)
  double shrink_gamma = 0.01;
};

std::unique_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec);

/// One-shot convenience around make_denoiser().
ImageGrid denoise(const DenoiserSpec& spec, const ImageGrid& z, double sigma);

/// Error raised by the external denoiser bridge.
class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header line sent to an external denoiser: "IDBP1 <height> <width> <sigma>\n",
/// sigma in shortest round-trip form.
std::string bridge_header(std::size_t height, std::size_t width, double sigma);

/// Runs `command` through /bin/sh, streams the header and height*width
/// little-endian float32 samples to its stdin and reads the same number of
/// samples back from its stdout.
ImageGrid external_denoise(const std::string& command, const ImageGrid& z, double sigma,
                           std::chrono::milliseconds timeout = std::chrono::milliseconds{300'000});

/// Empirical constants of the bounded-denoiser and null-space contraction
/// conditions. Both are maxima over finitely many samples and therefore
/// lower bounds on the true constants.
struct DenoiserDiagnostics {
  double bound_estimate_B = 0.0;
  double contraction_estimate_K = 0.0;
  std::size_t pairs = 0;
};

/// B = max ||D(z) - z|| / sigma over the samples.
/// K = max ||Q_H D(a) - Q_H D(b)|| / ||a - b|| over pairs whose difference
/// lies in the null space of H: b = a + Q_H (c - a) for every other sample c
/// and for a Gaussian perturbation c = a + N(0, sigma^2) drawn from rng.
/// Pairs closer than 1e-9 of their norm are skipped, since their ratio is
/// dominated by rounding.
DenoiserDiagnostics estimate_conditions(const Denoiser& denoiser, const DegradationOperator& op,
                                        const std::vector<ImageGrid>& samples, double sigma,
                                        RngState& rng);

}  // namespace idbp
