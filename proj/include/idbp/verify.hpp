#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idbp/image.hpp"

namespace idbp {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Smooth random test image with intensities roughly in [0, 255].
ImageGrid synthetic_image(std::size_t height, std::size_t width, RngState& rng);

/// Runs the algebraic and convergence property checks on small synthetic
/// problems: projection identities, the inpainting condition identity, the
/// monotone and bounded error behaviour of IDBP with oracle denoisers, the
/// triangle bound between denoiser outputs, fixed-point convergence with a
/// linear denoiser, and FFT self-consistency.
std::vector<CheckResult> run_verification(std::uint64_t seed, std::size_t instances = 200);

}  // namespace idbp
