// Reference implementations used only by the tests. They trade speed for
// directness: dense matrices, textbook sums and explicit loops.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "idbp/image.hpp"
#include "idbp/operators.hpp"

namespace oracle {

using idbp::ImageGrid;

inline Eigen::VectorXd to_vec(const ImageGrid& x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

inline ImageGrid to_grid(const Eigen::VectorXd& v, std::size_t h, std::size_t w) {
  ImageGrid g(h, w);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = v[static_cast<Eigen::Index>(i)];
  return g;
}

/// X[k1, k2] = sum_{n1, n2} x[n1, n2] exp(-2 pi i (k1 n1 / h + k2 n2 / w)).
inline std::vector<std::complex<double>> direct_dft(const ImageGrid& x) {
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t k1 = 0; k1 < h; ++k1) {
    for (std::size_t k2 = 0; k2 < w; ++k2) {
      std::complex<double> s = 0.0;
      for (std::size_t n1 = 0; n1 < h; ++n1) {
        for (std::size_t n2 = 0; n2 < w; ++n2) {
          const double ang = -2.0 * std::numbers::pi *
                             (static_cast<double>((k1 * n1) % h) / static_cast<double>(h) +
                              static_cast<double>((k2 * n2) % w) / static_cast<double>(w));
          s += x(n1, n2) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      out[k1 * w + k2] = s;
    }
  }
  return out;
}

/// Dense matrix of circular convolution with a centered odd kernel:
/// (H x)[r, c] = sum_{a, b} k[a, b] x[r - a + rows/2, c - b + cols/2] (mod size).
inline Eigen::MatrixXd circulant_blur(const idbp::BlurKernel& k, std::size_t h, std::size_t w) {
  const auto n = static_cast<Eigen::Index>(h * w);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const long hr = static_cast<long>(k.rows / 2);
  const long hc = static_cast<long>(k.cols / 2);
  const long H = static_cast<long>(h);
  const long W = static_cast<long>(w);
  for (long r = 0; r < H; ++r) {
    for (long c = 0; c < W; ++c) {
      for (long a = 0; a < static_cast<long>(k.rows); ++a) {
        for (long b = 0; b < static_cast<long>(k.cols); ++b) {
          const long sr = ((r - (a - hr)) % H + H) % H;
          const long sc = ((c - (b - hc)) % W + W) % W;
          m(r * W + c, sr * W + sc) += k.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        }
      }
    }
  }
  return m;
}

/// Selection matrix for an inpainting mask, m x n.
inline Eigen::MatrixXd selection(const idbp::InpaintingOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.height() * op.width());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.observed_count()), n);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (op.observed(static_cast<std::size_t>(i))) s(row++, i) = 1.0;
  }
  return s;
}

/// Full-size (n x n) diagonal form of the mask, matching the library's
/// convention that observations live on the full grid.
inline Eigen::MatrixXd mask_matrix(const idbp::InpaintingOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.height() * op.width());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) s(i, i) = op.observed(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
  return s;
}

/// argmin_x ||y - H x||^2 + gamma sigma^2 ||x||^2 = (H^T H + gamma sigma^2 I)^{-1} H^T y.
inline Eigen::VectorXd ridge_solution(const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                                      double gamma_sigma2) {
  const Eigen::Index n = H.cols();
  const Eigen::MatrixXd A = H.transpose() * H + gamma_sigma2 * Eigen::MatrixXd::Identity(n, n);
  return A.ldlt().solve(H.transpose() * y);
}

}  // namespace oracle
