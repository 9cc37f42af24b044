#include <doctest.h>

#include <cmath>

#include "idbp/operators.hpp"
#include "oracles.hpp"

using namespace idbp;

namespace {

ImageGrid random_grid(std::size_t h, std::size_t w, RngState& rng, double scale = 50.0) {
  return add_gaussian_noise(ImageGrid(h, w, 100.0), scale, rng);
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("random mask draws exactly the requested count") {
  RngState rng{11, 0};
  const InpaintingOperator op = generate_random_mask(20, 30, 0.8, rng);
  CHECK(op.observed_count() == 600 - 480);
  RngState again{11, 0};
  CHECK(generate_random_mask(20, 30, 0.8, again).mask() == op.mask());
  RngState other{12, 0};
  CHECK(generate_random_mask(20, 30, 0.8, other).mask() != op.mask());
  CHECK_THROWS(generate_random_mask(4, 4, 1.0, rng));
  CHECK_THROWS(InpaintingOperator(2, 2, std::vector<bool>(4, false)));
}

TEST_CASE("inpainting operator agrees with the dense selection matrix") {
  RngState rng{3, 0};
  const InpaintingOperator op = generate_random_mask(8, 8, 0.6, rng);
  const Eigen::MatrixXd S = oracle::selection(op);
  const ImageGrid x = random_grid(8, 8, rng);
  const ImageGrid z = random_grid(8, 8, rng);

  const Eigen::VectorXd sx = S * oracle::to_vec(x);
  const auto observed = op.observed_values(op.forward(x));
  REQUIRE(observed.size() == static_cast<std::size_t>(sx.size()));
  for (std::size_t i = 0; i < observed.size(); ++i) CHECK(observed[i] == sx[static_cast<Eigen::Index>(i)]);

  const Eigen::MatrixXd P = S.transpose() * S;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(64, 64) - P;
  CHECK(max_abs(oracle::to_vec(op.project_null(z)) - Q * oracle::to_vec(z)) == 0.0);
  CHECK(max_abs(oracle::to_vec(op.project_row(z)) - P * oracle::to_vec(z)) == 0.0);

  const double rho = 0.37;
  const Eigen::VectorXd y = oracle::to_vec(op.forward(x));
  const Eigen::MatrixXd M = oracle::mask_matrix(op);
  const Eigen::VectorXd expect =
      (M + rho * Eigen::MatrixXd::Identity(64, 64)).ldlt().solve(M * y + rho * oracle::to_vec(z));
  CHECK(max_abs(oracle::to_vec(op.regularized_solve(op.forward(x), z, rho)) - expect) < 1e-10);
}

TEST_CASE("scenario kernels") {
  const BlurKernel k4 = generate_scenario_kernel(4);
  REQUIRE(k4.rows == 5);
  const double w[5] = {1, 4, 6, 4, 1};
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 5; ++c) CHECK(k4.at(r, c) == doctest::Approx(w[r] * w[c] / 256.0));
  }

  const BlurKernel k3 = generate_scenario_kernel(3);
  REQUIRE(k3.rows == 9);
  for (double v : k3.values) CHECK(v == doctest::Approx(1.0 / 81.0));

  const BlurKernel k1 = generate_scenario_kernel(1);
  REQUIRE(k1.rows == 15);
  CHECK(k1.sum() == doctest::Approx(1.0));
  double norm = 0.0;
  for (int a = -7; a <= 7; ++a) {
    for (int b = -7; b <= 7; ++b) norm += 1.0 / (1.0 + a * a + b * b);
  }
  CHECK(k1.at(7, 7) == doctest::Approx(1.0 / norm));
  CHECK(k1.at(7, 8) == doctest::Approx(0.5 / norm));
  CHECK(k1.at(0, 0) == doctest::Approx(1.0 / 99.0 / norm));

  const BlurKernel custom = generate_scenario_kernel(2, [](int a, int b) { return a == 0 && b == 0 ? 1.0 : 0.0; });
  CHECK(custom.at(7, 7) == 1.0);

  CHECK(*scenario(1).noise_variance == 2.0);
  CHECK(*scenario(2).noise_variance == 8.0);
  CHECK(!scenario(3).noise_variance);
  CHECK(*scenario(3).target_bsnr_db == 40.0);
  CHECK(*scenario(4).noise_variance == 49.0);
  CHECK_THROWS(scenario(5));
  CHECK_THROWS(BlurKernel{2, 2, {1, 1, 1, 1}}.validate());
}

TEST_CASE("blur operator agrees with the dense circulant model") {
  RngState rng{5, 0};
  const std::size_t h = 12;
  const std::size_t w = 10;
  BlurKernel k{3, 5, {}};
  for (int i = 0; i < 15; ++i) k.values.push_back(0.1 + rng.next_uniform());
  const double eps = 0.02;
  const double sigma = 3.0;
  const BlurOperator op(k, h, w, eps, sigma);
  const Eigen::MatrixXd H = oracle::circulant_blur(k, h, w);
  const auto n = static_cast<Eigen::Index>(h * w);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd pinv = (H.transpose() * H + eps * sigma * sigma * I).ldlt().solve(H.transpose());

  const ImageGrid x = random_grid(h, w, rng);
  const Eigen::VectorXd xv = oracle::to_vec(x);
  const double scale = max_abs(xv);
  CHECK(max_abs(oracle::to_vec(op.forward(x)) - H * xv) < 1e-10 * scale);
  CHECK(max_abs(oracle::to_vec(op.pseudoinverse(x)) - pinv * xv) < 1e-10 * scale);
  CHECK(max_abs(oracle::to_vec(op.project_null(x)) - (I - pinv * H) * xv) < 1e-10 * scale);

  const ImageGrid z = random_grid(h, w, rng);
  const double rho = 0.5;
  const Eigen::VectorXd expect =
      (H.transpose() * H + rho * I).ldlt().solve(H.transpose() * xv + rho * oracle::to_vec(z));
  CHECK(max_abs(oracle::to_vec(op.regularized_solve(x, z, rho)) - expect) < 1e-10 * scale);

  const BlurOperator looser = op.with_regularization(0.5, sigma);
  CHECK(looser.epsilon() == 0.5);
  CHECK(looser.forward(x) == op.forward(x));
}

TEST_CASE("unregularized blur inverse zeroes vanishing frequencies") {
  const BlurOperator op(uniform_kernel(3), 6, 6);  // the 3-tap box has zeros at k = 2 and 4
  RngState rng{8, 0};
  const ImageGrid x = random_grid(6, 6, rng);
  CHECK(op.pseudoinverse(x).all_finite());
  const ImageGrid q = op.project_null(x);
  CHECK(norm2(op.forward(q)) < 1e-9 * norm2(x));
  CHECK(distance(op.project_null(q), q) < 1e-9 * norm2(x));
}

TEST_CASE("delta kernel is the identity") {
  const BlurOperator op(delta_kernel(), 5, 7);
  RngState rng{4, 0};
  const ImageGrid x = random_grid(5, 7, rng);
  CHECK(distance(op.forward(x), x) < 1e-12 * norm2(x));
  CHECK(norm2(op.project_null(x)) < 1e-12 * norm2(x));
}
