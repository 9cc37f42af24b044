#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "idbp/image.hpp"

using namespace idbp;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("idbp_test_" + name);
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST_CASE("grid arithmetic and norms") {
  ImageGrid a(2, 3, 1.0);
  ImageGrid b(2, 3);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(i);
  const ImageGrid c = 2.0 * a + b;
  CHECK(c(1, 2) == 7.0);
  CHECK(dot(a, b) == 15.0);
  CHECK(norm2(b) == doctest::Approx(std::sqrt(55.0)));
  CHECK(distance(a, a) == 0.0);
  CHECK(mean(b) == 2.5);
  CHECK(variance(b) == doctest::Approx(35.0 / 12.0));
  CHECK_THROWS_AS(a + ImageGrid(3, 2), std::invalid_argument);
}

TEST_CASE("psnr against a hand computed mse") {
  ImageGrid ref(4, 4, 100.0);
  ImageGrid est = ref;
  est(0, 0) += 8.0;  // MSE = 64 / 16 = 4
  CHECK(psnr(ref, est) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 4.0)).epsilon(1e-14));
  CHECK(std::isinf(psnr(ref, ref)));

  ImageGrid worse = ref;
  worse(0, 0) += 16.0;
  CHECK(isnr(ref, worse, est) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
}

TEST_CASE("bsnr and its inverse") {
  ImageGrid x(8, 8);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 5) * 10.0;
  const double v = variance(x);
  CHECK(bsnr(x, 2.0) == doctest::Approx(10.0 * std::log10(v / 4.0)));
  CHECK(bsnr(x, sigma_for_bsnr(x, 40.0)) == doctest::Approx(40.0).epsilon(1e-13));
  CHECK_THROWS(bsnr(x, 0.0));
  CHECK_THROWS(sigma_for_bsnr(ImageGrid(4, 4, 3.0), 40.0));
}

TEST_CASE("rng is reproducible and has sane moments") {
  RngState a{42, 0};
  RngState b{42, 0};
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  RngState jump{42, 5};
  RngState walk{42, 0};
  for (int i = 0; i < 5; ++i) walk.next_u64();
  CHECK(jump.next_u64() == walk.next_u64());

  RngState g{7, 0};
  double s = 0.0;
  double s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.next_gaussian();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);

  RngState u{9, 0};
  for (int i = 0; i < 1000; ++i) {
    const auto k = u.next_below(7);
    CHECK(k < 7);
  }
}

TEST_CASE("noise with zero sigma is a copy") {
  RngState rng{1, 0};
  ImageGrid x(3, 3, 5.0);
  CHECK(add_gaussian_noise(x, 0.0, rng) == x);
}

TEST_CASE("pgm round trip with clamping and rounding") {
  ImageGrid img(3, 4);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i) * 20.0 + 0.5;
  img(0, 0) = -5.0;
  img(2, 3) = 400.0;
  const auto path = temp_path("round.pgm");
  save_pgm(img, path);
  const ImageGrid back = load_pgm(path);
  REQUIRE(back.height() == 3);
  REQUIRE(back.width() == 4);
  CHECK(back(0, 0) == 0.0);
  CHECK(back(2, 3) == 255.0);
  CHECK(back(0, 1) == 21.0);  // 20.5 rounds away from zero

  std::ifstream raw(path, std::ios::binary);
  std::string header;
  std::getline(raw, header);
  CHECK(header == "P5");
  std::filesystem::remove(path);
}

TEST_CASE("pgm header comments are skipped") {
  const auto path = temp_path("comment.pgm");
  write_bytes(path, std::string("P5\n# made by hand\n2 1\n255\n") + char(10) + char(200));
  const ImageGrid img = load_pgm(path);
  CHECK(img(0, 0) == 10.0);
  CHECK(img(0, 1) == 200.0);
  std::filesystem::remove(path);
}

TEST_CASE("malformed pgm files are rejected") {
  const auto path = temp_path("bad.pgm");
  write_bytes(path, "P2\n2 2\n255\n1 2 3 4\n");
  CHECK_THROWS(load_pgm(path));
  write_bytes(path, "P5\n2 2\n65535\n");
  CHECK_THROWS(load_pgm(path));
  write_bytes(path, std::string("P5\n2 2\n255\n") + "abc");
  CHECK_THROWS_WITH(load_pgm(path), doctest::Contains("truncated"));
  std::filesystem::remove(path);
  CHECK_THROWS(load_pgm(temp_path("does_not_exist.pgm")));
}
