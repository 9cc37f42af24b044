#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "idbp/bench.hpp"
#include "idbp/verify.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTool = IDBP_TOOL_PATH;

struct Sandbox {
  fs::path dir;
  fs::path image;
  Sandbox() {
    dir = fs::temp_directory_path() / "idbp_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    idbp::RngState rng{2, 0};
    image = dir / "img.pgm";
    idbp::save_pgm(idbp::synthetic_image(32, 32, rng), image);
  }
  ~Sandbox() { fs::remove_all(dir); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd " + dir.string() + " && " + env + " " + kTool.string() + " " +
                            args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Sandbox s;
  CHECK(s.run("") == 1);
  CHECK(s.run("inpaint") == 1);
  CHECK(s.run("frobnicate --input img.pgm") == 1);
  CHECK(s.run("inpaint --input img.pgm --no-such-flag") == 1);
  CHECK(s.run("inpaint --input img.pgm --beta 1") == 1);
  CHECK(s.run("inpaint --input img.pgm --mask-frac 1.5") == 1);
  CHECK(s.run("deblur --input img.pgm --scenario 9") == 1);
  CHECK(s.run("inpaint --input img.pgm --denoiser bm3d") == 1);
  CHECK(s.run("inpaint --input img.pgm --denoiser external") == 1);
  CHECK(s.run("inpaint --input img.pgm --iters abc") == 1);
  CHECK(s.run("--help") == 0);
}

TEST_CASE("runtime failures exit with 2") {
  Sandbox s;
  CHECK(s.run("inpaint --input missing.pgm") == 2);
  CHECK(s.run("inpaint --input img.pgm --iters 2 --external-cmd false") == 2);
}

TEST_CASE("single image runs write their outputs") {
  Sandbox s;
  CHECK(s.run("inpaint --input img.pgm --mask-frac 0.8 --sigma-n 10 --delta 0 --iters 3 "
              "--output r.pgm --trace t.csv --report s.csv") == 0);
  CHECK(fs::exists(s.dir / "r.pgm"));
  const std::string trace = s.read("t.csv");
  CHECK(trace.rfind("iter,psnr_db,condition_ratio,epsilon,restarts\n1,", 0) == 0);
  CHECK(trace.find("1.000000,") != std::string::npos);
  CHECK(s.read("s.csv").find("# iters=3") != std::string::npos);

  CHECK(s.run("deblur --scenario 4 --input img.pgm --delta 5 --epsilon 2e-3 --iters 2") == 0);
  CHECK(s.run("deblur --scenario 1 --input img.pgm --auto-tune --iters 2 --trace a.csv") == 0);
  CHECK(s.run("pnp --input img.pgm --iters 2") == 0);
  CHECK(s.run("pnp --scenario 2 --input img.pgm --iters 2 --beta 0.5 --lambda 0.01") == 0);
}

TEST_CASE("bench over a directory") {
  Sandbox s;
  fs::create_directories(s.dir / "corpus");
  fs::copy(s.image, s.dir / "corpus" / "one.pgm");
  fs::copy(s.image, s.dir / "corpus" / "two.pgm");
  CHECK(s.run("bench --input corpus --iters 2 --sigma-n 10 --output res --trace res --report res/s.csv") == 0);
  CHECK(fs::exists(s.dir / "res" / "two_trace.csv"));
  CHECK(fs::exists(s.dir / "res" / "one_restored.pgm"));
  const auto report = idbp::read_summary_csv(s.dir / "res" / "s.csv");
  CHECK(report.rows.size() == 2);
  CHECK(s.run("bench --input corpus --iters 2 --solver pnp --scenario 3") == 0);
  CHECK(s.run("bench --input corpus --solver nope") == 1);
}

TEST_CASE("config file sits between defaults and flags") {
  Sandbox s;
  std::ofstream(s.dir / "idbp.cfg") << "# defaults for this directory\ninput = img.pgm\niters = 3\n"
                                       "sigma_n = 10\nbeta = 0.5\n";
  CHECK(s.run("inpaint --trace t.csv") == 0);
  CHECK(idbp::read_trace_csv(s.dir / "t.csv").size() == 3);
  CHECK(s.run("inpaint --trace t.csv --iters 5") == 0);
  CHECK(idbp::read_trace_csv(s.dir / "t.csv").size() == 5);

  std::ofstream(s.dir / "other.cfg") << "iters = 2\n";
  CHECK(s.run("inpaint --config other.cfg --input img.pgm --trace t.csv") == 0);
  CHECK(idbp::read_trace_csv(s.dir / "t.csv").size() == 2);

  std::ofstream(s.dir / "bad.cfg") << "iters\n";
  CHECK(s.run("inpaint --config bad.cfg --input img.pgm") == 1);
  std::ofstream(s.dir / "bad.cfg") << "iters = many\n";
  CHECK(s.run("inpaint --config bad.cfg --input img.pgm") == 1);
}

TEST_CASE("external denoiser command from the environment") {
  Sandbox s;
  CHECK(s.run("inpaint --input img.pgm --iters 2 --denoiser external",
              "IDBP_EXTERNAL_DENOISER='tail -n +2'") == 0);
  CHECK(s.run("inpaint --input img.pgm --iters 2 --denoiser external --external-cmd false",
              "IDBP_EXTERNAL_DENOISER='tail -n +2'") == 2);
}

TEST_CASE("verify subcommand") {
  Sandbox s;
  CHECK(s.run("verify --seed 4") == 0);
  const std::string out = s.read("out.txt");
  CHECK(out.find("FAIL") == std::string::npos);
  CHECK(out.find("PASS projection algebra") != std::string::npos);
}
