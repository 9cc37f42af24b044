#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "idbp/bench.hpp"
#include "idbp/verify.hpp"

using namespace idbp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Corpus {
  fs::path dir;
  Corpus() {
    dir = fs::temp_directory_path() / "idbp_bench_corpus";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RngState rng{5, 0};
    save_pgm(synthetic_image(32, 32, rng), dir / "b_second.pgm");
    save_pgm(synthetic_image(32, 32, rng), dir / "a_first.pgm");
    std::ofstream(dir / "notes.txt") << "ignored";
  }
  ~Corpus() { fs::remove_all(dir); }
};

ExperimentSpec small_spec(const Corpus& c) {
  ExperimentSpec spec;
  spec.corpus = {c.dir};
  spec.iterations = 4;
  spec.sigma_n = 10.0;
  spec.seed = 9;
  return spec;
}

}  // namespace

TEST_CASE("corpus expansion sorts pgm files") {
  Corpus c;
  const auto files = expand_corpus({c.dir});
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a_first.pgm");
  CHECK(files[1].filename() == "b_second.pgm");
}

TEST_CASE("fixed six decimal formatting") {
  CHECK(format_fixed6(1.0) == "1.000000");
  CHECK(format_fixed6(-0.0000004) == "-0.000000");
  CHECK(format_fixed6(40.0) == "40.000000");
  CHECK(format_fixed6(std::nan("")) == "nan");
  CHECK(format_fixed6(INFINITY) == "inf");
}

TEST_CASE("identical specs give identical files") {
  Corpus c;
  const fs::path out = c.dir / "runs";
  auto run = [&](const std::string& tag) {
    ExperimentSpec spec = small_spec(c);
    spec.trace_dir = out / tag;
    spec.output_dir = out / tag;
    spec.report_path = out / tag / "summary.csv";
    return run_benchmark(spec);
  };
  const RunReport a = run("one");
  const RunReport b = run("two");
  for (const char* f : {"summary.csv", "a_first_trace.csv", "b_second_trace.csv",
                        "a_first_restored.pgm"}) {
    CAPTURE(f);
    CHECK(slurp(out / "one" / f) == slurp(out / "two" / f));
  }
  ExperimentSpec other = small_spec(c);
  other.seed = 10;
  CHECK(run_benchmark(other).rows[0].output_psnr_db != a.rows[0].output_psnr_db);

  const auto trace = read_trace_csv(out / "one" / "a_first_trace.csv");
  CHECK(trace.size() == 4);
  const std::string text = slurp(out / "one" / "a_first_trace.csv");
  CHECK(text.rfind("iter,psnr_db,condition_ratio,epsilon,restarts\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  for (const auto& r : trace) CHECK(r.condition_ratio == 1.0);
}

TEST_CASE("summary rows, averages and round trip") {
  Corpus c;
  ExperimentSpec spec = small_spec(c);
  spec.task = Task::deblur;
  spec.scenario = 3;
  spec.sigma_n.reset();
  spec.report_path = c.dir / "summary.csv";
  const RunReport report = run_benchmark(spec);
  REQUIRE(report.rows.size() == 2);
  double sum = 0.0;
  for (const SummaryRow& r : report.rows) {
    CHECK(r.status == "ok");
    CHECK(format_fixed6(*r.bsnr_db) == "40.000000");
    CHECK(r.isnr_db == r.output_psnr_db - r.input_psnr_db);
    sum += r.output_psnr_db;
  }
  CHECK(std::abs(report.average.output_psnr_db - sum / 2.0) <= 1e-12);

  const RunReport back = read_summary_csv(*spec.report_path);
  CHECK(format_summary_csv(back) == slurp(*spec.report_path));
  CHECK(back.config == report.config);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].image == "b_second");
  CHECK(back.average.image == "average");
  CHECK(std::abs(back.average.isnr_db - (back.rows[0].isnr_db + back.rows[1].isnr_db) / 2.0) < 1e-6);
}

TEST_CASE("per image failures do not abort the batch") {
  Corpus c;
  std::ofstream(c.dir / "c_broken.pgm") << "P5\n4 4\n255\nxx";
  const RunReport report = run_benchmark(small_spec(c));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].status == "ok");
  CHECK(report.rows[2].status.rfind("error", 0) == 0);
  CHECK(report.average.output_psnr_db ==
        doctest::Approx((report.rows[0].output_psnr_db + report.rows[1].output_psnr_db) / 2.0));
}

TEST_CASE("scenario synthesis") {
  RngState rng{1, 0};
  const ImageGrid clean = synthetic_image(32, 32, rng);
  ExperimentSpec spec;
  spec.task = Task::deblur;
  spec.scenario = 4;
  const DegradedInput in = synthesize(spec, clean, 3);
  CHECK(in.sigma_n == 7.0);
  CHECK(in.op->epsilon() == 2e-3);
  CHECK(in.initialization == in.observations);

  spec.task = Task::inpaint;
  spec.mask_fraction = 0.5;
  const DegradedInput ip = synthesize(spec, clean, 3);
  CHECK(ip.sigma_n == 0.0);
  CHECK(!ip.bsnr_db);
  CHECK(ip.op->forward(ip.initialization) == ip.observations);

  CHECK(resolve_idbp_config(spec, 0.0).output_mode == OutputMode::last_y);
  CHECK(resolve_idbp_config(spec, 10.0).delta == 0.0);
  spec.delta = 2.5;
  CHECK(resolve_idbp_config(spec, 10.0).delta == 2.5);
}
