#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idbp/denoisers.hpp"
#include "idbp/image.hpp"
#include "idbp/operators.hpp"
#include "idbp/solvers.hpp"

namespace idbp {

enum class Task { inpaint, deblur };
enum class SolverKind { idbp, idbp_auto, pnp };

std::string to_string(Task task);
std::string to_string(SolverKind solver);
SolverKind parse_solver_kind(const std::string& name);

/// Everything needed to reproduce a run. Unset overrides fall back to the
/// protocol defaults for the task, scenario and noise level.
struct ExperimentSpec {
  Task task = Task::inpaint;
  int scenario = 1;
  double mask_fraction = 0.8;
  /// Inpainting noise std (default 0). For deblurring, overrides the scenario noise.
  std::optional<double> sigma_n;
  SolverKind solver = SolverKind::idbp;
  DenoiserSpec denoiser;

  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<double> tau;
  std::optional<double> eps_increment;
  std::optional<std::size_t> iterations;
  std::optional<double> beta;
  std::optional<double> lambda;

  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> trace_dir;
  std::optional<std::filesystem::path> report_path;
};

/// A synthesized degradation of one clean image.
struct DegradedInput {
  std::shared_ptr<const DegradationOperator> op;
  ImageGrid observations;
  ImageGrid initialization;
  double sigma_n = 0.0;
  std::optional<double> bsnr_db;
};

/// Builds y = H x + e for the spec's task. Inpainting draws the mask and then
/// the noise from RngState{seed, 0}; deblurring draws the noise from it.
/// Scenario 3 calibrates sigma_n so that the BSNR equals 40 dB.
DegradedInput synthesize(const ExperimentSpec& spec, const ImageGrid& clean, std::uint64_t seed);

IdbpConfig resolve_idbp_config(const ExperimentSpec& spec, double sigma_n);
PnpConfig resolve_pnp_config(const ExperimentSpec& spec, double sigma_n);

struct ImageRun {
  DegradedInput input;
  SolverResult result;
  MetricReport metrics;
  double input_psnr_db = 0.0;
};

/// Degrades, restores and scores one image. The reference PSNR is taken on the
/// solver's initialization (the median fill for inpainting, y for deblurring).
ImageRun restore_image(const ExperimentSpec& spec, const ImageGrid& clean, std::uint64_t seed);

struct SummaryRow {
  std::string image;
  std::optional<double> bsnr_db;
  double input_psnr_db = 0.0;
  double output_psnr_db = 0.0;
  double isnr_db = 0.0;
  std::size_t restarts = 0;
  double final_epsilon = 0.0;
  std::string status = "ok";
};

struct RunReport {
  std::vector<SummaryRow> rows;
  SummaryRow average;
  /// key = value pairs of the resolved configuration, in emission order.
  std::vector<std::pair<std::string, std::string>> config;
};

/// Resolved configuration echoed at the top of every summary.
std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& spec);

/// Averages over rows whose status is "ok".
SummaryRow average_rows(const std::vector<SummaryRow>& rows);

/// Runs every corpus image with seed spec.seed + index. Failures are recorded
/// in the row status and do not stop the batch.
RunReport run_benchmark(const ExperimentSpec& spec);

/// Header `iter,psnr_db,condition_ratio,epsilon,restarts`, fixed 6 decimals, LF.
void emit_trace_csv(const IterationTrace& trace, const std::filesystem::path& path);
std::string format_trace_csv(const IterationTrace& trace);
std::vector<IterationRecord> read_trace_csv(const std::filesystem::path& path);

void write_summary_csv(const RunReport& report, const std::filesystem::path& path);
std::string format_summary_csv(const RunReport& report);
RunReport read_summary_csv(const std::filesystem::path& path);

/// "%.6f" formatting, the precision used by every emitted CSV.
std::string format_fixed6(double v);

/// Corpus entries: files are taken as-is, directories contribute their *.pgm
/// files in lexicographic order.
std::vector<std::filesystem::path> expand_corpus(const std::vector<std::filesystem::path>& inputs);

}  // namespace idbp
