#include "idbp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace idbp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_fixed6(*v) : std::string();
}

}  // namespace

std::string to_string(Task task) { return task == Task::inpaint ? "inpaint" : "deblur"; }

std::string to_string(SolverKind solver) {
  switch (solver) {
    case SolverKind::idbp: return "idbp";
    case SolverKind::idbp_auto: return "idbp_auto";
    case SolverKind::pnp: return "pnp";
  }
  return "unknown";
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "idbp") return SolverKind::idbp;
  if (name == "idbp_auto" || name == "idbp-auto") return SolverKind::idbp_auto;
  if (name == "pnp") return SolverKind::pnp;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-nan") s = "nan";
  return s;
}

// ---------------------------------------------------------------------------
// Degradation and restoration

DegradedInput synthesize(const ExperimentSpec& spec, const ImageGrid& clean, std::uint64_t seed) {
  RngState rng{seed, 0};
  DegradedInput in;
  if (spec.task == Task::inpaint) {
    const double sigma_n = spec.sigma_n.value_or(0.0);
    auto op = std::make_shared<InpaintingOperator>(
        generate_random_mask(clean.height(), clean.width(), spec.mask_fraction, rng));
    const ImageGrid noisy = add_gaussian_noise(clean, sigma_n, rng);
    in.observations = op->forward(noisy);
    in.initialization = median_initialize(*op, in.observations);
    in.sigma_n = sigma_n;
    in.op = std::move(op);
    return in;
  }

  const ScenarioSpec sc = scenario(spec.scenario);
  const BlurOperator plain(sc.kernel, clean.height(), clean.width());
  const ImageGrid blurred = plain.forward(clean);
  const double sigma_n = spec.sigma_n.value_or(sc.noise_sigma(blurred));
  in.observations = add_gaussian_noise(blurred, sigma_n, rng);
  in.initialization = in.observations;
  in.sigma_n = sigma_n;
  if (sigma_n > 0.0) in.bsnr_db = bsnr(blurred, sigma_n);
  const double epsilon = resolve_idbp_config(spec, sigma_n).epsilon;
  in.op = std::make_shared<BlurOperator>(plain.with_regularization(epsilon, sigma_n));
  return in;
}

IdbpConfig resolve_idbp_config(const ExperimentSpec& spec, double sigma_n) {
  IdbpConfig cfg;
  if (spec.task == Task::inpaint) {
    cfg = sigma_n > 0.0 ? noisy_inpainting_defaults() : noiseless_inpainting_defaults();
  } else if (spec.solver == SolverKind::idbp_auto) {
    cfg = auto_tuned_defaults();
  } else {
    cfg = deblurring_defaults(spec.scenario);
  }
  if (spec.delta) cfg.delta = *spec.delta;
  if (spec.epsilon) cfg.epsilon = *spec.epsilon;
  if (spec.tau) cfg.condition_margin_tau = *spec.tau;
  if (spec.eps_increment) cfg.epsilon_increment = *spec.eps_increment;
  if (spec.iterations) cfg.iterations = *spec.iterations;
  return cfg;
}

PnpConfig resolve_pnp_config(const ExperimentSpec& spec, double sigma_n) {
  PnpConfig cfg = spec.task == Task::inpaint ? pnp_inpainting_defaults(sigma_n)
                                             : pnp_deblurring_defaults(spec.scenario);
  if (spec.beta) cfg.beta = *spec.beta;
  if (spec.lambda) cfg.lambda = *spec.lambda;
  if (spec.iterations) cfg.iterations = *spec.iterations;
  return cfg;
}

ImageRun restore_image(const ExperimentSpec& spec, const ImageGrid& clean, std::uint64_t seed) {
  if (spec.task == Task::inpaint && spec.solver == SolverKind::idbp_auto) {
    throw std::invalid_argument("auto-tuning applies to deblurring only");
  }
  ImageRun run;
  run.input = synthesize(spec, clean, seed);
  const auto denoiser = make_denoiser(spec.denoiser);
  const DegradedInput& in = run.input;

  switch (spec.solver) {
    case SolverKind::idbp:
      run.result = idbp_run(*in.op, in.observations, in.sigma_n, *denoiser,
                            resolve_idbp_config(spec, in.sigma_n), in.initialization, &clean);
      break;
    case SolverKind::idbp_auto: {
      const auto& blur = dynamic_cast<const BlurOperator&>(*in.op);
      run.result = idbp_auto_tuned(blur, in.observations, in.sigma_n, *denoiser,
                                   resolve_idbp_config(spec, in.sigma_n), in.initialization,
                                   &clean);
      break;
    }
    case SolverKind::pnp:
      run.result = pnp_run(*in.op, in.observations, in.sigma_n, *denoiser,
                           resolve_pnp_config(spec, in.sigma_n), in.initialization, &clean);
      break;
  }

  run.input_psnr_db = psnr(clean, in.initialization);
  run.metrics.psnr_db = psnr(clean, run.result.estimate);
  run.metrics.isnr_db = run.metrics.psnr_db - run.input_psnr_db;
  run.metrics.bsnr_db = in.bsnr_db;
  return run;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const std::string& k, const std::string& v) { out.emplace_back(k, v); };
  auto put_opt = [&](const std::string& k, const auto& v) {
    if (v) {
      std::ostringstream s;
      s << *v;
      put(k, s.str());
    }
  };
  put("task", to_string(spec.task));
  put("solver", to_string(spec.solver));
  put("denoiser", to_string(spec.denoiser.kind));
  if (spec.task == Task::deblur) {
    put("scenario", std::to_string(spec.scenario));
  } else {
    std::ostringstream s;
    s << spec.mask_fraction;
    put("mask-frac", s.str());
  }
  put_opt("sigma-n", spec.sigma_n);
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  // Inpainting picks its protocol from the noise level; deblurring does not
  // depend on it, so any positive value resolves the same configuration.
  const double sigma_hint = spec.task == Task::inpaint ? spec.sigma_n.value_or(0.0) : 1.0;
  if (spec.solver == SolverKind::pnp) {
    const PnpConfig p = resolve_pnp_config(spec, sigma_hint);
    put("beta", num(p.beta));
    put("lambda", num(p.lambda));
    put("iters", std::to_string(p.iterations));
  } else {
    const IdbpConfig c = resolve_idbp_config(spec, sigma_hint);
    put("delta", num(c.delta));
    put("iters", std::to_string(c.iterations));
    put("output", c.output_mode == OutputMode::last_x ? "last_x" : "last_y");
    if (spec.task == Task::deblur) put("epsilon", num(c.epsilon));
    if (spec.solver == SolverKind::idbp_auto) {
      put("tau", num(c.condition_margin_tau));
      put("eps-increment", num(c.epsilon_increment));
    }
  }
  put("seed", std::to_string(spec.seed));
  if (spec.denoiser.kind == DenoiserKind::external) {
    put("external-cmd", spec.denoiser.external_command);
  }
  return out;
}

SummaryRow average_rows(const std::vector<SummaryRow>& rows) {
  SummaryRow avg;
  avg.image = "average";
  std::size_t n = 0;
  std::size_t n_bsnr = 0;
  double bsnr_sum = 0.0;
  double restarts = 0.0;
  for (const SummaryRow& r : rows) {
    if (r.status != "ok") continue;
    ++n;
    avg.input_psnr_db += r.input_psnr_db;
    avg.output_psnr_db += r.output_psnr_db;
    avg.isnr_db += r.isnr_db;
    avg.final_epsilon += r.final_epsilon;
    restarts += static_cast<double>(r.restarts);
    if (r.bsnr_db) {
      bsnr_sum += *r.bsnr_db;
      ++n_bsnr;
    }
  }
  if (n == 0) {
    avg.status = "no successful runs";
    avg.input_psnr_db = avg.output_psnr_db = avg.isnr_db = avg.final_epsilon = kNaN;
    return avg;
  }
  const double inv = 1.0 / static_cast<double>(n);
  avg.input_psnr_db *= inv;
  avg.output_psnr_db *= inv;
  avg.isnr_db *= inv;
  avg.final_epsilon *= inv;
  avg.restarts = static_cast<std::size_t>(std::llround(restarts * inv));
  if (n_bsnr > 0) avg.bsnr_db = bsnr_sum / static_cast<double>(n_bsnr);
  return avg;
}

std::vector<std::filesystem::path> expand_corpus(
    const std::vector<std::filesystem::path>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : inputs) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

RunReport run_benchmark(const ExperimentSpec& spec) {
  const auto corpus = expand_corpus(spec.corpus);
  if (corpus.empty()) throw std::invalid_argument("run_benchmark: corpus is empty");
  if (spec.output_dir) std::filesystem::create_directories(*spec.output_dir);
  if (spec.trace_dir) std::filesystem::create_directories(*spec.trace_dir);

  RunReport report;
  report.config = describe(spec);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    SummaryRow row;
    row.image = corpus[i].stem().string();
    try {
      const ImageGrid clean = load_pgm(corpus[i]);
      const ImageRun run = restore_image(spec, clean, spec.seed + i);
      row.bsnr_db = run.metrics.bsnr_db;
      row.input_psnr_db = run.input_psnr_db;
      row.output_psnr_db = run.metrics.psnr_db;
      row.isnr_db = *run.metrics.isnr_db;
      row.restarts = run.result.trace.restarts;
      row.final_epsilon = run.result.trace.final_epsilon;
      if (spec.trace_dir) {
        emit_trace_csv(run.result.trace, *spec.trace_dir / (row.image + "_trace.csv"));
      }
      if (spec.output_dir) {
        save_pgm(run.result.estimate, *spec.output_dir / (row.image + "_restored.pgm"));
      }
    } catch (const std::exception& e) {
      row.status = "error: " + sanitize(e.what());
    }
    report.rows.push_back(std::move(row));
  }
  report.average = average_rows(report.rows);
  if (spec.report_path) write_summary_csv(report, *spec.report_path);
  return report;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_trace_csv(const IterationTrace& trace) {
  std::string out = "iter,psnr_db,condition_ratio,epsilon,restarts\n";
  for (const IterationRecord& r : trace.records) {
    out += std::to_string(r.iteration) + "," + format_fixed6(r.psnr_db) + "," +
           format_fixed6(r.condition_ratio) + "," + format_fixed6(r.epsilon) + "," +
           std::to_string(r.restarts) + "\n";
  }
  return out;
}

void emit_trace_csv(const IterationTrace& trace, const std::filesystem::path& path) {
  write_text(path, format_trace_csv(trace));
}

std::vector<IterationRecord> read_trace_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "iter,psnr_db,condition_ratio,epsilon,restarts") {
    throw std::runtime_error("read_trace_csv: unexpected header in " + path.string());
  }
  std::vector<IterationRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 5) throw std::runtime_error("read_trace_csv: bad row " + std::to_string(i));
    IterationRecord r;
    r.iteration = std::stoul(f[0]);
    r.psnr_db = parse_double(f[1]);
    r.condition_ratio = parse_double(f[2]);
    r.epsilon = parse_double(f[3]);
    r.restarts = std::stoul(f[4]);
    out.push_back(r);
  }
  return out;
}

namespace {

constexpr const char* kSummaryHeader =
    "image,bsnr_db,input_psnr_db,output_psnr_db,isnr_db,restarts,final_epsilon,status";

std::string summary_line(const SummaryRow& r) {
  return sanitize(r.image) + "," + format_optional(r.bsnr_db) + "," +
         format_fixed6(r.input_psnr_db) + "," + format_fixed6(r.output_psnr_db) + "," +
         format_fixed6(r.isnr_db) + "," + std::to_string(r.restarts) + "," +
         format_fixed6(r.final_epsilon) + "," + sanitize(r.status) + "\n";
}

SummaryRow parse_summary_line(const std::string& line) {
  const auto f = split_csv_line(line);
  if (f.size() != 8) throw std::runtime_error("read_summary_csv: bad row '" + line + "'");
  SummaryRow r;
  r.image = f[0];
  if (!f[1].empty()) r.bsnr_db = parse_double(f[1]);
  r.input_psnr_db = parse_double(f[2]);
  r.output_psnr_db = parse_double(f[3]);
  r.isnr_db = parse_double(f[4]);
  r.restarts = std::stoul(f[5]);
  r.final_epsilon = parse_double(f[6]);
  r.status = f[7];
  return r;
}

}  // namespace

std::string format_summary_csv(const RunReport& report) {
  std::string out;
  for (const auto& [k, v] : report.config) out += "# " + k + "=" + sanitize(v) + "\n";
  out += kSummaryHeader;
  out += "\n";
  for (const SummaryRow& r : report.rows) out += summary_line(r);
  out += summary_line(report.average);
  return out;
}

void write_summary_csv(const RunReport& report, const std::filesystem::path& path) {
  write_text(path, format_summary_csv(report));
}

RunReport read_summary_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  RunReport report;
  std::size_t i = 0;
  for (; i < lines.size() && lines[i].starts_with("# "); ++i) {
    const auto eq = lines[i].find('=');
    if (eq == std::string::npos) throw std::runtime_error("read_summary_csv: bad config line");
    report.config.emplace_back(lines[i].substr(2, eq - 2), lines[i].substr(eq + 1));
  }
  if (i >= lines.size() || lines[i] != kSummaryHeader) {
    throw std::runtime_error("read_summary_csv: unexpected header in " + path.string());
  }
  ++i;
  std::vector<SummaryRow> rows;
  for (; i < lines.size(); ++i) rows.push_back(parse_summary_line(lines[i]));
  if (rows.empty() || rows.back().image != "average") {
    throw std::runtime_error("read_summary_csv: missing average row");
  }
  report.average = rows.back();
  rows.pop_back();
  report.rows = std::move(rows);
  return report;
}

}  // namespace idbp
