#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idbp/bench.hpp"
#include "idbp/verify.hpp"

namespace fs = std::filesystem;
using namespace idbp;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::vector<std::string> input;
  std::string output;
  double mask_frac = 0.8;
  std::uint64_t seed = 0;
  double sigma_n = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  bool auto_tune = false;
  double tau = 0.0;
  double eps_increment = 0.0;
  std::size_t iters = 0;
  std::string denoiser = "dct";
  std::string external_cmd;
  int scenario = 0;
  double beta = 0.0;
  double lambda = 0.0;
  std::string trace;
  std::string report;
  std::string solver = "idbp";
  std::string config;
};

// Reads `key = value` lines. Section headers are accepted and ignored so a
// file may group keys, and `#` or `;` start a comment line.
std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out[key] = value;
  }
  return out;
}

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, CLI::Option*> options;  // keyed by long name without dashes
};

Command add_command(CLI::App& root, const std::string& name, const std::string& help,
                    Flags& f, const std::set<std::string>& keep) {
  Command cmd;
  cmd.app = root.add_subcommand(name, help);
  CLI::App* a = cmd.app;
  auto reg = [&](const std::string& key, CLI::Option* opt) {
    if (!keep.contains(key)) {
      a->remove_option(opt);
      return;
    }
    cmd.options[key] = opt;
  };
  reg("input", a->add_option("--input", f.input, "Clean image(s) in PGM P5 format; directories expand to *.pgm"));
  reg("output", a->add_option("--output", f.output, "Restored image path (bench: output directory)"));
  reg("mask-frac", a->add_option("--mask-frac", f.mask_frac, "Fraction of missing pixels"));
  reg("seed", a->add_option("--seed", f.seed, "Master seed"));
  reg("sigma-n", a->add_option("--sigma-n", f.sigma_n, "Noise standard deviation"));
  reg("delta", a->add_option("--delta", f.delta, "Denoiser noise-level inflation"));
  reg("epsilon", a->add_option("--epsilon", f.epsilon, "Pseudoinverse regularization"));
  reg("auto-tune", a->add_flag("--auto-tune", f.auto_tune, "Tune epsilon on the fly"));
  reg("tau", a->add_option("--tau", f.tau, "Condition ratio margin for auto-tuning"));
  reg("eps-increment", a->add_option("--eps-increment", f.eps_increment, "Epsilon step on restart"));
  reg("iters", a->add_option("--iters", f.iters, "Number of iterations"));
  reg("denoiser", a->add_option("--denoiser", f.denoiser,
                                "median | gaussian | nlm | dct | external | identity"));
  reg("external-cmd", a->add_option("--external-cmd", f.external_cmd,
                                    "Shell command speaking the IDBP1 bridge protocol"));
  reg("scenario", a->add_option("--scenario", f.scenario, "Deblurring scenario 1-4"));
  reg("beta", a->add_option("--beta", f.beta, "P&P denoiser strength"));
  reg("lambda", a->add_option("--lambda", f.lambda, "P&P penalty weight"));
  reg("trace", a->add_option("--trace", f.trace, "Per-iteration CSV path (bench: directory)"));
  reg("report", a->add_option("--report", f.report, "Summary CSV path"));
  reg("solver", a->add_option("--solver", f.solver, "idbp | idbp_auto | pnp"));
  reg("config", a->add_option("--config", f.config, "Config file (default ./idbp.cfg if present)"));
  return cmd;
}

void apply_config(const Command& cmd, const std::map<std::string, std::string>& cfg) {
  for (const auto& [key, value] : cfg) {
    const auto it = cmd.options.find(key);
    if (it == cmd.options.end() || key == "config") continue;
    CLI::Option* opt = it->second;
    if (opt->count() > 0) continue;
    try {
      if (key == "input") {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : value + ",") {
          if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        for (const auto& p : parts) opt->add_result(p);
      } else if (key == "auto-tune") {
        opt->add_result(value == "1" || value == "true" || value == "yes" ? "true" : "false");
      } else {
        opt->add_result(value);
      }
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key " + key + ": " + e.what());
    }
  }
}

bool given(const Command& cmd, const std::string& key) {
  const auto it = cmd.options.find(key);
  return it != cmd.options.end() && it->second->count() > 0;
}

ExperimentSpec build_spec(const Command& cmd, const Flags& f, Task task, SolverKind solver) {
  ExperimentSpec spec;
  spec.task = task;
  spec.solver = solver;
  spec.seed = f.seed;
  spec.mask_fraction = f.mask_frac;
  if (task == Task::deblur) {
    spec.scenario = given(cmd, "scenario") ? f.scenario : 1;
    if (spec.scenario < 1 || spec.scenario > 4) throw UsageError("--scenario must be 1, 2, 3 or 4");
  }
  if (!(spec.mask_fraction >= 0.0 && spec.mask_fraction < 1.0)) {
    throw UsageError("--mask-frac must be in [0, 1)");
  }
  if (given(cmd, "sigma-n")) {
    if (!(f.sigma_n >= 0.0)) throw UsageError("--sigma-n must be non-negative");
    spec.sigma_n = f.sigma_n;
  }
  if (given(cmd, "delta")) spec.delta = f.delta;
  if (given(cmd, "epsilon")) spec.epsilon = f.epsilon;
  if (given(cmd, "tau")) spec.tau = f.tau;
  if (given(cmd, "eps-increment")) spec.eps_increment = f.eps_increment;
  if (given(cmd, "iters")) spec.iterations = f.iters;
  if (given(cmd, "beta")) spec.beta = f.beta;
  if (given(cmd, "lambda")) spec.lambda = f.lambda;

  try {
    spec.denoiser.kind = parse_denoiser_kind(f.denoiser);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (given(cmd, "external-cmd") && !given(cmd, "denoiser")) {
    spec.denoiser.kind = DenoiserKind::external;
  }
  switch (spec.denoiser.kind) {
    case DenoiserKind::oracle_linear:
    case DenoiserKind::oracle_bounded:
      throw UsageError("oracle denoisers need ground truth and are only available in tests");
    case DenoiserKind::external: {
      std::string command = f.external_cmd;
      if (command.empty()) {
        if (const char* env = std::getenv("IDBP_EXTERNAL_DENOISER")) command = env;
      }
      if (command.empty()) {
        throw UsageError("--denoiser external needs --external-cmd or IDBP_EXTERNAL_DENOISER");
      }
      spec.denoiser.external_command = command;
      break;
    }
    default:
      break;
  }
  for (const auto& in : f.input) spec.corpus.emplace_back(in);
  return spec;
}

int run_single(const Command& cmd, const Flags& f, Task task, SolverKind solver) {
  const ExperimentSpec spec = build_spec(cmd, f, task, solver);
  if (spec.corpus.size() != 1) throw UsageError("--input takes exactly one image here; use bench");
  const fs::path path = spec.corpus.front();
  const ImageGrid clean = load_pgm(path);
  const ImageRun run = restore_image(spec, clean, spec.seed);

  if (!f.output.empty()) save_pgm(run.result.estimate, f.output);
  if (!f.trace.empty()) emit_trace_csv(run.result.trace, f.trace);
  RunReport report;
  report.config = describe(spec);
  SummaryRow row;
  row.image = path.stem().string();
  row.bsnr_db = run.metrics.bsnr_db;
  row.input_psnr_db = run.input_psnr_db;
  row.output_psnr_db = run.metrics.psnr_db;
  row.isnr_db = *run.metrics.isnr_db;
  row.restarts = run.result.trace.restarts;
  row.final_epsilon = run.result.trace.final_epsilon;
  report.rows.push_back(row);
  report.average = average_rows(report.rows);
  if (!f.report.empty()) write_summary_csv(report, f.report);

  std::cout << row.image << ": input " << format_fixed6(row.input_psnr_db) << " dB, output "
            << format_fixed6(row.output_psnr_db) << " dB, ISNR " << format_fixed6(row.isnr_db)
            << " dB";
  if (row.bsnr_db) std::cout << ", BSNR " << format_fixed6(*row.bsnr_db) << " dB";
  if (row.restarts > 0) {
    std::cout << ", " << row.restarts << " restarts, epsilon " << row.final_epsilon;
  }
  std::cout << "\n";
  return 0;
}

int run_bench(const Command& cmd, const Flags& f) {
  SolverKind solver;
  try {
    solver = parse_solver_kind(f.solver);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (f.auto_tune) solver = SolverKind::idbp_auto;
  const Task task = given(cmd, "scenario") ? Task::deblur : Task::inpaint;
  if (task == Task::inpaint && solver == SolverKind::idbp_auto) {
    throw UsageError("auto-tuning applies to deblurring only; pass --scenario");
  }
  ExperimentSpec spec = build_spec(cmd, f, task, solver);
  if (!f.output.empty()) spec.output_dir = fs::path(f.output);
  if (!f.trace.empty()) spec.trace_dir = fs::path(f.trace);
  if (!f.report.empty()) spec.report_path = fs::path(f.report);
  if (expand_corpus(spec.corpus).empty()) throw std::runtime_error("no *.pgm images in --input");

  const RunReport report = run_benchmark(spec);
  std::cout << format_summary_csv(report);
  for (const auto& row : report.rows) {
    if (row.status != "ok") return 2;
  }
  return 0;
}

int run_verify(const Flags& f) {
  bool ok = true;
  for (const CheckResult& r : run_verification(f.seed, 1000)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image restoration with iterative denoising and backward projections"};
  app.require_subcommand(1);
  Flags f;

  const std::set<std::string> common{"input", "output", "seed", "sigma-n", "iters", "denoiser",
                                     "external-cmd", "trace", "report", "config"};
  auto with = [&](std::initializer_list<std::string> extra) {
    std::set<std::string> s = common;
    s.insert(extra);
    return s;
  };
  Command inpaint = add_command(app, "inpaint", "Restore a randomly masked copy of an image", f,
                                with({"mask-frac", "delta"}));
  Command deblur = add_command(app, "deblur", "Restore a blurred noisy copy of an image", f,
                               with({"scenario", "delta", "epsilon", "auto-tune", "tau",
                                     "eps-increment"}));
  Command pnp = add_command(app, "pnp", "Plug-and-play ADMM (deblurring with --scenario)", f,
                            with({"mask-frac", "scenario", "beta", "lambda"}));
  Command bench = add_command(app, "bench", "Batch run over a corpus with CSV reports", f,
                              with({"mask-frac", "scenario", "delta", "epsilon", "auto-tune",
                                    "tau", "eps-increment", "beta", "lambda", "solver"}));
  Command verify = add_command(app, "verify", "Run the property and convergence checks", f,
                               {"seed", "config"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    Command* active = nullptr;
    for (Command* c : {&inpaint, &deblur, &pnp, &bench, &verify}) {
      if (c->app->parsed()) active = c;
    }
    fs::path cfg_path = f.config.empty() ? fs::path("idbp.cfg") : fs::path(f.config);
    if (!f.config.empty() || fs::exists(cfg_path)) apply_config(*active, read_config(cfg_path));

    if (active != &verify && f.input.empty()) throw UsageError("--input is required");

    if (active == &verify) return run_verify(f);
    if (active == &bench) return run_bench(*active, f);
    if (active == &inpaint) return run_single(inpaint, f, Task::inpaint, SolverKind::idbp);
    if (active == &deblur) {
      return run_single(deblur, f, Task::deblur,
                        f.auto_tune ? SolverKind::idbp_auto : SolverKind::idbp);
    }
    const Task task = given(pnp, "scenario") ? Task::deblur : Task::inpaint;
    return run_single(pnp, f, task, SolverKind::pnp);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << "Run with --help for more information.\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
