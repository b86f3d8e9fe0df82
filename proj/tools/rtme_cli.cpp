// rtme: command-line harness for regularized Tyler scatter estimation and
// shrinkage selection by (approximate) leave-one-out cross-validation.
//
// Exit codes: 0 success, 2 usage error, 3 numeric/convergence error,
// 4 I/O error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtme/io.hpp"
#include "rtme/manifest.hpp"
#include "rtme/reproduce.hpp"
#include "rtme/rtme.hpp"

namespace {

using rtme::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SyntheticOptions {
  int p = 50;
  int n = 100;
  double gamma = 0.5;
  std::string radial = "cauchy";
  std::uint64_t seed = 1;
};

void add_synthetic_flags(CLI::App* cmd, SyntheticOptions& o) {
  cmd->add_option("--p", o.p, "dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--n", o.n, "sample count")->check(CLI::PositiveNumber);
  cmd->add_option("--gamma", o.gamma, "Toeplitz scatter parameter, s_ij = gamma^|i-j|");
  cmd->add_option("--radial", o.radial, "gaussian | student:<d> | laplace | cauchy");
  cmd->add_option("--seed", o.seed, "root seed");
}

rtme::EllipticalSpec make_spec(const SyntheticOptions& o) {
  return {o.p, o.n, rtme::toeplitz_scatter(o.p, o.gamma), rtme::RadialLaw::parse(o.radial), o.seed};
}

json synthetic_params(const SyntheticOptions& o) {
  return {{"p", o.p}, {"n", o.n}, {"gamma", o.gamma}, {"radial", o.radial}, {"seed", o.seed}};
}

struct FitFlags {
  std::string target = "identity";
  double tol = 1e-9;
  int max_iter = 5000;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--target", f.target, "identity or a CSV file holding a p x p PD matrix");
  cmd->add_option("--tol", f.tol, "stop when |S_{t+1} - S_t|_F < tol")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "fixed-point iteration cap")->check(CLI::PositiveNumber);
}

rtme::FitConfig make_fit_config(const FitFlags& f, rtme::Index p, rtme::RunManifest* manifest) {
  rtme::FitConfig cfg;
  cfg.tol = f.tol;
  cfg.max_iter = f.max_iter;
  if (f.target != "identity") {
    rtme::ScatterMatrix target(rtme::parse_csv_matrix(rtme::read_text_file(f.target)));
    if (target.dim() != p) throw UsageError("--target is not " + std::to_string(p) + " x " + std::to_string(p));
    cfg.target = std::move(target);
    if (manifest) manifest->add_input(f.target);
  }
  return cfg;
}

json fit_params(const FitFlags& f) {
  return {{"target", f.target}, {"tol", f.tol}, {"max_iter", f.max_iter}};
}

struct InputFlags {
  std::string in;
  bool center = false;
  bool header = false;
};

void add_input_flags(CLI::App* cmd, InputFlags& i) {
  cmd->add_option("--in", i.in, "input CSV, n rows x p columns")->required();
  cmd->add_flag("--center", i.center, "subtract column means before normalizing");
  cmd->add_flag("--header", i.header, "skip the first CSV line");
}

struct LoadedInput {
  rtme::UnitSampleSet samples;
  std::vector<std::string> warnings;
};

LoadedInput load_input(const InputFlags& flags) {
  const rtme::RawSampleSet raw = rtme::load_csv_samples(flags.in, flags.center, flags.header);
  rtme::NormalizedSamples norm = rtme::normalize_samples(raw);
  LoadedInput out{std::move(norm.samples), {}};
  if (norm.dropped_zero_rows > 0) {
    out.warnings.push_back(std::to_string(norm.dropped_zero_rows) + " zero row(s) dropped");
  }
  return out;
}

// Writes to --out when given, else stdout.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    rtme::write_text_file(out, text);
  }
}

// --- generate ---------------------------------------------------------------

struct GenerateCmd {
  SyntheticOptions synth;
  std::string out;
};

int run_generate(const GenerateCmd& c) {
  const rtme::RawSampleSet raw = rtme::sample_elliptical(make_spec(c.synth));
  emit(c.out, rtme::format_csv_matrix(raw.rows));
  return 0;
}

// --- fit --------------------------------------------------------------------

struct FitCmd {
  InputFlags input;
  FitFlags fit;
  std::string alpha = "auto";
  int grid = 50;
  std::string out;
};

int run_fit(const FitCmd& c) {
  json params = fit_params(c.fit);
  params["in"] = c.input.in;
  params["center"] = c.input.center;
  params["alpha"] = c.alpha;
  params["grid"] = c.grid;
  rtme::RunManifest manifest("fit", params, 0);
  manifest.add_input(c.input.in);

  LoadedInput input = load_input(c.input);
  const rtme::UnitSampleSet& x = input.samples;
  rtme::FitConfig cfg = make_fit_config(c.fit, x.dim(), &manifest);

  std::optional<double> selected;
  if (c.alpha == "auto") {
    const auto grid = rtme::AlphaGrid::for_full_fit(x.size(), x.dim(), c.grid);
    selected = rtme::select_alpha_grid(x, grid, cfg, rtme::CvlMethod::approximate).argmin_alpha;
    cfg.alpha = *selected;
  } else {
    try {
      std::size_t used = 0;
      cfg.alpha = std::stod(c.alpha, &used);
      if (used != c.alpha.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--alpha must be a real number or 'auto', got '" + c.alpha + "'");
    }
  }

  rtme::FitReport report = cfg.alpha == 0.0 ? rtme::tme_fit(x, cfg) : rtme::rtme_fit(x, cfg);
  report.warnings.insert(report.warnings.begin(), input.warnings.begin(), input.warnings.end());
  json doc = rtme::to_json(report);
  doc["alpha"] = cfg.alpha;
  doc["selected_alpha"] = selected ? json(*selected) : json(nullptr);
  doc["manifest"] = manifest.finish();
  emit(c.out, doc.dump(2) + "\n");
  return 0;
}

// --- select-alpha -----------------------------------------------------------

struct SelectCmd {
  InputFlags input;
  FitFlags fit;
  std::string method = "approx";
  std::optional<int> grid;
  std::optional<double> bisect;
  std::optional<double> alpha_min;
  std::optional<double> alpha_max;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

int run_select(const SelectCmd& c) {
  json params = fit_params(c.fit);
  params["in"] = c.input.in;
  params["center"] = c.input.center;
  params["method"] = c.method;
  params["grid"] = c.grid ? json(*c.grid) : json(nullptr);
  params["bisect"] = c.bisect ? json(*c.bisect) : json(nullptr);
  params["alpha_min"] = c.alpha_min ? json(*c.alpha_min) : json(nullptr);
  params["alpha_max"] = c.alpha_max ? json(*c.alpha_max) : json(nullptr);
  params["threads"] = c.threads;
  rtme::RunManifest manifest("select-alpha", params, c.seed);
  manifest.add_input(c.input.in);

  if (c.method != "exact" && c.method != "approx") throw UsageError("--method must be exact or approx");
  const rtme::CvlMethod method = c.method == "exact" ? rtme::CvlMethod::exact : rtme::CvlMethod::approximate;

  LoadedInput input = load_input(c.input);
  const rtme::UnitSampleSet& x = input.samples;
  const rtme::FitConfig cfg = make_fit_config(c.fit, x.dim(), &manifest);

  json doc;
  if (c.bisect) {
    if (method != rtme::CvlMethod::approximate) throw UsageError("--bisect works with --method approx only");
    const double lo = c.alpha_min.value_or(rtme::alpha_lower_bound(x.size(), x.dim()));
    const double hi = c.alpha_max.value_or(1.0);
    doc = rtme::to_json(rtme::select_alpha_bisection(x, lo, hi, *c.bisect, cfg));
  } else {
    const int m = c.grid.value_or(50);
    const double bound = method == rtme::CvlMethod::exact
                             ? rtme::leave_one_out_lower_bound(x.size(), x.dim())
                             : rtme::alpha_lower_bound(x.size(), x.dim());
    rtme::AlphaGrid grid;
    if (c.alpha_min || c.alpha_max) {
      const rtme::AlphaGrid base = rtme::AlphaGrid::interior(bound, m);
      const double lo = c.alpha_min.value_or(base.values.front());
      const double hi = c.alpha_max.value_or(base.values.back());
      if (m < 2 || !(lo < hi)) throw UsageError("need --grid >= 2 and --alpha-min < --alpha-max");
      grid.lower_bound = bound;
      for (int j = 0; j < m; ++j) grid.values.push_back(lo + (hi - lo) * j / (m - 1));
    } else {
      grid = rtme::AlphaGrid::interior(bound, m);
    }
    doc = rtme::to_json(rtme::select_alpha_grid(x, grid, cfg, method, c.threads));
  }
  if (!input.warnings.empty()) doc["warnings"] = input.warnings;
  doc["manifest"] = manifest.finish();
  emit(c.out, doc.dump(2) + "\n");
  return 0;
}

// --- nmse-sweep -------------------------------------------------------------

struct SweepCmd {
  SyntheticOptions synth;
  FitFlags fit;
  int grid = 50;
  int threads = 1;
  std::string out;
};

int run_sweep(const SweepCmd& c) {
  json params = synthetic_params(c.synth);
  params.update(fit_params(c.fit));
  params["grid"] = c.grid;
  params["threads"] = c.threads;
  rtme::RunManifest manifest("nmse-sweep", params, c.synth.seed);

  const rtme::EllipticalSpec spec = make_spec(c.synth);
  const rtme::FitConfig cfg = make_fit_config(c.fit, spec.dimension, &manifest);
  const auto grid = rtme::AlphaGrid::for_full_fit(spec.sample_count, spec.dimension, c.grid);
  const rtme::NmseSweep sweep = rtme::nmse_sweep(spec, grid, cfg, c.threads);

  json doc = rtme::to_json(sweep);
  doc["manifest"] = manifest.finish();
  if (c.out.empty()) {
    std::cout << rtme::nmse_sweep_csv(sweep) << doc.dump(2) << "\n";
  } else {
    std::string stem = c.out;
    for (const char* ext : {".json", ".csv"}) {
      if (stem.ends_with(ext)) stem.resize(stem.size() - std::string(ext).size());
    }
    rtme::write_text_file(stem + ".csv", rtme::nmse_sweep_csv(sweep));
    rtme::write_text_file(stem + ".json", doc.dump(2) + "\n");
  }
  return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchCmd {
  SyntheticOptions synth;
  FitFlags fit;
  int grid = 20;
  int threads = 1;
  int max_n = 1000;
  bool force = false;
  std::string out;
};

int run_bench(const BenchCmd& c) {
  if (c.synth.n > c.max_n && !c.force) {
    throw UsageError("--n " + std::to_string(c.synth.n) + " exceeds the exact-CVL guard of " +
                     std::to_string(c.max_n) + "; pass --force to run anyway");
  }
  json params = synthetic_params(c.synth);
  params.update(fit_params(c.fit));
  params["grid"] = c.grid;
  params["threads"] = c.threads;
  rtme::RunManifest manifest("bench", params, c.synth.seed);

  const rtme::EllipticalSpec spec = make_spec(c.synth);
  const rtme::FitConfig cfg = make_fit_config(c.fit, spec.dimension, &manifest);
  const auto grid = rtme::AlphaGrid::for_leave_one_out(spec.sample_count, spec.dimension, c.grid);
  rtme::BenchReport report = rtme::bench_exact_vs_approx(spec, grid, cfg, c.threads);
  report.setting.gamma = c.synth.gamma;

  json doc = rtme::to_json(report);
  doc["manifest"] = manifest.finish();
  emit(c.out, doc.dump(2) + "\n");
  return 0;
}

// --- reproduce --------------------------------------------------------------

struct ReproduceCmd {
  std::string recipe;
  std::string out_dir = "reproduce";
  int p = 50;
  std::string radial = "cauchy";
  std::uint64_t seed = 1;
  int grid = 20;
  int threads = 1;
  FitFlags fit;
};

int run_reproduce(const ReproduceCmd& c) {
  rtme::ReproduceOptions opts;
  opts.recipe = rtme::parse_recipe(c.recipe);
  opts.out_dir = c.out_dir;
  opts.p = c.p;
  opts.radial = rtme::RadialLaw::parse(c.radial);
  opts.seed = c.seed;
  opts.grid_points = c.grid;
  opts.threads = c.threads;
  opts.fit = make_fit_config(c.fit, c.p, nullptr);

  json params = fit_params(c.fit);
  params.update({{"recipe", c.recipe}, {"p", c.p}, {"radial", c.radial}, {"seed", c.seed},
                 {"grid", c.grid}, {"threads", c.threads}});
  const rtme::ReproduceResult result = rtme::reproduce(opts, params);
  for (const auto& path : result.artifacts) std::cout << path << "\n";
  for (const auto& check : result.checks) {
    std::cout << (check.pass ? "PASS " : "FAIL ") << check.setting << " " << check.criterion << " "
              << rtme::detail::format_double(check.value) << "\n";
  }
  for (const auto& failure : result.failures) std::cerr << "error: " << failure << "\n";
  return result.failures.empty() ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized Tyler scatter estimation with cross-validated shrinkage"};
  app.require_subcommand(1);

  GenerateCmd gen;
  auto* gen_cmd = app.add_subcommand("generate", "draw elliptical samples to CSV");
  add_synthetic_flags(gen_cmd, gen.synth);
  gen_cmd->add_option("--out", gen.out, "output CSV (stdout if omitted)");

  FitCmd fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit TME (alpha 0) or RTME to CSV samples");
  add_input_flags(fit_cmd, fit.input);
  add_fit_flags(fit_cmd, fit.fit);
  fit_cmd->add_option("--alpha", fit.alpha, "shrinkage in [0,1], or 'auto' for ACVL selection");
  fit_cmd->add_option("--grid", fit.grid, "grid size used by --alpha auto");
  fit_cmd->add_option("--out", fit.out, "output JSON");

  SelectCmd sel;
  auto* sel_cmd = app.add_subcommand("select-alpha", "choose alpha by exact or approximate CVL");
  add_input_flags(sel_cmd, sel.input);
  add_fit_flags(sel_cmd, sel.fit);
  sel_cmd->add_option("--method", sel.method, "exact | approx");
  auto* grid_opt = sel_cmd->add_option("--grid", sel.grid, "grid size m (default 50)");
  auto* bisect_opt = sel_cmd->add_option("--bisect", sel.bisect, "bisection tolerance eps");
  grid_opt->excludes(bisect_opt);
  sel_cmd->add_option("--alpha-min", sel.alpha_min, "lowest alpha searched");
  sel_cmd->add_option("--alpha-max", sel.alpha_max, "highest alpha searched");
  sel_cmd->add_option("--seed", sel.seed, "recorded in the manifest");
  sel_cmd->add_option("--threads", sel.threads, "worker threads for grid points")->check(CLI::PositiveNumber);
  sel_cmd->add_option("--out", sel.out, "output JSON");

  SweepCmd sweep;
  auto* sweep_cmd = app.add_subcommand("nmse-sweep", "NMSE against the true scatter over an alpha grid");
  add_synthetic_flags(sweep_cmd, sweep.synth);
  add_fit_flags(sweep_cmd, sweep.fit);
  sweep_cmd->add_option("--grid", sweep.grid, "grid size m");
  sweep_cmd->add_option("--threads", sweep.threads, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep.out, "output stem; writes <stem>.csv and <stem>.json");

  BenchCmd bench;
  auto* bench_cmd = app.add_subcommand("bench", "time exact vs approximate CVL selection");
  add_synthetic_flags(bench_cmd, bench.synth);
  add_fit_flags(bench_cmd, bench.fit);
  bench_cmd->add_option("--grid", bench.grid, "grid size m");
  bench_cmd->add_option("--threads", bench.threads, "worker threads, same for both methods")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max-n", bench.max_n, "refuse larger n unless --force");
  bench_cmd->add_flag("--force", bench.force, "ignore the --max-n guard");
  bench_cmd->add_option("--out", bench.out, "output JSON");

  ReproduceCmd rep;
  auto* rep_cmd = app.add_subcommand("reproduce", "run an experiment recipe over the 3x3 settings");
  rep_cmd->add_option("--recipe", rep.recipe, "curves | nmse | speedup")->required();
  rep_cmd->add_option("--out-dir", rep.out_dir, "output directory");
  rep_cmd->add_option("--p", rep.p, "dimension; n runs over 2p, p, p/2")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--radial", rep.radial, "gaussian | student:<d> | laplace | cauchy");
  rep_cmd->add_option("--seed", rep.seed, "root seed");
  rep_cmd->add_option("--grid", rep.grid, "grid size m");
  rep_cmd->add_option("--threads", rep.threads, "worker threads")->check(CLI::PositiveNumber);
  add_fit_flags(rep_cmd, rep.fit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_generate(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*sel_cmd) return run_select(sel);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*bench_cmd) return run_bench(bench);
    if (*rep_cmd) return run_reproduce(rep);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rtme::DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rtme::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
