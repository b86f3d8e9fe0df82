// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria (capped at 9).
//
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rtme/reproduce.hpp"
#include "rtme/rtme.hpp"
#include "test_support.hpp"

namespace {

using namespace rtme;
using testing::draw_unit_samples;

constexpr double kTol = 1e-9;
const double kResidualBound = 10.0 * std::sqrt(kTol);

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "ok  " : "NO  ") + what);
  }
  void note(const std::string& what) { details.push_back("    " + what); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

FitConfig alpha_cfg(double alpha) {
  FitConfig cfg;
  cfg.alpha = alpha;
  return cfg;
}

// --- 1 ------------------------------------------------------------------------

Outcome call_count_law() {
  Outcome out;
  struct Case {
    Index p, n;
    int m;
    std::uint64_t seed;
  };
  for (const Case c : {Case{5, 12, 7, 1}, Case{10, 6, 5, 2}, Case{3, 30, 11, 3}, Case{20, 15, 4, 4}}) {
    const UnitSampleSet x = draw_unit_samples(c.p, c.n, c.seed);
    const AlphaGrid grid = AlphaGrid::for_leave_one_out(c.n, c.p, c.m);
    RfpiCounter exact;
    RfpiCounter approx;
    const CvlCurve ce = select_alpha_grid(x, grid, {}, CvlMethod::exact, 1, &exact);
    const CvlCurve ca = select_alpha_grid(x, grid, {}, CvlMethod::approximate, 1, &approx);
    const std::string tag = "p=" + std::to_string(c.p) + " n=" + std::to_string(c.n) +
                            " m=" + std::to_string(c.m);
    out.check(exact.value() == c.m * c.n && ce.total_rfpi_calls() == c.m * c.n,
              tag + ": exact calls " + std::to_string(exact.value()) + " == m*n");
    out.check(approx.value() == c.m && ca.total_rfpi_calls() == c.m,
              tag + ": approx calls " + std::to_string(approx.value()) + " == m");
  }
  // The same law measured through the bench harness at m=20, n=50.
  const BenchReport r = bench_exact_vs_approx(
      {5, 50, toeplitz_scatter(5, 0.5), RadialLaw::cauchy(), 1}, AlphaGrid::for_leave_one_out(50, 5, 20), {});
  out.check(r.exact_calls == 1000 && r.approx_calls == 20,
            "bench m=20 n=50: exact " + std::to_string(r.exact_calls) + ", approx " +
                std::to_string(r.approx_calls));
  return out;
}

// --- 2 ------------------------------------------------------------------------

Outcome curve_agreement() {
  Outcome out;
  const Index p = 50;
  const int m = 20;
  const int seeds = 10;
  const double gammas[] = {0.1, 0.5, 0.85};
  const Index ns[] = {100, 50, 25};
  double worst_gap = 0.0;
  for (Index n : ns) {
    for (double gamma : gammas) {
      const AlphaGrid grid = AlphaGrid::for_leave_one_out(n, p, m);
      int gap_ok = 0;
      int argmin_ok = 0;
      double max_gap = 0.0;
      bool identical = true;
      for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        const EllipticalSpec cauchy{p, n, toeplitz_scatter(p, gamma), RadialLaw::cauchy(), seed};
        EllipticalSpec constant = cauchy;
        constant.radial = RadialLaw::constant();
        const UnitSampleSet x = normalize_samples(sample_elliptical(cauchy)).samples;
        // Both laws normalize to the same directions, so one curve pair
        // serves both; the identity is asserted, not assumed.
        identical = identical && (normalize_samples(sample_elliptical(constant)).samples == x);
        const CvlCurve exact = select_alpha_grid(x, grid, {}, CvlMethod::exact);
        const CvlCurve approx = select_alpha_grid(x, grid, {}, CvlMethod::approximate);
        const double gap = relative_curve_gap(exact, approx);
        max_gap = std::max(max_gap, gap);
        gap_ok += gap < thresholds::kCurveRelativeGap;
        argmin_ok += argmin_index_distance(exact, approx) <= thresholds::kArgminGridSteps;
      }
      worst_gap = std::max(worst_gap, max_gap);
      const std::string tag = "n=" + std::to_string(n) + " gamma=" + fmt(gamma) + " (cauchy, constant)";
      out.check(identical, tag + ": laws give identical normalized data on all seeds");
      out.check(gap_ok >= 8, tag + ": relative gap < 0.05 on " + std::to_string(gap_ok) +
                                 "/10 seeds (max " + fmt(max_gap) + ")");
      out.check(argmin_ok >= 8, tag + ": argmins within one grid step on " +
                                    std::to_string(argmin_ok) + "/10 seeds");
    }
  }
  out.note("worst relative gap over all settings: " + fmt(worst_gap));
  return out;
}

// --- 3 ------------------------------------------------------------------------

Outcome speedup() {
  Outcome out;
  const Index p = 50;
  auto measure = [&](Index n) {
    const EllipticalSpec spec{p, n, toeplitz_scatter(p, 0.5), RadialLaw::cauchy(), 1};
    return bench_exact_vs_approx(spec, AlphaGrid::for_leave_one_out(n, p, 20), {});
  };
  const BenchReport r50 = measure(50);
  const BenchReport r100 = measure(100);
  const BenchReport r200 = measure(200);
  for (const auto* r : {&r50, &r100, &r200}) {
    out.note("n=" + std::to_string(r->setting.n) + ": exact " + fmt(r->exact_time_ns * 1e-9) +
             " s, approx " + fmt(r->approx_time_ns * 1e-9) + " s, speedup " + fmt(r->speedup));
  }
  out.check(r100.speedup >= thresholds::kSpeedup, "speedup at n=100 >= 10 (" + fmt(r100.speedup) + ")");
  out.check(r200.speedup >= r50.speedup,
            "speedup at n=200 (" + fmt(r200.speedup) + ") >= speedup at n=50 (" + fmt(r50.speedup) + ")");
  return out;
}

// --- 4 ------------------------------------------------------------------------

Outcome near_optimality() {
  Outcome out;
  const Index p = 50;
  for (Index n : reproduce_sample_sizes(p)) {
    for (double gamma : {0.1, 0.5, 0.85}) {
      const EllipticalSpec spec{p, n, toeplitz_scatter(p, gamma), RadialLaw::cauchy(), 1};
      const NmseSweep sweep = nmse_sweep(spec, AlphaGrid::for_full_fit(n, p, 20), {});
      const double ratio = sweep.selected.front().nmse / sweep.oracle_nmse;
      out.check(ratio <= thresholds::kNmseRatio,
                "n=" + std::to_string(n) + " gamma=" + fmt(gamma) + ": acvl alpha " +
                    fmt(sweep.selected.front().alpha) + ", oracle alpha " + fmt(sweep.oracle_alpha) +
                    ", nmse ratio " + fmt(ratio));
      // Diagnostic only: the CVL loss is blind to scale, raw NMSE is not.
      const UnitSampleSet x = normalize_samples(sample_elliptical(spec)).samples;
      const Eigen::MatrixXd at_acvl = rtme_fit(x, alpha_cfg(sweep.selected.front().alpha)).estimate.entries();
      const Eigen::MatrixXd at_oracle = rtme_fit(x, alpha_cfg(sweep.oracle_alpha)).estimate.entries();
      const Eigen::MatrixXd truth = trace_normalized(spec.scatter.entries());
      out.note("trace at acvl alpha " + fmt(at_acvl.trace()) + " (p=50); trace-normalized nmse ratio " +
               fmt(nmse(trace_normalized(at_acvl), truth) / nmse(trace_normalized(at_oracle), truth)));
    }
  }
  return out;
}

// --- 5 ------------------------------------------------------------------------

Outcome rtme_correctness() {
  Outcome out;
  // (a) residual of every converged fit over a generated family.
  SplitMix64 gen(5);
  double worst = 0.0;
  int fits = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Index p = 2 + static_cast<Index>(gen() % 30);
    const Index n = 2 + static_cast<Index>(gen() % 60);
    const double lb = alpha_lower_bound(n, p);
    const double alpha = lb + (1.0 - lb) * (0.05 + 0.95 * gen.uniform());
    const UnitSampleSet x = draw_unit_samples(p, n, gen(), 0.9 * gen.uniform());
    const FitReport r = rtme_fit(x, alpha_cfg(alpha));
    worst = std::max({worst, r.fixed_point_residual,
                      fixed_point_residual(x, r.estimate, alpha, ScatterMatrix::identity(p))});
    ++fits;
  }
  out.check(worst < kResidualBound, "(a) max residual over " + std::to_string(fits) + " fits " +
                                        fmt(worst) + " < " + fmt(kResidualBound));

  // (b) uniqueness from I and 2I.
  const UnitSampleSet x = draw_unit_samples(4, 8, 42);
  FitConfig from_two = alpha_cfg(0.6);
  from_two.init = ScatterMatrix(2.0 * Eigen::MatrixXd::Identity(4, 4));
  const double diff =
      (rtme_fit(x, alpha_cfg(0.6)).estimate.entries() - rtme_fit(x, from_two).estimate.entries()).norm();
  out.check(diff < 1e-6, "(b) inits I and 2I agree to " + fmt(diff));

  // (c) alpha = 1 returns T exactly.
  FitConfig one = alpha_cfg(1.0);
  one.target = ScatterMatrix(testing::random_spd(6, 5));
  const UnitSampleSet y = draw_unit_samples(6, 9, 5);
  out.check(rtme_fit(y, one).estimate.entries() == one.target->entries() &&
                rtme_fit(y, alpha_cfg(1.0)).estimate.entries() == Eigen::MatrixXd::Identity(6, 6),
            "(c) alpha=1 returns T exactly");

  // (d) admissibility guard.
  const UnitSampleSet wide = draw_unit_samples(200, 100, 1);
  auto rejects = [](const UnitSampleSet& s, double alpha) {
    try {
      rtme_fit(s, alpha_cfg(alpha));
    } catch (const DomainError&) {
      return true;
    }
    return false;
  };
  bool guard = rejects(wide, 0.49) && rejects(wide, 0.5) && !rejects(wide, 0.51);
  const UnitSampleSet square = draw_unit_samples(10, 10, 2);
  guard = guard && rejects(square, 0.0) && !rejects(square, 0.01);
  out.check(guard, "(d) alpha <= 1 - n/p rejected (p=200 n=100: 0.49, 0.5), 0.51 accepted");
  return out;
}

// --- 6 ------------------------------------------------------------------------

Outcome tme_consistency() {
  Outcome out;
  const ScatterMatrix truth = toeplitz_scatter(2, 0.5);
  const RadialLaw laws[] = {RadialLaw::constant(), RadialLaw::student_t(3), RadialLaw::laplace(),
                            RadialLaw::cauchy()};
  std::vector<Eigen::MatrixXd> estimates;
  for (const auto& law : laws) {
    const UnitSampleSet x = normalize_samples(sample_elliptical({2, 10000, truth, law, 1})).samples;
    estimates.push_back(tme_fit(x).estimate.entries());
  }
  const double err = nmse(trace_normalized(estimates.front()), trace_normalized(truth.entries()));
  out.check(err < 0.01, "p=2 n=10000 trace-normalized nmse " + fmt(err) + " < 0.01");
  bool identical = true;
  for (const auto& e : estimates) identical = identical && e == estimates.front();
  out.check(identical, "estimates bit-identical across constant, student:3, laplace, cauchy");
  return out;
}

// --- 7 ------------------------------------------------------------------------

Outcome loss_identities() {
  Outcome out;
  bool nll_zero = true;
  bool cvl_zero = true;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index p = 1 + static_cast<Index>(seed % 15);
    const Index n = 2 + static_cast<Index>((seed * 7) % 25);
    const UnitSampleSet x = draw_unit_samples(p, n, seed, 0.85);
    nll_zero = nll_zero && acg_nll(x, ScatterMatrix::identity(p)) == 0.0;
    cvl_zero = cvl_zero && exact_cvl(x, 1.0, {}).loss == 0.0 && approx_cvl(x, 1.0, {}).loss == 0.0;
  }
  out.check(nll_zero, "acg_nll(X, I) == 0 exactly on 30 sample sets");
  out.check(cvl_zero, "exact and approximate CVL == 0 exactly at alpha=1, T=I on 30 sample sets");
  return out;
}

// --- 8 ------------------------------------------------------------------------

Outcome oracle_equivalence() {
  Outcome out;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const UnitSampleSet x = draw_unit_samples(4, 8, seed);
    for (double alpha : {0.2, 0.45, 0.7, 0.95}) {
      const double d = std::abs(exact_cvl(x, alpha, {}).loss - testing::brute_force_cvl(x, alpha));
      worst = std::max(worst, d);
    }
  }
  out.check(worst <= 1e-10, "p=4 n=8, 5 seeds x 4 alphas: max |exact - brute force| " + fmt(worst));
  return out;
}

// --- 9 ------------------------------------------------------------------------

Outcome bisection_bound() {
  Outcome out;
  int runs = 0;
  int within_bound = 0;
  int unimodal = 0;
  int located = 0;
  double eps_used = 1e-3;
  // Probes land within 1e-3 of the admissibility bound, where RFPI needs tens of
  // thousands of sweeps.
  FitConfig near_bound;
  near_bound.max_iter = 1000000;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Index p = 10;
    const Index n = seed % 2 ? 40 : 8;
    const double gamma = 0.1 + 0.1 * static_cast<double>(seed);
    const UnitSampleSet x = draw_unit_samples(p, n, seed, gamma);
    const double lo = alpha_lower_bound(n, p);
    const double hi = 1.0;
    for (double eps : {1e-2, 1e-3}) {
      const BisectionResult r = select_alpha_bisection(x, lo, hi, eps, near_bound);
      ++runs;
      within_bound += r.iterations <= static_cast<int>(std::ceil(std::log2((hi - lo) / eps))) + 2;
    }

    // Dense-grid oracle on the same bracket.
    std::vector<CvlPoint> dense;
    for (int k = 1; k <= 1000; ++k) {
      const double alpha = lo + (hi - lo) * k / 1001.0;
      dense.push_back({alpha, approx_cvl(x, alpha, near_bound).loss, 1, 0});
    }
    if (!detail::looks_unimodal(dense)) {
      out.note("seed " + std::to_string(seed) + ": dense curve not unimodal, location check skipped");
      continue;
    }
    ++unimodal;
    const double best = dense[detail::argmin_smallest_alpha(dense)].alpha;
    const BisectionResult r = select_alpha_bisection(x, lo, hi, eps_used, near_bound);
    const double miss = std::abs(r.alpha - best);
    located += miss <= eps_used;
    out.note("seed " + std::to_string(seed) + " n=" + std::to_string(n) + ": bisection " +
             fmt(r.alpha) + " vs dense argmin " + fmt(best) + " (" + std::to_string(r.iterations) +
             " steps)");
  }
  out.check(within_bound == runs, "iterations <= ceil(log2((hi-lo)/eps)) + 2 on " +
                                      std::to_string(within_bound) + "/" + std::to_string(runs) + " runs");
  out.check(unimodal > 0 && located == unimodal,
            "alpha within eps=1e-3 of 1000-point argmin on " + std::to_string(located) + "/" +
                std::to_string(unimodal) + " unimodal instances");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "call-count law", call_count_law},
      {2, "exact vs approximate curve agreement", curve_agreement},
      {3, "approximate selector speedup", speedup},
      {4, "ACVL near NMSE-optimal alpha", near_optimality},
      {5, "RTME correctness suite", rtme_correctness},
      {6, "TME consistency and radial cancellation", tme_consistency},
      {7, "loss identities", loss_identities},
      {8, "exact CVL vs brute-force LOOCV", oracle_equivalence},
      {9, "bisection iteration bound", bisection_bound},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return std::min(failed, 9);
}
