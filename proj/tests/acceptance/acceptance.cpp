// Acceptance run: one PASS/FAIL line per criterion.
//
//   kms_acceptance [--only K] [--cli PATH] [--workdir DIR]
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "datagen.hpp"
#include "kernels.hpp"
#include "kms.hpp"
#include "oracles.hpp"
#include "ot.hpp"
#include "rankred.hpp"
#include "sdr.hpp"
#include "stats.hpp"

using namespace kms;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string cli_path;
std::filesystem::path workdir;

Eigen::MatrixXd uniform_costs(int n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = u(gen);
  return c;
}

Eigen::MatrixXd pooled(const PointCloud& x, const PointCloud& y) {
  Eigen::MatrixXd z(x.n() + y.n(), x.d());
  z << x.points, y.points;
  return z;
}

// 1. rank bound table and post-reduction ranks
Outcome criterion1() {
  const std::vector<Eigen::Index> ns{200, 250, 300, 350, 400, 450, 500};
  const std::vector<Eigen::Index> want{19, 21, 24, 26, 27, 29, 31};
  bool table = true;
  for (std::size_t i = 0; i < ns.size(); ++i) table = table && rank_bound(ns[i]) == want[i];

  RankCheckOptions o;
  o.sizes = {50, 100, 200};
  o.trials = 20;
  o.seed = 2024;
  const auto rows = rank_check(o);
  int ok = 0;
  Eigen::Index worst_gap = -1000;
  for (const auto& r : rows) {
    ok += r.after <= r.bound;
    worst_gap = std::max(worst_gap, r.after - r.bound);
  }
  std::ostringstream d;
  d << "table " << (table ? "matches" : "differs") << "; rank <= bound in " << ok << "/" << rows.size()
    << " fits (max after - bound = " << worst_gap << ")";
  for (Eigen::Index n : o.sizes) {
    int hits = 0;
    for (const auto& r : rows) hits += r.n == n && r.after <= r.bound;
    d << "; n=" << n << ": " << hits << "/20";
  }
  return {table && ok == static_cast<int>(rows.size()), d.str()};
}

// 2. inner OT against enumeration, entropic accuracy, rounding marginals
Outcome criterion2() {
  std::mt19937_64 gen(77);
  double worst_exact = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd c = uniform_costs(1 + t % 6, gen);
    worst_exact = std::max(worst_exact, std::abs(solve_exact(c).value - oracle::brute_force_assignment(c)));
  }
  std::ostringstream d;
  bool pass = worst_exact <= 1e-9;
  d << "exact vs enumeration max err " << fmt("%.2e", worst_exact);
  double worst_margin = 0.0;
  for (int n : {10, 50, 100}) {
    int ok = 0;
    for (int t = 0; t < 100; ++t) {
      const Eigen::MatrixXd c = uniform_costs(n, gen);
      EntropicOptions eo;
      eo.seed = static_cast<std::uint64_t>(1000 * n + t);
      const EntropicReport e = solve_entropic(c, 0.05, eo);
      ok += std::abs(e.value - oracle::ssp_assignment(c)) <= 0.05;
      worst_margin = std::max(worst_margin, marginal_error(e.plan.pi));
    }
    pass = pass && ok >= 95;
    d << "; entropic n=" << n << " " << ok << "/100";
  }
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 30;
    Eigen::MatrixXd r = uniform_costs(n, gen);
    if (t % 3 == 0) r = r.array().pow(8.0).matrix();  // lopsided inputs
    worst_margin = std::max(worst_margin, marginal_error(round_to_polytope(r).pi));
  }
  pass = pass && worst_margin <= 1e-12;
  d << "; rounding marginal err " << fmt("%.2e", worst_margin);
  return {pass, d.str()};
}

// 3. rank-one <= relaxation >= random unit functions; n = 1 closed form
Outcome criterion3() {
  int below = 0, under_dual = 0, above_random = 0, rank_one_best = 0;
  double worst_ratio = 0.0, worst_dual = 0.0, min_margin = 1e300;
  for (int t = 0; t < 50; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::gauss_cov_shift;
    spec.n = std::vector<Eigen::Index>{5, 10, 20}[t % 3];
    spec.d = 3;
    spec.params["rho"] = 0.5;
    spec.seed = 300 + t;
    const auto [x, y] = generate(spec);
    const Kernel k = KernelSpec{}.resolve(x, y);
    KmsOptions o;
    o.seed = t;
    const KmsResult r = kms2(x, y, k, o);
    below += r.value <= r.sdr_value;
    worst_ratio = std::max(worst_ratio, r.value / r.sdr_value);
    rank_one_best += r.value == r.sdr_value;
    // upper_bound is lambda_max of the averaged supgradients, a certificate on the optimum.
    under_dual += r.value <= r.upper_bound * (1.0 + 1e-12);
    worst_dual = std::max(worst_dual, r.value / r.upper_bound);
    const double rnd =
        oracle::best_random_rank_one(oracle::gaussian_gram(pooled(x, y), k.bandwidth, false), 10000, 900 + t);
    above_random += r.sdr_value >= rnd;
    min_margin = std::min(min_margin, r.sdr_value - rnd);
  }
  double worst_n1 = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::mt19937_64 gen(4000 + t);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(1, 3), y(1, 3);
    for (int j = 0; j < 3; ++j) {
      x(0, j) = g(gen);
      y(0, j) = g(gen);
    }
    const double sigma = 0.5 + t * 0.1;
    const Kernel k{KernelKind::gaussian, sigma, BandwidthConvention::half};
    const double m2 = 2.0 - 2.0 * std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
    const KmsResult r = kms2(PointCloud(x), PointCloud(y), k);
    worst_n1 = std::max(worst_n1, std::abs(r.value - m2) / m2);
  }
  std::ostringstream d;
  d << "rank-1 <= SDR in " << below << "/50 (max ratio " << fmt("%.9f", worst_ratio) << ", rank-1 point best in "
    << rank_one_best << "); rank-1 <= dual bound in " << under_dual << "/50 (max ratio " << fmt("%.6f", worst_dual)
    << "); SDR >= random best in "
    << above_random << "/50 (min margin " << fmt("%.3e", min_margin) << "); n=1 max rel err "
    << fmt("%.2e", worst_n1);
  return {below == 50 && under_dual == 50 && above_random == 50 && worst_n1 <= 1e-6, d.str()};
}

// 4. n = 2 mirror ascent under the theorem parameters vs dense reference
Outcome criterion4() {
  bool pass = true;
  std::ostringstream d;
  double worst = 0.0, worst_cross = 0.0;
  for (int t = 0; t < 5; ++t) {
    std::mt19937_64 gen(5000 + t);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(2, 2), y(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        x(i, j) = g(gen);
        y(i, j) = g(gen) + 0.5;
      }
    const Kernel k{KernelKind::gaussian, 1.0, BandwidthConvention::half};
    const GramAssembly ga = assemble(k, PointCloud(x), PointCloud(y));
    SolverConfig cfg = theorem_config(ga, 0.01 * ga.c_bound, static_cast<std::uint64_t>(t));
    cfg.early_stop = false;
    cfg.step_rule = StepRule::theorem;
    const SdrSolution sol = solve_sdr(ga, cfg);
    const auto ref = oracle::two_point_sdr(oracle::gaussian_gram(pooled(PointCloud(x), PointCloud(y)), 1.0, false),
                                           100000, 6000 + t);
    const double gap = std::abs(sol.value - ref.ascent);
    worst = std::max(worst, gap / cfg.delta);
    worst_cross = std::max(worst_cross, std::abs(ref.ascent - ref.minimax));
    pass = pass && gap <= cfg.delta;
    if (t == 0) d << "T=" << cfg.T << "; ";
  }
  d << "max |F(S_avg) - reference| / delta = " << fmt("%.3f", worst) << " over 5 instances; ascent vs minimax max gap "
    << fmt("%.2e", worst_cross);
  return {pass, d.str()};
}

// 5. convergence rates under mu = nu on the two-point law
Outcome criterion5() {
  DatasetSpec spec;
  spec.kind = DatasetKind::two_point_1d;
  spec.d = 1;
  SweepOptions o2;
  o2.p = 2.0;
  // a dense grid over the range keeps the slope's standard error well inside the tolerance
  for (Eigen::Index n = 50; n <= 400; n += 10) o2.sizes.push_back(n);
  o2.trials = 20;
  o2.seed = 55;
  const SweepResult r2 = rate_sweep(spec, o2);
  SweepOptions o1;
  o1.p = 1.0;
  for (Eigen::Index n = 100; n <= 3200; n += 100) o1.sizes.push_back(n);
  o1.trials = 50;
  o1.seed = 56;
  const SweepResult r1 = rate_sweep(spec, o1);
  const bool pass = std::abs(r2.slope + 0.25) <= 0.08 && std::abs(r1.slope + 0.5) <= 0.08;
  std::ostringstream d;
  d << "p=2 slope " << fmt("%.4f", r2.slope) << " +- " << fmt("%.4f", r2.slope_stderr) << " (" << r2.method
    << "), p=1 slope " << fmt("%.4f", r1.slope) << " +- " << fmt("%.4f", r1.slope_stderr) << " (" << r1.method << ")";
  return {pass, d.str()};
}

// 6. type-I error on the gaussian mixture null
Outcome criterion6() {
  const KernelSpec ks{KernelKind::gaussian, std::nullopt, BandwidthConvention::half};
  int perm_reject = 0, thm_reject = 0;
  for (int t = 0; t < 100; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::gauss_mixture;
    spec.n = 200;
    spec.d = 40;
    spec.params["rho"] = 0.0;
    spec.seed = 6000 + t;
    const auto [x, y] = generate(spec);
    PermutationTestOptions po;
    po.alpha = 0.05;
    po.permutations = 500;
    po.seed = 7000 + t;
    perm_reject += two_sample_test(x, y, ks, po).reject;
    CriticalValueParams cv;
    cv.alpha = 0.05;
    KmsOptions so;
    so.seed = 8000 + t;
    thm_reject += theorem_test(x, y, ks, cv, so).reject;
  }
  std::ostringstream d;
  d << "permutation rejection rate " << fmt("%.2f", perm_reject / 100.0) << ", theorem rejection rate "
    << fmt("%.2f", thm_reject / 100.0);
  return {perm_reject <= 10 && thm_reject <= 5, d.str()};
}

// 7. power under covariance shift
Outcome criterion7() {
  const KernelSpec ks{KernelKind::gaussian, std::nullopt, BandwidthConvention::half};
  auto rate = [&](double rho, std::uint64_t base) {
    int rejected = 0;
    for (int t = 0; t < 20; ++t) {
      DatasetSpec spec;
      spec.kind = DatasetKind::gauss_cov_shift;
      spec.n = 200;
      spec.d = 200;
      spec.params["rho"] = rho;
      spec.seed = base + t;
      const auto [x, y] = generate(spec);
      PermutationTestOptions po;
      po.seed = base + 100 + t;
      rejected += two_sample_test(x, y, ks, po).reject;
    }
    return rejected / 20.0;
  };
  const double power = rate(0.06, 10000), size = rate(0.0, 20000);
  return {power >= 0.5 && size <= 0.10,
          "rho=0.06 rate " + fmt("%.2f", power) + ", rho=0 rate " + fmt("%.2f", size)};
}

// 8. circle data: gaussian KMS separates better than linear MS on held-out halves
Outcome criterion8() {
  int wins = 0;
  std::ostringstream d;
  for (int t = 0; t < 20; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::circle;
    spec.n = 100;
    spec.seed = 800 + t;
    const auto [x, y] = generate(spec);
    PermutationTestOptions po;
    po.permutations = 1;
    po.seed = 8100 + t;
    const TestResult g = two_sample_test(x, y, KernelSpec{KernelKind::gaussian, std::nullopt, BandwidthConvention::half}, po);
    const TestResult l =
        two_sample_test(x, y, KernelSpec{KernelKind::dot_product, std::nullopt, BandwidthConvention::half}, po);
    wins += g.statistic > l.statistic;
    if (t < 3) d << "[" << fmt("%.3f", g.statistic) << " vs " << fmt("%.3f", l.statistic) << "] ";
  }
  d << "gaussian > dot product in " << wins << "/20";
  // Not part of the verdict: the linear statistic carries the data's units while
  // the gaussian one is bounded by 2, so the ordering depends on the ring radii.
  int small_wins = 0;
  for (int t = 0; t < 20; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::circle;
    spec.n = 100;
    spec.seed = 800 + t;
    spec.params = {{"r_in", 0.25}, {"r_out", 0.5}, {"noise", 0.025}};
    const auto [x, y] = generate(spec);
    PermutationTestOptions po;
    po.permutations = 1;
    po.seed = 8100 + t;
    small_wins += two_sample_test(x, y, KernelSpec{KernelKind::gaussian, std::nullopt, BandwidthConvention::half}, po).statistic >
                  two_sample_test(x, y, KernelSpec{KernelKind::dot_product, std::nullopt, BandwidthConvention::half}, po).statistic;
  }
  d << " (info: rings scaled by 1/4 give " << small_wins << "/20)";
  return {wins >= 18, d.str()};
}

// 9. rank reduction keeps the objective and the binding equalities
Outcome criterion9() {
  int value_ok = 0, loops_ok = 0, binding_ok = 0, all_ok = 0;
  double worst_rel = 0.0, worst_bind = 0.0, worst_final = 0.0;
  long worst_loops = 0;
  for (int t = 0; t < 20; ++t) {
    DatasetSpec spec;
    spec.kind = DatasetKind::gauss_cov_shift;
    spec.n = t < 10 ? 20 : 50;
    spec.d = 10;
    spec.seed = 9000 + t;
    const auto [x, y] = generate(spec);
    const GramAssembly ga = assemble(KernelSpec{}.resolve(x, y), x, y);
    KmsOptions o;
    o.seed = 9100 + t;
    const Relaxation rel = relax(ga, o);
    const ReducedSolution& red = rel.reduced;
    const Eigen::MatrixXd& S0 = rel.reduced_last ? rel.sdr.S_last.S : rel.sdr.S_avg.S;

    const double before = objective_exact(S0, ga), after = objective_exact(red.S.S, ga);
    const double rel_diff = std::abs(after - before) / std::abs(before);
    // duals of the input point must stay tight on its matched pairs and feasible elsewhere
    const BindingSet b0 = find_binding(S0, ga);
    const Eigen::MatrixXd c1 = pair_costs(red.S.S, ga);
    double bind = 0.0;
    for (Eigen::Index i = 0; i < ga.n; ++i) {
      const Eigen::Index j = b0.sigma[static_cast<std::size_t>(i)];
      bind = std::max(bind, std::abs(b0.dual_f(i) + b0.dual_g(j) - c1(i, j)));
      for (Eigen::Index k = 0; k < ga.n; ++k) bind = std::max(bind, b0.dual_f(i) + b0.dual_g(k) - c1(i, k));
    }
    // certificate at the output point
    double fin = red.dual_violation;
    for (Eigen::Index i = 0; i < ga.n; ++i) {
      const Eigen::Index j = red.binding.sigma[static_cast<std::size_t>(i)];
      fin = std::max(fin, std::abs(red.binding.dual_f(i) + red.binding.dual_g(j) - c1(i, j)));
    }
    const long loops = red.iterations + red.pivots;
    const bool v = rel_diff < 1e-6, l = loops <= 2 * ga.n, bd = bind <= 1e-7;
    value_ok += v;
    loops_ok += l;
    binding_ok += bd;
    all_ok += v && l && bd;
    worst_rel = std::max(worst_rel, rel_diff);
    worst_bind = std::max(worst_bind, bind);
    worst_final = std::max(worst_final, fin);
    worst_loops = std::max(worst_loops, loops);
  }
  std::ostringstream d;
  d << "value kept in " << value_ok << "/20 (max rel change " << fmt("%.2e", worst_rel) << "); loops <= 2n in "
    << loops_ok << "/20 (max " << worst_loops << "); input duals tight in " << binding_ok << "/20 (max dev "
    << fmt("%.2e", worst_bind) << "); output certificate max dev " << fmt("%.2e", worst_final);
  return {all_ok == 20, d.str()};
}

// 10. byte-identical CLI reruns
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion10() {
  if (cli_path.empty()) return {false, "no --cli path given"};
  std::filesystem::create_directories(workdir);
  const auto w = workdir.string();
  {
    std::ofstream spec(workdir / "spec.json");
    spec << R"({"kind":"circle","n":40,"seed":11})";
  }
  struct Cmd {
    std::string name;
    std::string args;
    std::vector<std::string> files;  // written by the command, besides stdout
  };
  const std::vector<Cmd> cmds{
      {"generate", "generate --spec " + w + "/spec.json --out-prefix " + w + "/RUN", {"RUN_x.csv", "RUN_y.csv"}},
      {"distance",
       "distance " + w + "/ref_x.csv " + w + "/ref_y.csv --seed 5 --out " + w + "/RUN.json --projector-out " + w +
           "/RUN_proj.csv --trace-out " + w + "/RUN_trace.csv",
       {"RUN.json", "RUN_proj.csv", "RUN_trace.csv"}},
      {"test", "test " + w + "/ref_x.csv " + w + "/ref_y.csv --permutations 50 --seed 5", {}},
      {"test-theorem", "test " + w + "/ref_x.csv " + w + "/ref_y.csv --mode theorem --seed 5", {}},
      {"rankcheck", "rankcheck --n-list 10,15 --trials 2 --seed 5", {}},
      {"sweep", "sweep --dataset two_point_1d --sizes 20,40 --trials 3 --seed 5 --out " + w + "/RUN_sweep.csv",
       {"RUN_sweep.csv"}},
  };
  // reference inputs for the commands that read data
  if (std::system((cli_path + " generate --spec " + w + "/spec.json --out-prefix " + w + "/ref").c_str()) != 0) {
    return {false, "generate failed"};
  }
  int identical = 0;
  std::ostringstream d;
  for (const auto& c : cmds) {
    std::vector<std::string> outputs[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      std::string args = c.args;
      const std::string tag = c.name + "_" + std::to_string(rep);
      for (std::size_t at; (at = args.find("RUN")) != std::string::npos;) args.replace(at, 3, tag);
      const auto out = workdir / (tag + ".stdout");
      ran = ran && std::system((cli_path + " " + args + " > " + out.string()).c_str()) == 0;
      outputs[rep].push_back(slurp(out));
      for (auto f : c.files) {
        for (std::size_t at; (at = f.find("RUN")) != std::string::npos;) f.replace(at, 3, tag);
        outputs[rep].push_back(slurp(workdir / f));
      }
    }
    // stdout may be empty when the command writes files; those must not be
    bool same = ran;
    for (std::size_t i = 0; i < outputs[0].size(); ++i) {
      const bool must_have = c.files.empty() || i > 0;
      same = same && outputs[0][i] == outputs[1][i] && !(must_have && outputs[0][i].empty());
    }
    identical += same;
    if (!same) d << c.name << " differs; ";
  }
  d << identical << "/" << cmds.size() << " commands byte-identical";
  return {identical == static_cast<int>(cmds.size()), d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  workdir = std::filesystem::temp_directory_path() / "kms_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (a == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else if (a == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      std::cerr << "usage: kms_acceptance [--only K] [--cli PATH] [--workdir DIR]\n";
      return 2;
    }
  }
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && only != static_cast<int>(k + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << (k + 1) << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << fmt("%.1f", secs) << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
