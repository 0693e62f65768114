// Command-line front end. Talks to the library only through the C interface.
#include <kms/kms.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using Json = nlohmann::ordered_json;

const char* status_name(int code) {
  switch (code) {
    case KMS_E_USAGE: return "usage";
    case KMS_E_PARSE: return "parse";
    case KMS_E_NUMERICAL: return "numerical";
    case KMS_E_SOLVER: return "solver";
    default: return "internal";
  }
}

// Exit code contract: 0 ok, 1 usage, 2 parse, 3 numerical, 4 solver.
struct Failure {
  int code;
  std::string message;
};

int report(const Failure& f) {
  Json j;
  j["error"] = {{"code", f.code}, {"kind", status_name(f.code)}, {"message", f.message}};
  std::cerr << j.dump() << "\n";
  return f.code;
}

void check(kms_status s) {
  if (s != KMS_OK) throw Failure{static_cast<int>(s) == KMS_E_INTERNAL ? KMS_E_SOLVER : static_cast<int>(s), kms_last_error()};
}

struct Owned {
  char* p = nullptr;
  ~Owned() { kms_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

using CloudPtr = std::unique_ptr<kms_cloud, decltype(&kms_cloud_free)>;

CloudPtr load(const std::string& path) {
  kms_cloud* c = nullptr;
  check(kms_cloud_load(path.c_str(), &c));
  return CloudPtr(c, &kms_cloud_free);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{KMS_E_USAGE, "cannot open " + path + " for writing"};
  out << text;
  if (!out) throw Failure{KMS_E_USAGE, "failed writing " + path};
}

std::vector<size_t> parse_sizes(const std::string& text, const char* flag) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      throw Failure{KMS_E_USAGE, std::string(flag) + ": '" + item + "' is not a positive integer"};
    }
  }
  if (out.empty()) throw Failure{KMS_E_USAGE, std::string(flag) + " is empty"};
  return out;
}

struct SolverFlags {
  std::string kernel = "gaussian";
  std::optional<double> sigma;
  bool median = false;
  std::string convention = "half";
  double delta = 0.0;
  long max_iters = 0;
  uint64_t seed = 0;

  void add(CLI::App* cmd, bool with_kernel) {
    kms_solver_options d;
    kms_solver_options_init(&d);
    delta = d.relative_delta;
    max_iters = d.max_iterations;
    if (with_kernel) {
      cmd->add_option("--kernel", kernel, "gaussian | dot_product")->check(CLI::IsMember({"gaussian", "dot_product"}));
      auto* s = cmd->add_option("--sigma", sigma, "gaussian bandwidth")->check(CLI::PositiveNumber);
      auto* m = cmd->add_flag("--median", median, "median-heuristic bandwidth (default)");
      s->excludes(m);
      cmd->add_option("--convention", convention, "bandwidth convention: half | unit")
          ->check(CLI::IsMember({"half", "unit"}));
    }
    cmd->add_option("--delta", delta, "accuracy relative to the largest pair cost")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", max_iters, "mirror-ascent iteration cap, 0 = theorem horizon")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "master seed");
  }

  kms_solver_options options() const {
    kms_solver_options o;
    kms_solver_options_init(&o);
    o.kernel = kernel.c_str();
    o.bandwidth = sigma.value_or(0.0);
    o.convention = convention.c_str();
    o.relative_delta = delta;
    o.max_iterations = max_iters;
    o.seed = seed;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel max-sliced 2-Wasserstein distances and two-sample tests"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for sweeps and rank checks")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", std::string(kms_version()));

  // distance
  auto* dist = app.add_subcommand("distance", "KMS distance between two clouds, as JSON");
  std::string dx, dy, dout, dproj, dtrace;
  bool timings = false;
  SolverFlags dflags;
  dist->add_option("X", dx, "first cloud (CSV or .bin)")->required();
  dist->add_option("Y", dy, "second cloud")->required();
  dflags.add(dist, true);
  dist->add_option("--out", dout, "result JSON (default stdout)");
  dist->add_option("--projector-out", dproj, "projector coefficients CSV");
  dist->add_option("--trace-out", dtrace, "mirror-ascent trace CSV");
  dist->add_flag("--timings", timings, "include wall-clock timings in the JSON");

  // test
  auto* test = app.add_subcommand("test", "two-sample test, as JSON");
  std::string tx, ty, tout, mode = "bootstrap";
  double alpha = 0.05, tp = 2.0, c_univ = 1.0;
  int permutations = 500;
  SolverFlags tflags;
  test->add_option("X", tx)->required();
  test->add_option("Y", ty)->required();
  tflags.add(test, true);
  test->add_option("--alpha", alpha, "level in (0, 1)");
  test->add_option("--permutations", permutations, "bootstrap permutations");
  test->add_option("--mode", mode, "bootstrap | theorem")->check(CLI::IsMember({"bootstrap", "theorem"}));
  test->add_option("--p", tp, "Wasserstein order (theorem mode)");
  test->add_option("--c-univ", c_univ, "universal constant in the critical value (theorem mode)");
  test->add_option("--out", tout, "result JSON (default stdout)");

  // rankcheck
  auto* rank = app.add_subcommand("rankcheck", "rank before and after reduction, as CSV");
  std::string n_list, rdataset = "gauss_cov_shift", rout;
  int rtrials = 1;
  SolverFlags rflags;
  rank->add_option("--n-list", n_list, "comma-separated sample sizes")->required();
  rank->add_option("--dataset", rdataset, "dataset kind");
  rank->add_option("--trials", rtrials, "trials per size")->check(CLI::PositiveNumber);
  rflags.add(rank, false);
  rank->add_option("--out", rout, "CSV path (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "convergence-rate sweep under mu = nu");
  std::string sdataset = "two_point_1d", sizes, skernel = "dot_product", sout, ssummary;
  int strials = 20;
  double sp = 2.0;
  SolverFlags sflags;
  sweep->add_option("--dataset", sdataset, "dataset kind");
  sweep->add_option("--sizes", sizes, "comma-separated sample sizes (at least two)")->required();
  sweep->add_option("--trials", strials, "trials per size")->check(CLI::PositiveNumber);
  sweep->add_option("--p", sp, "Wasserstein order");
  sweep->add_option("--kernel", skernel, "gaussian | dot_product")->check(CLI::IsMember({"gaussian", "dot_product"}));
  sflags.add(sweep, false);
  sweep->add_option("--out", sout, "per-trial CSV; without it the CSV goes to stdout");
  sweep->add_option("--summary", ssummary, "slope summary JSON; stdout when --out is given and this is not");

  // generate
  auto* gen = app.add_subcommand("generate", "sample a synthetic dataset to <prefix>_x.csv and <prefix>_y.csv");
  std::string spec_path, prefix;
  gen->add_option("--spec", spec_path, "dataset spec JSON")->required();
  gen->add_option("--out-prefix", prefix, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    return report(Failure{KMS_E_USAGE, e.what()});
  }

  try {
    if (*dist) {
      auto x = load(dx);
      auto y = load(dy);
      const kms_solver_options o = dflags.options();
      kms_result* raw = nullptr;
      check(kms_distance(x.get(), y.get(), &o, &raw));
      std::unique_ptr<kms_result, decltype(&kms_result_free)> r(raw, &kms_result_free);
      Owned json;
      check(kms_result_json(r.get(), timings ? 1 : 0, &json.p));
      if (!dproj.empty()) {
        Owned csv;
        check(kms_result_projector_csv(r.get(), &csv.p));
        emit(dproj, csv.str());
      }
      if (!dtrace.empty()) {
        Owned csv;
        check(kms_result_trace_csv(r.get(), &csv.p));
        emit(dtrace, csv.str());
      }
      emit(dout, json.str());
    } else if (*test) {
      kms_test_options o;
      kms_test_options_init(&o);
      o.solver = tflags.options();
      o.alpha = alpha;
      o.permutations = permutations;
      o.mode = mode.c_str();
      o.p = tp;
      o.c_univ = c_univ;
      if (!(alpha > 0.0 && alpha < 1.0)) throw Failure{KMS_E_USAGE, "--alpha must lie in (0, 1)"};
      auto x = load(tx);
      auto y = load(ty);
      Owned json;
      check(kms_test(x.get(), y.get(), &o, &json.p));
      emit(tout, json.str());
    } else if (*rank) {
      const auto ns = parse_sizes(n_list, "--n-list");
      kms_rankcheck_options o;
      kms_rankcheck_options_init(&o);
      o.n_list = ns.data();
      o.n_count = ns.size();
      o.dataset = rdataset.c_str();
      o.trials = rtrials;
      o.seed = rflags.seed;
      o.threads = threads;
      o.relative_delta = rflags.delta;
      o.max_iterations = rflags.max_iters;
      Owned csv;
      check(kms_rankcheck(&o, &csv.p));
      emit(rout, csv.str());
    } else if (*sweep) {
      const auto ns = parse_sizes(sizes, "--sizes");
      kms_sweep_options o;
      kms_sweep_options_init(&o);
      o.dataset = sdataset.c_str();
      o.sizes = ns.data();
      o.size_count = ns.size();
      o.trials = strials;
      o.p = sp;
      o.kernel = skernel.c_str();
      o.seed = sflags.seed;
      o.threads = threads;
      o.relative_delta = sflags.delta;
      o.max_iterations = sflags.max_iters;
      Owned csv, json;
      check(kms_sweep(&o, &csv.p, &json.p));
      emit(sout, csv.str());
      if (!ssummary.empty()) {
        emit(ssummary, json.str());
      } else if (!sout.empty()) {
        emit("", json.str());
      }
    } else if (*gen) {
      std::ifstream in(spec_path, std::ios::binary);
      if (!in) throw Failure{KMS_E_PARSE, "cannot open " + spec_path};
      std::stringstream buf;
      buf << in.rdbuf();
      Owned x, y;
      check(kms_generate(buf.str().c_str(), &x.p, &y.p));
      emit(prefix + "_x.csv", x.str());
      emit(prefix + "_y.csv", y.str());
    }
  } catch (const Failure& f) {
    return report(f);
  } catch (const std::exception& e) {
    return report(Failure{KMS_E_SOLVER, e.what()});
  }
  return 0;
}
