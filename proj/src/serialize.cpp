#include "serialize.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "io.hpp"

namespace kms::serialize {

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json kernel_json(const Kernel& k) {
  Json j;
  j["kind"] = to_string(k.kind);
  if (k.kind == KernelKind::gaussian) {
    j["bandwidth"] = k.bandwidth;
    j["convention"] = to_string(k.convention);
  }
  return j;
}

Json result_json(const KmsResult& r, bool with_timings) {
  const auto& d = r.diagnostics;
  Json j;
  j["distance"] = r.distance;
  j["value"] = r.value;
  j["sdr_value"] = r.sdr_value;
  j["upper_bound"] = r.upper_bound;
  j["rank"] = r.rank_after_reduction;
  j["n"] = d.n;
  j["d"] = d.d;
  j["kernel"] = kernel_json(r.projector.kernel);
  j["seed"] = r.seed;
  Json diag;
  diag["dim"] = d.dim;
  diag["range_restricted"] = d.range_restricted;
  diag["c_bound"] = d.c_bound;
  diag["delta"] = d.delta;
  diag["horizon"] = d.horizon;
  diag["theorem_horizon"] = d.theorem_horizon;
  diag["gamma"] = d.gamma;
  diag["exact_inner"] = d.exact_inner;
  diag["sdr_iterations"] = d.sdr_iterations;
  diag["early_stopped"] = d.early_stopped;
  diag["value_avg"] = d.value_avg;
  diag["value_last"] = d.value_last;
  diag["rank_before"] = d.rank_before;
  diag["rank_bound"] = d.k_bound;
  diag["reduction_iterations"] = d.reduction_iterations;
  diag["reduction_pivots"] = d.reduction_pivots;
  diag["tie_constraints"] = d.tie_constraints;
  diag["fallback_steps"] = d.fallback_steps;
  diag["reduction_value_before"] = d.reduction_value_before;
  diag["reduced_value"] = d.reduced_value;
  diag["candidate"] = d.candidate;
  j["diagnostics"] = diag;
  if (with_timings) {
    Json t;
    t["assemble"] = d.timings.assemble;
    t["sdr"] = d.timings.sdr;
    t["reduce"] = d.timings.reduce;
    t["extract"] = d.timings.extract;
    j["timings"] = t;
  }
  return j;
}

Json test_json(const TestResult& t) {
  Json j;
  j["mode"] = t.mode;
  j["statistic"] = t.statistic;
  j["threshold"] = t.threshold;
  j["reject"] = t.reject;
  j["p_value"] = t.p_value;
  j["alpha"] = t.alpha;
  j["n"] = t.n;
  j["n_train"] = t.n_train;
  j["n_test"] = t.n_test;
  j["kernel"] = kernel_json(t.kernel);
  j["seed"] = t.seed;
  j["fit_value"] = t.fit_value;
  j["permutation_stats"] = t.permutation_stats;
  return j;
}

Json sweep_json(const SweepResult& s, const SweepOptions& opts, const std::string& dataset) {
  Json j;
  j["dataset"] = dataset;
  j["p"] = opts.p;
  j["kernel"] = to_string(opts.kernel.kind);
  j["trials"] = opts.trials;
  j["seed"] = opts.seed;
  j["method"] = s.method;
  j["sizes"] = s.sizes;
  Json means = Json::array();
  for (double m : s.means) means.push_back(m);
  j["means"] = means;
  j["degenerate"] = s.degenerate;
  j["slope"] = number_or_null(s.slope);
  j["intercept"] = number_or_null(s.intercept);
  j["slope_stderr"] = number_or_null(s.slope_stderr);
  j["ci"] = Json::array({number_or_null(s.ci_low), number_or_null(s.ci_high)});
  j["expected_slope"] = s.expected_slope;
  return j;
}

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "n,trial,statistic\n";
  for (const auto& row : s.rows) out << row.n << ',' << row.trial << ',' << io::format_double(row.statistic) << '\n';
  return out.str();
}

std::string projector_csv(const Projector& p) {
  std::ostringstream out;
  out << "index,a_x,a_y\n";
  for (Eigen::Index i = 0; i < p.a_x.size(); ++i) {
    out << i << ',' << io::format_double(p.a_x(i)) << ',' << io::format_double(p.a_y(i)) << '\n';
  }
  return out.str();
}

std::string trace_csv(const KmsDiagnostics& d) {
  std::ostringstream out;
  out << "iteration,value,step_norm\n";
  for (const auto& e : d.trace_log) {
    out << e.iteration << ',' << io::format_double(e.value) << ',' << io::format_double(e.step_norm) << '\n';
  }
  return out.str();
}

Json dataset_spec_json(const DatasetSpec& spec) {
  Json j;
  j["kind"] = to_string(spec.kind);
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["seed"] = spec.seed;
  Json params = Json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  j["params"] = params;
  return j;
}

DatasetSpec dataset_spec_from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("dataset spec must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw UsageError("dataset spec needs a string \"kind\", one of " + dataset_kind_list());
  }
  DatasetSpec spec;
  spec.kind = parse_dataset_kind(j["kind"].get<std::string>());
  spec.d = default_dimension(spec.kind);
  auto integer = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw UsageError(std::string("dataset spec: \"") + key + "\" must be an integer");
    dst = j[key].get<std::remove_reference_t<decltype(dst)>>();
  };
  integer("n", spec.n);
  integer("d", spec.d);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw UsageError("dataset spec: \"seed\" must be a nonnegative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw UsageError("dataset spec: \"params\" must be an object");
    for (const auto& [k, v] : j["params"].items()) {
      if (!v.is_number()) throw UsageError("dataset spec: parameter \"" + k + "\" must be a number");
      spec.params[k] = v.get<double>();
    }
  }
  for (const auto& [k, v] : j.items()) {
    if (k != "kind" && k != "n" && k != "d" && k != "seed" && k != "params") {
      throw UsageError("dataset spec: unknown field \"" + k + "\"");
    }
  }
  spec.validate();
  return spec;
}

DatasetSpec dataset_spec_from_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset spec: ") + e.what());
  }
  return dataset_spec_from_json(j);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace kms::serialize
