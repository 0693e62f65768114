#include "kms/kms.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "datagen.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "kms.hpp"
#include "rankred.hpp"
#include "serialize.hpp"
#include "stats.hpp"

struct kms_cloud {
  kms::PointCloud cloud;
};

struct kms_result {
  kms::KmsResult result;
};

namespace {

thread_local std::string last_error;

template <class F>
kms_status guarded(F&& body) {
  try {
    body();
    return KMS_OK;
  } catch (const kms::UsageError& e) {
    last_error = e.what();
    return KMS_E_USAGE;
  } catch (const kms::ParseError& e) {
    last_error = e.what();
    return KMS_E_PARSE;
  } catch (const kms::NumericalError& e) {
    last_error = e.what();
    return KMS_E_NUMERICAL;
  } catch (const kms::SolverError& e) {
    last_error = e.what();
    return KMS_E_SOLVER;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return KMS_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return KMS_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return KMS_E_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw kms::UsageError(std::string(what) + " must not be null");
}

kms::KernelSpec kernel_spec(const kms_solver_options& o) {
  kms::KernelSpec k;
  k.kind = kms::parse_kernel_kind(o.kernel ? o.kernel : "gaussian");
  k.convention = kms::parse_convention(o.convention ? o.convention : "half");
  if (o.bandwidth > 0.0) k.bandwidth = o.bandwidth;
  return k;
}

kms::KmsOptions kms_options(double relative_delta, long max_iterations, std::uint64_t seed) {
  kms::KmsOptions k;
  k.relative_delta = relative_delta;
  if (max_iterations < 0) throw kms::UsageError("max iterations must be nonnegative");
  k.max_iterations = max_iterations;
  k.seed = seed;
  return k;
}

std::vector<Eigen::Index> index_list(const size_t* values, size_t count, const char* what) {
  if (count > 0) require(values, what);
  std::vector<Eigen::Index> out;
  for (size_t i = 0; i < count; ++i) out.push_back(static_cast<Eigen::Index>(values[i]));
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream out;
  kms::io::write_csv(out, m);
  return out.str();
}

}  // namespace

extern "C" {

const char* kms_version(void) { return "1.0.0"; }

const char* kms_last_error(void) { return last_error.c_str(); }

void kms_string_free(char* s) { std::free(s); }

kms_status kms_cloud_load(const char* path, kms_cloud** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto c = std::make_unique<kms_cloud>();
    c->cloud = kms::io::load_cloud(path);
    *out = c.release();
  });
}

kms_status kms_cloud_from_rows(const double* data, size_t rows, size_t cols, kms_cloud** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (rows == 0 || cols == 0) throw kms::UsageError("cloud must have at least one row and one column");
    require(data, "data");
    auto c = std::make_unique<kms_cloud>();
    c->cloud.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    kms::validate(c->cloud, "cloud");
    *out = c.release();
  });
}

size_t kms_cloud_rows(const kms_cloud* c) { return c ? static_cast<size_t>(c->cloud.n()) : 0; }
size_t kms_cloud_cols(const kms_cloud* c) { return c ? static_cast<size_t>(c->cloud.d()) : 0; }
void kms_cloud_free(kms_cloud* c) { delete c; }

void kms_solver_options_init(kms_solver_options* o) {
  if (!o) return;
  const kms::KmsOptions d;
  o->kernel = "gaussian";
  o->bandwidth = 0.0;
  o->convention = "half";
  o->relative_delta = d.relative_delta;
  o->max_iterations = d.max_iterations;
  o->seed = 0;
}

kms_status kms_distance(const kms_cloud* x, const kms_cloud* y, const kms_solver_options* o, kms_result** out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(o, "options");
    require(out, "out");
    *out = nullptr;
    kms::validate_pair(x->cloud, y->cloud);
    const kms::Kernel k = kernel_spec(*o).resolve(x->cloud, y->cloud);
    auto r = std::make_unique<kms_result>();
    r->result = kms::kms2(x->cloud, y->cloud, k, kms_options(o->relative_delta, o->max_iterations, o->seed));
    *out = r.release();
  });
}

double kms_result_distance(const kms_result* r) { return r ? r->result.distance : 0.0; }
double kms_result_value(const kms_result* r) { return r ? r->result.value : 0.0; }
double kms_result_sdr_value(const kms_result* r) { return r ? r->result.sdr_value : 0.0; }
size_t kms_result_rank(const kms_result* r) { return r ? static_cast<size_t>(r->result.rank_after_reduction) : 0; }

kms_status kms_result_json(const kms_result* r, int with_timings, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    *out = copy_string(kms::serialize::dump(kms::serialize::result_json(r->result, with_timings != 0)));
  });
}

kms_status kms_result_projector_csv(const kms_result* r, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    *out = copy_string(kms::serialize::projector_csv(r->result.projector));
  });
}

kms_status kms_result_trace_csv(const kms_result* r, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    *out = copy_string(kms::serialize::trace_csv(r->result.diagnostics));
  });
}

kms_status kms_result_project(const kms_result* r, const kms_cloud* z, double* values) {
  return guarded([&] {
    require(r, "result");
    require(z, "z");
    require(values, "values");
    const Eigen::VectorXd f = r->result.projector.apply(z->cloud.points);
    std::copy(f.data(), f.data() + f.size(), values);
  });
}

void kms_result_free(kms_result* r) { delete r; }

void kms_test_options_init(kms_test_options* o) {
  if (!o) return;
  kms_solver_options_init(&o->solver);
  o->alpha = 0.05;
  o->permutations = 500;
  o->mode = "bootstrap";
  o->p = 2.0;
  o->c_univ = 1.0;
}

kms_status kms_test(const kms_cloud* x, const kms_cloud* y, const kms_test_options* o, char** json_out) {
  return guarded([&] {
    require(x, "x");
    require(y, "y");
    require(o, "options");
    require(json_out, "json_out");
    *json_out = nullptr;
    if (!(o->alpha > 0.0 && o->alpha < 1.0)) throw kms::UsageError("alpha must lie in (0, 1)");
    const std::string mode = o->mode ? o->mode : "bootstrap";
    const kms::KernelSpec ks = kernel_spec(o->solver);
    const kms::KmsOptions solver = kms_options(o->solver.relative_delta, o->solver.max_iterations, o->solver.seed);
    kms::TestResult t;
    if (mode == "bootstrap") {
      kms::PermutationTestOptions po;
      po.alpha = o->alpha;
      po.permutations = o->permutations;
      po.seed = o->solver.seed;
      po.solver = solver;
      t = kms::two_sample_test(x->cloud, y->cloud, ks, po);
    } else if (mode == "theorem") {
      kms::CriticalValueParams cv;
      cv.alpha = o->alpha;
      cv.p = o->p;
      cv.C_univ = o->c_univ;
      t = kms::theorem_test(x->cloud, y->cloud, ks, cv, solver);
    } else {
      throw kms::UsageError("unknown test mode '" + mode + "' (expected bootstrap|theorem)");
    }
    *json_out = copy_string(kms::serialize::dump(kms::serialize::test_json(t)));
  });
}

void kms_rankcheck_options_init(kms_rankcheck_options* o) {
  if (!o) return;
  const kms::KmsOptions d;
  o->n_list = nullptr;
  o->n_count = 0;
  o->dataset = "gauss_cov_shift";
  o->trials = 1;
  o->seed = 0;
  o->threads = 1;
  o->relative_delta = d.relative_delta;
  o->max_iterations = d.max_iterations;
}

kms_status kms_rankcheck(const kms_rankcheck_options* o, char** csv_out) {
  return guarded([&] {
    require(o, "options");
    require(csv_out, "csv_out");
    *csv_out = nullptr;
    kms::RankCheckOptions ro;
    ro.sizes = index_list(o->n_list, o->n_count, "n_list");
    ro.dataset = kms::parse_dataset_kind(o->dataset ? o->dataset : "gauss_cov_shift");
    ro.trials = o->trials;
    ro.seed = o->seed;
    ro.threads = o->threads;
    ro.solver = kms_options(o->relative_delta, o->max_iterations, o->seed);
    const auto rows = kms::rank_check(ro);
    std::ostringstream out;
    out << "n,trial,before,after,bound\n";
    for (const auto& r : rows) out << r.n << ',' << r.trial << ',' << r.before << ',' << r.after << ',' << r.bound << '\n';
    *csv_out = copy_string(out.str());
  });
}

void kms_sweep_options_init(kms_sweep_options* o) {
  if (!o) return;
  const kms::KmsOptions d;
  o->dataset = "two_point_1d";
  o->sizes = nullptr;
  o->size_count = 0;
  o->trials = 20;
  o->p = 2.0;
  o->kernel = "dot_product";
  o->seed = 0;
  o->threads = 1;
  o->relative_delta = d.relative_delta;
  o->max_iterations = d.max_iterations;
}

kms_status kms_sweep(const kms_sweep_options* o, char** csv_out, char** json_out) {
  return guarded([&] {
    require(o, "options");
    require(csv_out, "csv_out");
    require(json_out, "json_out");
    *csv_out = nullptr;
    *json_out = nullptr;
    kms::DatasetSpec base;
    base.kind = kms::parse_dataset_kind(o->dataset ? o->dataset : "two_point_1d");
    base.d = kms::default_dimension(base.kind);
    kms::SweepOptions so;
    so.kernel.kind = kms::parse_kernel_kind(o->kernel ? o->kernel : "dot_product");
    so.p = o->p;
    so.sizes = index_list(o->sizes, o->size_count, "sizes");
    so.trials = o->trials;
    so.seed = o->seed;
    so.threads = o->threads;
    so.solver = kms_options(o->relative_delta, o->max_iterations, o->seed);
    const kms::SweepResult s = kms::rate_sweep(base, so);
    std::string csv = kms::serialize::sweep_csv(s);
    std::string json = kms::serialize::dump(kms::serialize::sweep_json(s, so, kms::to_string(base.kind)));
    *csv_out = copy_string(csv);
    try {
      *json_out = copy_string(json);
    } catch (...) {
      std::free(*csv_out);
      *csv_out = nullptr;
      throw;
    }
  });
}

kms_status kms_generate(const char* spec_json, char** x_csv, char** y_csv) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(x_csv, "x_csv");
    require(y_csv, "y_csv");
    *x_csv = nullptr;
    *y_csv = nullptr;
    const kms::DatasetSpec spec = kms::serialize::dataset_spec_from_text(spec_json);
    const auto [x, y] = kms::generate(spec);
    std::string xs = matrix_csv(x.points), ys = matrix_csv(y.points);
    *x_csv = copy_string(xs);
    try {
      *y_csv = copy_string(ys);
    } catch (...) {
      std::free(*x_csv);
      *x_csv = nullptr;
      throw;
    }
  });
}

size_t kms_rank_bound(size_t n) { return n == 0 ? 0 : static_cast<size_t>(kms::rank_bound(static_cast<Eigen::Index>(n))); }

}  // extern "C"
