#include "kms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "errors.hpp"
#include "log.hpp"
#include "rng.hpp"

namespace kms {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd top_eigenvector(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
  Eigen::VectorXd w = eig.eigenvectors().col(S.rows() - 1);
  // Fix the sign so results do not depend on the eigensolver's choice.
  Eigen::Index at = 0;
  w.cwiseAbs().maxCoeff(&at);
  if (w(at) < 0.0) w = -w;
  return w;
}

struct Candidate {
  Eigen::VectorXd omega;
  double value = -1.0;
  std::string name;
};

void consider(Candidate& best, const GramAssembly& ga, Eigen::VectorXd omega, const std::string& name) {
  const double nrm = omega.norm();
  if (!(nrm > 0.0)) return;
  omega /= nrm;
  const double v = rank_one_value(ga, omega);
  if (v > best.value) best = Candidate{std::move(omega), v, name};
}

}  // namespace

double Projector::operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != anchors_x.d()) throw UsageError("projector: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < anchors_x.n(); ++i) total += a_x(i) * eval_kernel(kernel, z, anchors_x.points.row(i).transpose());
  for (Eigen::Index i = 0; i < anchors_y.n(); ++i) total -= a_y(i) * eval_kernel(kernel, z, anchors_y.points.row(i).transpose());
  return total;
}

Eigen::VectorXd Projector::apply(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != anchors_x.d()) throw UsageError("projector: dimension mismatch");
  return cross_kernel(kernel, Z, anchors_x.points) * a_x - cross_kernel(kernel, Z, anchors_y.points) * a_y;
}

double Projector::rkhs_norm2() const {
  const Eigen::MatrixXd Kxx = cross_kernel(kernel, anchors_x.points, anchors_x.points);
  const Eigen::MatrixXd Kxy = cross_kernel(kernel, anchors_x.points, anchors_y.points);
  const Eigen::MatrixXd Kyy = cross_kernel(kernel, anchors_y.points, anchors_y.points);
  return a_x.dot(Kxx * a_x) - 2.0 * a_x.dot(Kxy * a_y) + a_y.dot(Kyy * a_y);
}

double evaluate_projector(const Projector& p, const Eigen::Ref<const Eigen::VectorXd>& z) { return p(z); }

double projected_wasserstein_p(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double p) {
  if (u.size() == 0 || v.size() == 0) throw UsageError("projected_wasserstein_p: empty sample");
  if (u.size() != v.size()) throw UsageError("projected_wasserstein_p: samples must have equal size");
  if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("projected_wasserstein_p: p must be >= 1");
  Eigen::VectorXd a = u, b = v;
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double gap = std::abs(a(i) - b(i));
    total += p == 1.0 ? gap : p == 2.0 ? gap * gap : std::pow(gap, p);
  }
  total /= static_cast<double>(a.size());
  return p == 1.0 ? total : p == 2.0 ? std::sqrt(total) : std::pow(total, 1.0 / p);
}

double rank_one_value(const GramAssembly& ga, const Eigen::VectorXd& omega) {
  const Eigen::VectorXd pa = ga.A.transpose() * omega;
  const Eigen::VectorXd pb = ga.B.transpose() * omega;
  Eigen::MatrixXd c(ga.n, ga.n);
  for (Eigen::Index j = 0; j < ga.n; ++j) c.col(j) = (pa.array() - pb(j)).square().matrix();
  double value = 0.0;
  solve_assignment(c, &value);
  return value;
}

Relaxation relax(const GramAssembly& ga, const KmsOptions& opts) {
  if (!(opts.relative_delta > 0.0)) throw UsageError("relative delta must be positive");
  Relaxation out;
  auto t0 = Clock::now();
  const SolverConfig base = theorem_config(ga, opts.relative_delta * ga.c_bound, opts.seed, opts.exact_threshold);
  out.theorem_horizon = base.T;
  out.config = with_iteration_cap(base, opts.max_iterations);
  out.config.kappa = opts.kappa;
  out.config.early_stop = opts.early_stop;
  out.config.step_rule = opts.step_rule;
  out.sdr = solve_sdr(ga, out.config);
  out.value_last = objective_exact(out.sdr.S_last.S, ga);
  out.sdr_seconds = seconds_since(t0);

  // Reduce whichever iterate scores higher; both are feasible for the relaxation.
  t0 = Clock::now();
  out.reduced_last = out.value_last > out.sdr.value;
  ReductionOptions ropts;
  ropts.seed = derive_seed(opts.seed, "rankred");
  ropts.level_pivots = opts.level_pivots;
  out.reduced = reduce(out.reduced_last ? out.sdr.S_last : out.sdr.S_avg, ga, ropts);
  out.reduce_seconds = seconds_since(t0);
  return out;
}

KmsResult kms2_assembled(const GramAssembly& ga, const KmsOptions& opts) {
  KmsResult res;
  res.seed = opts.seed;
  KmsDiagnostics& diag = res.diagnostics;
  diag.n = ga.n;
  diag.dim = ga.dim();
  diag.range_restricted = ga.range_restricted;
  diag.c_bound = ga.c_bound;

  Relaxation rel = relax(ga, opts);
  const SdrSolution& sol = rel.sdr;
  const ReducedSolution& red = rel.reduced;
  diag.theorem_horizon = rel.theorem_horizon;
  diag.delta = rel.config.delta;
  diag.horizon = rel.config.T;
  diag.gamma = rel.config.gamma;
  diag.exact_inner = rel.config.exact_inner;
  diag.sdr_iterations = sol.iterations;
  diag.early_stopped = sol.early_stopped;
  diag.value_avg = sol.value;
  diag.value_last = rel.value_last;
  diag.trace_log = std::move(rel.sdr.trace_log);
  res.upper_bound = sol.upper_bound;
  diag.timings.sdr = rel.sdr_seconds;
  diag.timings.reduce = rel.reduce_seconds;
  diag.rank_before = red.rank_before;
  diag.k_bound = red.k_bound;
  diag.reduction_iterations = red.iterations;
  diag.reduction_pivots = red.pivots;
  diag.tie_constraints = red.tie_constraints;
  diag.fallback_steps = red.fallback_steps;
  diag.reduction_value_before = red.value_before;
  diag.reduced_value = red.value_after;
  diag.eigen_history = red.eigen_history;
  res.rank_after_reduction = red.rank;

  const auto t0 = Clock::now();
  Candidate best;
  consider(best, ga, top_eigenvector(red.S.S), "reduced");
  consider(best, ga, top_eigenvector(sol.S_avg.S), "average");
  consider(best, ga, top_eigenvector(sol.S_last.S), "last");
  {
    // Remaining eigenvectors of the reduced point: at most k of them carry mass.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(red.S.S);
    const Eigen::Index r = eig.eigenvalues().size();
    for (Eigen::Index i = r - 2; i >= 0 && i >= r - red.rank; --i) {
      consider(best, ga, eig.eigenvectors().col(i), "reduced");
    }
  }
  // Fixed-point refinement: omega <- top eigenvector of v(omega omega^T).
  Eigen::VectorXd omega = best.omega;
  for (int it = 0; it < opts.polish_iterations && ga.dim() > 1; ++it) {
    const Eigen::MatrixXd v = supgradient(omega * omega.transpose(), ga, 0.0);
    const Eigen::VectorXd next = top_eigenvector(v);
    const double value = rank_one_value(ga, next);
    if (!(value > best.value * (1.0 + 1e-12))) break;
    best = Candidate{next, value, best.name + "+polish"};
    omega = next;
  }
  diag.candidate = best.name;
  res.omega = best.omega;
  res.value = best.value;
  res.distance = std::sqrt(std::max(0.0, best.value));
  // omega omega^T is itself feasible for the relaxation, so it also counts
  // when the capped solver stops short of the optimum.
  res.sdr_value = std::max({sol.value, diag.value_last, red.value_after, res.value});

  const Eigen::VectorXd s = ga.U * res.omega;
  res.projector.a_x = s.head(ga.n);
  res.projector.a_y = s.tail(ga.n);
  diag.timings.extract = seconds_since(t0);
  return res;
}

KmsResult kms2(const PointCloud& x, const PointCloud& y, const Kernel& k, const KmsOptions& opts) {
  const auto t0 = Clock::now();
  const GramAssembly ga = assemble(k, x, y);
  const double t_assemble = seconds_since(t0);
  KmsResult res = kms2_assembled(ga, opts);
  res.kernel_kind = k.kind;
  res.diagnostics.d = x.d();
  res.diagnostics.timings.assemble = t_assemble;
  res.projector.kernel = k;
  res.projector.anchors_x = x;
  res.projector.anchors_y = y;
  if (log::enabled(log::Level::info)) {
    log::info("kms2 n=" + std::to_string(x.n()) + " value=" + std::to_string(res.value) +
              " sdr=" + std::to_string(res.sdr_value) + " rank=" + std::to_string(res.rank_after_reduction));
  }
  return res;
}

KmsResult ms2(const PointCloud& x, const PointCloud& y, const KmsOptions& opts) {
  return kms2(x, y, Kernel{KernelKind::dot_product, 1.0, BandwidthConvention::half}, opts);
}

}  // namespace kms
