#include "sdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "rng.hpp"

namespace kms {

namespace {

double log_dim(const GramAssembly& ga) { return std::log(2.0 * static_cast<double>(ga.n)); }

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Normalised exp of a symmetric log-matrix; also shifts L so that log trace = 0.
Eigen::MatrixXd exp_normalized(Eigen::MatrixXd& L) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
  if (eig.info() != Eigen::Success) throw SolverError("eigendecomposition failed in mirror step");
  const Eigen::VectorXd& mu = eig.eigenvalues();
  const double top = mu.maxCoeff();
  Eigen::VectorXd w = (mu.array() - top).exp();
  const double sum = w.sum();
  w /= sum;
  L.diagonal().array() -= top + std::log(sum);
  Eigen::MatrixXd S = eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
  symmetrize(S);
  return S;
}

// Largest eigenvalue of a PSD matrix by warm-started power iteration.
double top_eigenvalue(const Eigen::MatrixXd& v, Eigen::VectorXd& x) {
  if (x.size() != v.rows() || x.norm() == 0.0) x = Eigen::VectorXd::Ones(v.rows()).normalized();
  double est = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd y = v * x;
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    const double next = x.dot(y);
    x = y / nrm;
    if (std::abs(next - est) <= 1e-6 * next) return next;
    est = next;
  }
  return est;
}

}  // namespace

SolverConfig theorem_config(const GramAssembly& ga, double delta, std::uint64_t seed, Eigen::Index exact_threshold) {
  if (!(delta > 0.0)) throw UsageError("delta must be positive");
  SolverConfig cfg;
  const double C = ga.c_bound;
  const double lg = log_dim(ga);
  cfg.delta = delta;
  const double T = std::ceil(16.0 * C * C * lg / (delta * delta));
  cfg.T = T > 1e15 ? static_cast<long>(1e15) : std::max(1L, static_cast<long>(T));
  cfg.eps_inner = delta / 4.0;
  cfg.gamma = lg / (C * std::sqrt(static_cast<double>(cfg.T)));
  cfg.seed = seed;
  cfg.exact_inner = ga.n <= exact_threshold;
  return cfg;
}

SolverConfig with_iteration_cap(SolverConfig cfg, long cap) {
  if (cap <= 0 || cfg.T <= cap) return cfg;
  const double ratio = std::sqrt(static_cast<double>(cfg.T) / static_cast<double>(cap));
  cfg.T = cap;
  cfg.gamma *= ratio;
  return cfg;
}

Eigen::MatrixXd pair_costs(const Eigen::MatrixXd& S, const GramAssembly& ga) {
  const Eigen::MatrixXd SA = S * ga.A;
  const Eigen::MatrixXd SB = S * ga.B;
  const Eigen::VectorXd qa = (ga.A.array() * SA.array()).colwise().sum();
  const Eigen::VectorXd qb = (ga.B.array() * SB.array()).colwise().sum();
  Eigen::MatrixXd c = -2.0 * (ga.A.transpose() * SB);
  c.colwise() += qa;
  c.rowwise() += qb.transpose();
  return c;
}

ObjectiveValue objective(const Eigen::MatrixXd& S, const GramAssembly& ga, bool exact, double eps_inner,
                         std::uint64_t seed, double kappa) {
  const Eigen::MatrixXd c = pair_costs(S, ga);
  ObjectiveValue out;
  if (exact || ga.n == 1) {
    ExactSolution sol = solve_exact(c);
    out.value = sol.value;
    out.plan = std::move(sol.plan);
    out.assignment = std::move(sol.assignment);
    return out;
  }
  if (!(eps_inner > 0.0)) throw UsageError("inexact objective needs a positive inner accuracy");
  EntropicOptions opts;
  opts.seed = seed;
  opts.kappa = kappa;
  EntropicReport rep = solve_entropic(c, eps_inner, opts);
  out.value = rep.value;
  out.plan = std::move(rep.plan);
  return out;
}

double objective_exact(const Eigen::MatrixXd& S, const GramAssembly& ga) {
  double value = 0.0;
  solve_assignment(pair_costs(S, ga), &value);
  return value;
}

Eigen::MatrixXd supgradient_from_plan(const GramAssembly& ga, const Eigen::MatrixXd& pi) {
  const Eigen::VectorXd rows = pi.rowwise().sum();
  const Eigen::VectorXd cols = pi.colwise().sum().transpose();
  const Eigen::MatrixXd APB = ga.A * pi * ga.B.transpose();
  Eigen::MatrixXd v = ga.A * rows.asDiagonal() * ga.A.transpose() + ga.B * cols.asDiagonal() * ga.B.transpose();
  v -= APB + APB.transpose();
  symmetrize(v);
  return v;
}

Eigen::MatrixXd supgradient_from_assignment(const GramAssembly& ga, const std::vector<Eigen::Index>& sigma) {
  Eigen::MatrixXd D(ga.dim(), ga.n);
  for (Eigen::Index i = 0; i < ga.n; ++i) D.col(i) = ga.A.col(i) - ga.B.col(sigma[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd v = D * D.transpose() / static_cast<double>(ga.n);
  symmetrize(v);
  return v;
}

Eigen::MatrixXd supgradient(const Eigen::MatrixXd& S, const GramAssembly& ga, double eps_inner, std::uint64_t seed) {
  if (eps_inner < 0.0) throw UsageError("inner accuracy must be nonnegative");
  if (eps_inner == 0.0 || ga.n == 1) {
    const Assignment a = solve_assignment(pair_costs(S, ga), nullptr);
    return supgradient_from_assignment(ga, a.sigma);
  }
  const ObjectiveValue ov = objective(S, ga, false, eps_inner, seed);
  return supgradient_from_plan(ga, ov.plan.pi);
}

SpectrahedronPoint mirror_step(const SpectrahedronPoint& S, const Eigen::MatrixXd& v, double gamma) {
  if (S.S.rows() != S.S.cols() || v.rows() != S.S.rows() || v.cols() != S.S.cols()) {
    throw UsageError("mirror_step: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S.S + S.S.transpose()));
  if (eig.info() != Eigen::Success) throw SolverError("eigendecomposition failed in mirror step");
  const Eigen::VectorXd logs = eig.eigenvalues().cwiseMax(1e-300).array().log();
  Eigen::MatrixXd L = eig.eigenvectors() * logs.asDiagonal() * eig.eigenvectors().transpose();
  L += gamma * v;
  symmetrize(L);
  return SpectrahedronPoint{exp_normalized(L)};
}

SdrSolution solve_sdr(const GramAssembly& ga, const SolverConfig& cfg) {
  if (cfg.T < 1 || !(cfg.gamma > 0.0)) throw UsageError("solver config needs T >= 1 and gamma > 0");
  if (!cfg.exact_inner && !(cfg.eps_inner > 0.0)) throw UsageError("inexact inner solver needs eps_inner > 0");
  const Eigen::Index r = ga.dim();
  SdrSolution sol;

  if (r == 1) {
    // The spectrahedron is a single point.
    sol.S_avg.S = Eigen::MatrixXd::Ones(1, 1);
    sol.S_last = sol.S_avg;
    sol.value = objective_exact(sol.S_avg.S, ga);
    sol.upper_bound = sol.value;
    return sol;
  }

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(r, r) / static_cast<double>(r);
  Eigen::MatrixXd S_avg = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd v_avg = Eigen::MatrixXd::Zero(r, r);

  const long check_every = std::max(1L, (cfg.T + 99) / 100);
  Eigen::MatrixXd v;
  Eigen::VectorXd power;
  double g_max = 0.0;
  for (long k = 1; k <= cfg.T; ++k) {
    const Eigen::MatrixXd c = pair_costs(S, ga);
    double value = 0.0;
    if (cfg.exact_inner) {
      const Assignment a = solve_assignment(c, &value);
      v = supgradient_from_assignment(ga, a.sigma);
    } else {
      EntropicOptions opts;
      opts.seed = derive_seed(cfg.seed, "sdr.inner", static_cast<std::uint64_t>(k));
      opts.kappa = cfg.kappa;
      const EntropicReport rep = solve_entropic(c, cfg.eps_inner, opts);
      value = rep.value;
      v = supgradient_from_plan(ga, rep.plan.pi);
    }
    const double w = 1.0 / static_cast<double>(k);
    S_avg += w * (S - S_avg);
    v_avg += w * (v - v_avg);

    double gamma = cfg.gamma;
    if (cfg.step_rule == StepRule::adaptive) {
      g_max = std::max(g_max, top_eigenvalue(v, power));
      if (g_max > 0.0) gamma = cfg.gamma * std::max(1.0, ga.c_bound / g_max);
    }
    L += gamma * v;
    symmetrize(L);
    Eigen::MatrixXd next = exp_normalized(L);
    sol.trace_log.push_back({k, value, (next - S).norm()});
    S = std::move(next);
    sol.iterations = k;

    if (cfg.early_stop && k % check_every == 0 && k < cfg.T) {
      // Certified gap: lambda_max(v_avg) bounds the optimum from above.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> top(0.5 * (v_avg + v_avg.transpose()), Eigen::EigenvaluesOnly);
      if (top.eigenvalues()(r - 1) - objective_exact(S_avg, ga) <= cfg.delta) {
        sol.early_stopped = true;
        break;
      }
    }
  }

  sol.S_last.S = S;
  symmetrize(S_avg);
  S_avg /= S_avg.trace();
  sol.S_avg.S = std::move(S_avg);
  sol.value = objective_exact(sol.S_avg.S, ga);
  symmetrize(v_avg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> top(v_avg, Eigen::EigenvaluesOnly);
  sol.upper_bound = top.eigenvalues()(r - 1);
  return sol;
}

}  // namespace kms
