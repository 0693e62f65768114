#include "ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "rng.hpp"

namespace kms {

namespace {

void check_costs(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() < 1) throw UsageError("cost matrix must be square and non-empty");
  if (!c.allFinite()) throw NumericalError("cost matrix has non-finite entries");
}

// Stable row softmax of (v - c_i) / eta, written into out.
void row_softmax(const Eigen::VectorXd& v, const Eigen::MatrixXd& c, Eigen::Index i, double eta,
                 Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index n = v.size();
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j) = (v(j) - c(i, j)) / eta;
    top = std::max(top, out(j));
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j) = std::exp(out(j) - top);
    sum += out(j);
  }
  out /= sum;
}

double dual_lower_bound(const Eigen::VectorXd& v, const Eigen::MatrixXd& c) {
  const double n = static_cast<double>(c.rows());
  double lb = v.sum() / n;
  for (Eigen::Index i = 0; i < c.rows(); ++i) lb += (c.row(i) - v.transpose()).minCoeff() / n;
  return lb;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& c, double* value) {
  check_costs(c);
  const Eigen::Index n = c.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j, p[0] the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = p[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment a;
  a.sigma.assign(static_cast<std::size_t>(n), 0);
  a.dual_f.resize(n);
  a.dual_g.resize(n);
  for (Eigen::Index j = 1; j <= n; ++j) a.sigma[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    a.dual_f(i) = u[i + 1];
    a.dual_g(i) = v[i + 1];
  }
  if (value) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += c(i, a.sigma[static_cast<std::size_t>(i)]);
    *value = total / static_cast<double>(n);
  }
  return a;
}

ExactSolution solve_exact(const Eigen::MatrixXd& c) {
  ExactSolution out;
  out.assignment = solve_assignment(c, &out.value);
  const Eigen::Index n = c.rows();
  out.plan.pi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) out.plan.pi(i, out.assignment.sigma[static_cast<std::size_t>(i)]) = 1.0 / n;
  return out;
}

Eigen::MatrixXd dual_to_plan(const Eigen::VectorXd& v, const Eigen::MatrixXd& c, double eta) {
  if (!(eta > 0.0)) throw UsageError("dual_to_plan: eta must be positive");
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd pi(n, n);
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    row_softmax(v, c, i, eta, row);
    pi.row(i) = row.transpose() / static_cast<double>(n);
  }
  return pi;
}

TransportPlan round_to_polytope(const Eigen::MatrixXd& pi) {
  if (pi.rows() != pi.cols() || pi.rows() < 1) throw UsageError("round_to_polytope: plan must be square");
  if ((pi.array() < 0.0).any() || !pi.allFinite()) throw UsageError("round_to_polytope: plan must be nonnegative");
  const Eigen::Index n = pi.rows();
  const double target = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd out = pi;
  const Eigen::VectorXd r = out.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i) > target) out.row(i) *= target / r(i);
  }
  const Eigen::VectorXd col = out.colwise().sum();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (col(j) > target) out.col(j) *= target / col(j);
  }
  const Eigen::VectorXd er = Eigen::VectorXd::Constant(n, target) - out.rowwise().sum();
  const Eigen::VectorXd ec = Eigen::VectorXd::Constant(n, target) - out.colwise().sum().transpose();
  const double mass = er.lpNorm<1>();
  if (mass > 0.0) out.noalias() += er * ec.transpose() / mass;
  return TransportPlan{out};
}

double plan_cost(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& c) { return (pi.array() * c.array()).sum(); }

double marginal_error(const Eigen::MatrixXd& pi) {
  const double target = 1.0 / static_cast<double>(pi.rows());
  const double rows = (pi.rowwise().sum().array() - target).abs().maxCoeff();
  const double cols = (pi.colwise().sum().array() - target).abs().maxCoeff();
  return std::max(rows, cols);
}

EntropicReport solve_entropic(const Eigen::MatrixXd& c, double eps, const EntropicOptions& opts) {
  check_costs(c);
  if (!(eps > 0.0)) throw UsageError("solve_entropic: accuracy must be positive");
  const Eigen::Index n = c.rows();
  EntropicReport rep;
  if (n == 1) {
    rep.plan.pi = Eigen::MatrixXd::Constant(1, 1, 1.0);
    rep.value = c(0, 0);
    return rep;
  }
  const double dn = static_cast<double>(n);
  const double cmax = c.maxCoeff();
  rep.eta = eps / (8.0 * std::log(dn));
  rep.eps_prime = cmax > 0.0 ? eps / (6.0 * cmax) : 0.0;
  const double cinf = c.cwiseAbs().maxCoeff();
  rep.outer_limit = std::max(1, static_cast<int>(std::ceil(opts.kappa * cinf * std::sqrt(std::log(dn)) / eps)));
  const double eta = rep.eta;
  const Eigen::Index inner = n;

  Rng rng(derive_seed(opts.seed, "ot.entropic"));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n), z = y, lam_tilde = y, lam = y;
  Eigen::VectorXd u(n), H(n), g_new(n), g_old(n), row(n), y_sum(n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  double C = 0.0;
  std::vector<Eigen::VectorXd> lambdas(static_cast<std::size_t>(inner));

  TransportPlan best;
  double best_value = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();

  for (int t = 0; t < rep.outer_limit; ++t) {
    const double tau = 2.0 / (t + 4.0);
    const double gamma = eta / (9.0 * tau);
    // Full gradient of the averaged semi-dual at the snapshot.
    u.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      row_softmax(lam_tilde, c, i, eta, row);
      u += row;
    }
    u = u / dn - Eigen::VectorXd::Constant(n, 1.0 / dn);

    y_sum.setZero();
    for (Eigen::Index j = 0; j < inner; ++j) {
      lam = tau * z + 0.5 * lam_tilde + (0.5 - tau) * y;
      const Eigen::Index i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      row_softmax(lam, c, i, eta, g_new);
      row_softmax(lam_tilde, c, i, eta, g_old);
      H = u + (g_new - g_old);  // the -1/n terms cancel
      z -= gamma * H / 2.0;
      y = lam - eta * H / 9.0;
      y_sum += y;
      lambdas[static_cast<std::size_t>(j)] = lam;
    }
    lam_tilde = y_sum / static_cast<double>(inner);
    const auto& lam_hat = lambdas[rng.index(static_cast<std::size_t>(inner))];
    D += dual_to_plan(lam_hat, c, eta) / tau;
    C += 1.0 / tau;
    rep.outer_iterations = t + 1;

    if (!opts.early_exit && t + 1 < rep.outer_limit) continue;
    TransportPlan rounded = round_to_polytope(D / C);
    const double value = plan_cost(rounded.pi, c);
    const double gap = value - dual_lower_bound(lam_tilde, c);
    best = std::move(rounded);
    best_value = value;
    best_gap = gap;
    if (opts.early_exit && gap <= 0.5 * eps) break;
  }
  rep.plan = std::move(best);
  rep.value = best_value;
  rep.certified_gap = best_gap;
  return rep;
}

}  // namespace kms
