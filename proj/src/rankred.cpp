#include "rankred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "errors.hpp"
#include "rng.hpp"

namespace kms {

namespace {

using Pairs = std::vector<std::pair<Eigen::Index, Eigen::Index>>;

// m^T X m for every difference a_i - b_j, given the columns in some basis.
Eigen::MatrixXd quad_costs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd XA = X * A;
  const Eigen::MatrixXd XB = X * B;
  const Eigen::VectorXd qa = (A.array() * XA.array()).colwise().sum();
  const Eigen::VectorXd qb = (B.array() * XB.array()).colwise().sum();
  Eigen::MatrixXd c = -2.0 * (A.transpose() * XB);
  c.colwise() += qa;
  c.rowwise() += qb.transpose();
  return c;
}

// Constraint <F F^T, X> = 0 for each factor block F = cols [start, start + len) of `cols`.
struct Constraints {
  Eigen::MatrixXd cols;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
};

Eigen::VectorXd block_values(const Constraints& c, const Eigen::MatrixXd& X) {
  // tr(F^T X F) per block.
  const Eigen::VectorXd per_col = (c.cols.array() * (X * c.cols).array()).colwise().sum();
  Eigen::VectorXd out(static_cast<Eigen::Index>(c.blocks.size()));
  for (std::size_t b = 0; b < c.blocks.size(); ++b) {
    out(static_cast<Eigen::Index>(b)) = per_col.segment(c.blocks[b].first, c.blocks[b].second).sum();
  }
  return out;
}

// Orthogonal projection onto {X : tr X = 0, <F F^T, X> = 0 for all blocks}
// through the normalised Gram system.
class GramProjector {
 public:
  GramProjector(const Constraints& c, Eigen::Index r) : c_(c), r_(r) {
    const Eigen::Index m = static_cast<Eigen::Index>(c.blocks.size());
    const Eigen::MatrixXd P = c.cols.transpose() * c.cols;
    Eigen::MatrixXd raw(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto [sa, la] = c.blocks[static_cast<std::size_t>(a)];
      for (Eigen::Index b = a; b < m; ++b) {
        const auto [sb, lb] = c.blocks[static_cast<std::size_t>(b)];
        raw(a, b) = raw(b, a) = P.block(sa, sb, la, lb).squaredNorm();
      }
    }
    scale_.resize(m + 1);
    scale_(0) = 1.0 / std::sqrt(static_cast<double>(r));
    for (Eigen::Index a = 0; a < m; ++a) scale_(a + 1) = raw(a, a) > 0.0 ? 1.0 / std::sqrt(raw(a, a)) : 0.0;
    Eigen::MatrixXd K(m + 1, m + 1);
    K(0, 0) = 1.0;
    for (Eigen::Index a = 0; a < m; ++a) {
      const auto [sa, la] = c.blocks[static_cast<std::size_t>(a)];
      K(0, a + 1) = K(a + 1, 0) = scale_(0) * scale_(a + 1) * c.cols.middleCols(sa, la).squaredNorm();
      for (Eigen::Index b = 0; b < m; ++b) K(a + 1, b + 1) = scale_(a + 1) * scale_(b + 1) * raw(a, b);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const double cut = 1e-12 * mu.maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      if (mu(i) > cut) inv(i) = 1.0 / mu(i);
    }
    kinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  }

  // Normalised constraint values <H_a, X>.
  Eigen::VectorXd residual(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd b(scale_.size());
    b(0) = scale_(0) * X.trace();
    b.tail(scale_.size() - 1) = scale_.tail(scale_.size() - 1).cwiseProduct(block_values(c_, X));
    return b;
  }

  Eigen::MatrixXd project(const Eigen::MatrixXd& Z) const {
    Eigen::MatrixXd X = Z;
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd y = kinv_ * residual(X);
      X.diagonal().array() -= y(0) * scale_(0);
      Eigen::VectorXd w(c_.cols.cols());
      for (std::size_t b = 0; b < c_.blocks.size(); ++b) {
        const auto a = static_cast<Eigen::Index>(b) + 1;
        w.segment(c_.blocks[b].first, c_.blocks[b].second).setConstant(y(a) * scale_(a));
      }
      X.noalias() -= c_.cols * w.asDiagonal() * c_.cols.transpose();
      X = 0.5 * (X + X.transpose()).eval();
    }
    return X;
  }

 private:
  const Constraints& c_;
  Eigen::Index r_;
  Eigen::VectorXd scale_;
  Eigen::MatrixXd kinv_;
};

// Same projection with each constraint held as the r x r matrix F F^T.
// Cheaper when blocks are wide (whole assignments) and r is small.
class ExplicitProjector {
 public:
  ExplicitProjector(const Constraints& c, Eigen::Index r) {
    const Eigen::Index m = static_cast<Eigen::Index>(c.blocks.size());
    H_.push_back(Eigen::MatrixXd::Identity(r, r) / std::sqrt(static_cast<double>(r)));
    for (const auto& [start, len] : c.blocks) {
      const auto F = c.cols.middleCols(start, len);
      Eigen::MatrixXd H = F * F.transpose();
      const double nrm = H.norm();
      if (nrm > 0.0) H /= nrm;
      H_.push_back(std::move(H));
    }
    Eigen::MatrixXd K(m + 1, m + 1);
    for (Eigen::Index a = 0; a <= m; ++a) {
      for (Eigen::Index b = a; b <= m; ++b) {
        K(a, b) = K(b, a) = (H_[static_cast<std::size_t>(a)].array() * H_[static_cast<std::size_t>(b)].array()).sum();
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const double cut = 1e-12 * mu.maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      if (mu(i) > cut) inv(i) = 1.0 / mu(i);
    }
    kinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  }

  Eigen::MatrixXd project(const Eigen::MatrixXd& Z) const {
    Eigen::MatrixXd X = Z;
    const Eigen::Index m = static_cast<Eigen::Index>(H_.size());
    for (int pass = 0; pass < 3; ++pass) {
      Eigen::VectorXd b(m);
      for (Eigen::Index a = 0; a < m; ++a) b(a) = (H_[static_cast<std::size_t>(a)].array() * X.array()).sum();
      const Eigen::VectorXd y = kinv_ * b;
      for (Eigen::Index a = 0; a < m; ++a) X -= y(a) * H_[static_cast<std::size_t>(a)];
      X = 0.5 * (X + X.transpose()).eval();
    }
    return X;
  }

 private:
  std::vector<Eigen::MatrixXd> H_;
  Eigen::MatrixXd kinv_;
};

Eigen::VectorXd svec(const Eigen::MatrixXd& X) {
  const Eigen::Index r = X.rows();
  Eigen::VectorXd v(r * (r + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < r; ++j) {
    v(k++) = X(j, j);
    for (Eigen::Index i = j + 1; i < r; ++i) v(k++) = std::sqrt(2.0) * X(i, j);
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, Eigen::Index r) {
  Eigen::MatrixXd X(r, r);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < r; ++j) {
    X(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < r; ++i) X(i, j) = X(j, i) = v(k++) / std::sqrt(2.0);
  }
  return X;
}

Eigen::MatrixXd random_symmetric(Eigen::Index r, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd Z(r, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = j; i < r; ++i) Z(i, j) = Z(j, i) = rng.normal();
  }
  return Z;
}

// Projection of the first target with a nonzero component in the null space,
// normalised; `sign` = -1 gives the descent direction for <Z, X>.
std::optional<Eigen::MatrixXd> project_targets(const Constraints& c, Eigen::Index r,
                                               const std::vector<Eigen::MatrixXd>& targets, double sign) {
  const Eigen::Index rows = static_cast<Eigen::Index>(c.blocks.size()) + 1;
  const Eigen::Index nvar = r * (r + 1) / 2;

  if (nvar <= 2 * rows) {
    // Small system: explicit null space of the svec'd constraint rows.
    Eigen::MatrixXd M(rows, nvar);
    M.row(0) = svec(Eigen::MatrixXd::Identity(r, r)).transpose();
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
      const Eigen::MatrixXd F = c.cols.middleCols(c.blocks[b].first, c.blocks[b].second);
      M.row(static_cast<Eigen::Index>(b) + 1) = svec(F * F.transpose()).transpose();
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double nrm = M.row(i).norm();
      if (nrm > 0.0) M.row(i) /= nrm;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cut = 1e-9 * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    if (rank >= nvar) return std::nullopt;
    const Eigen::MatrixXd N = svd.matrixV().rightCols(nvar - rank);
    for (const auto& Z : targets) {
      const Eigen::VectorXd z = svec(Z);
      const Eigen::VectorXd p = N * (N.transpose() * z);
      if (p.norm() > 1e-8 * z.norm()) return Eigen::MatrixXd(sign * smat(p / p.norm(), r));
    }
    return Eigen::MatrixXd(sign * smat(N.col(0), r));
  }

  const double m = static_cast<double>(c.blocks.size());
  const double width = static_cast<double>(c.cols.cols());
  const bool explicit_h = m * static_cast<double>(r) * static_cast<double>(r) < width * width;
  std::optional<GramProjector> gram;
  std::optional<ExplicitProjector> expl;
  if (explicit_h) {
    expl.emplace(c, r);
  } else {
    gram.emplace(c, r);
  }
  for (const auto& Z : targets) {
    const Eigen::MatrixXd P = explicit_h ? expl->project(Z) : gram->project(Z);
    const double nrm = P.norm();
    if (nrm > 1e-8 * Z.norm()) return Eigen::MatrixXd(sign * P / nrm);
  }
  return std::nullopt;
}

std::optional<Eigen::MatrixXd> direction_from(const Constraints& c, Eigen::Index r, Eigen::Index pivot,
                                              std::uint64_t seed) {
  std::vector<Eigen::MatrixXd> targets;
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(r, 4); ++k) {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(r, r);
    Z((pivot + k) % r, (pivot + k) % r) = 1.0;
    targets.push_back(std::move(Z));
  }
  targets.push_back(random_symmetric(r, seed));
  return project_targets(c, r, targets, -1.0);
}

// Some vertex on a cycle of the predecessor graph, or -1.
Eigen::Index find_pred_cycle(const std::vector<Eigen::Index>& pred) {
  const std::size_t n = pred.size();
  std::vector<std::size_t> stamp(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (stamp[start]) continue;
    std::size_t v = start;
    while (true) {
      stamp[v] = start + 1;
      const Eigen::Index p = pred[v];
      if (p < 0) break;
      const auto u = static_cast<std::size_t>(p);
      if (stamp[u] == start + 1) return p;
      if (stamp[u]) break;
      v = u;
    }
  }
  return -1;
}

// True unless `last` already lies on a predecessor cycle.
bool pass_limit_reached(const std::vector<Eigen::Index>& pred, Eigen::Index last) {
  Eigen::Index v = last;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    v = pred[static_cast<std::size_t>(v)];
    if (v < 0) return true;
    if (v == last) return false;
  }
  return true;
}

// Edge i -> k moves column sigma(i) from row i to row k. A negative cycle means
// sigma is no longer optimal for the costs W + delta * R.
struct CycleSearch {
  const Eigen::MatrixXd& W;
  const Eigen::MatrixXd& R;
  double tol;

  std::optional<std::vector<Eigen::Index>> negative_cycle(double delta, Eigen::VectorXd& d) const {
    const Eigen::Index n = W.rows();
    std::vector<Eigen::Index> pred(static_cast<std::size_t>(n), -1);
    Eigen::Index last = -1;
    for (Eigen::Index pass = 0; pass <= n; ++pass) {
      last = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == i) continue;
          const double cand = d(i) + W(i, k) + delta * R(i, k);
          if (cand < d(k) - tol) {
            d(k) = cand;
            pred[static_cast<std::size_t>(k)] = i;
            last = k;
          }
        }
      }
      if (last < 0) return std::nullopt;
      // A cycle in the predecessor graph is negative; finding it early saves
      // most of the n + 1 passes.
      const Eigen::Index on_cycle = find_pred_cycle(pred);
      if (on_cycle >= 0) {
        last = on_cycle;
        break;
      }
    }
    if (pass_limit_reached(pred, last)) {
      for (Eigen::Index s = 0; s < n; ++s) last = pred[static_cast<std::size_t>(last)];
    }
    std::vector<Eigen::Index> cycle{last};
    for (Eigen::Index v = pred[static_cast<std::size_t>(last)]; v != last; v = pred[static_cast<std::size_t>(v)]) {
      cycle.push_back(v);
    }
    // cycle holds v_0, pred(v_0), pred(pred(v_0)), ...; edge pred(v) -> v.
    return cycle;
  }

  std::pair<double, double> weight(const std::vector<Eigen::Index>& cycle) const {
    double w = 0.0, r = 0.0;
    for (std::size_t t = 0; t < cycle.size(); ++t) {
      const Eigen::Index v = cycle[t];
      const Eigen::Index u = cycle[(t + 1) % cycle.size()];
      w += W(u, v);
      r += R(u, v);
    }
    return {w, r};
  }
};

struct LineLimit {
  double delta = 0.0;
  Eigen::VectorXd potentials;
  std::vector<Eigen::Index> cycle;  // tight at delta; empty when the target was reached
};

// Largest step in [0, target] along which sigma stays optimal (Dinkelbach on
// the ratio W(cycle) / -R(cycle)).
LineLimit largest_optimal_step(const CycleSearch& cs, const Eigen::VectorXd& d0, double target) {
  LineLimit out;
  out.delta = 0.0;
  out.potentials = d0;
  double delta = target;
  for (int it = 0; it < 200 && delta > 0.0; ++it) {
    Eigen::VectorXd d = d0;
    auto cycle = cs.negative_cycle(delta, d);
    if (!cycle) {
      out.delta = delta;
      out.potentials = std::move(d);
      return out;
    }
    const auto [w, r] = cs.weight(*cycle);
    out.cycle = std::move(*cycle);
    double next = r < 0.0 ? std::max(0.0, w / -r) : 0.0;
    if (next >= delta) next = delta * (1.0 - 1e-9);
    delta = next;
  }
  return out;
}

}  // namespace

Eigen::Index rank_bound(Eigen::Index n) {
  if (n < 1) throw UsageError("rank_bound: n must be positive");
  Eigen::Index m = 0;
  while ((m + 1) * (m + 4) <= 2 * n) ++m;
  return 1 + m;
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& S, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return (eig.eigenvalues().array() > tol).count();
}

BindingSet find_binding(const Eigen::MatrixXd& S, const GramAssembly& ga) {
  const Eigen::MatrixXd c = pair_costs(S, ga);
  BindingSet b;
  const Assignment a = solve_assignment(c, &b.value);
  b.sigma = a.sigma;
  b.dual_f = a.dual_f;
  b.dual_g = a.dual_g;
  const double dual = (a.dual_f.sum() + a.dual_g.sum()) / static_cast<double>(ga.n);
  if (std::abs(dual - b.value) > 1e-8 * (1.0 + std::abs(b.value))) {
    throw SolverError("assignment duality gap too large in find_binding");
  }
  return b;
}

namespace {

Constraints make_constraints(const std::vector<Eigen::MatrixXd>& factors, Eigen::Index r) {
  Constraints c;
  Eigen::Index total = 0;
  for (const auto& F : factors) {
    if (F.rows() != r) throw UsageError("null_direction: factor has wrong row count");
    total += F.cols();
  }
  c.cols.resize(r, total);
  Eigen::Index at = 0;
  for (const auto& F : factors) {
    c.cols.middleCols(at, F.cols()) = F;
    c.blocks.emplace_back(at, F.cols());
    at += F.cols();
  }
  return c;
}

}  // namespace

std::optional<Eigen::MatrixXd> null_direction(const std::vector<Eigen::MatrixXd>& factors, Eigen::Index r,
                                              Eigen::Index pivot, std::uint64_t seed) {
  if (r < 1) return std::nullopt;
  return direction_from(make_constraints(factors, r), r, pivot, seed);
}

std::optional<Eigen::MatrixXd> null_direction(const Eigen::MatrixXd& S, const BindingSet& binding,
                                              const GramAssembly& ga) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
  const Eigen::VectorXd& lam = eig.eigenvalues();
  Eigen::Index first = 0;
  while (first < lam.size() && !(lam(first) > 1e-6)) ++first;
  const Eigen::MatrixXd Q = eig.eigenvectors().rightCols(lam.size() - first);
  const Eigen::Index r = Q.cols();
  if (r == 0) return std::nullopt;
  std::vector<Eigen::MatrixXd> factors;
  for (Eigen::Index i = 0; i < ga.n; ++i) {
    factors.emplace_back(Q.transpose() * ga.m(i, binding.sigma[static_cast<std::size_t>(i)]));
  }
  auto delta = null_direction(factors, r);
  if (!delta) return std::nullopt;
  return Eigen::MatrixXd(Q * *delta * Q.transpose());
}

double step_to_boundary(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& Delta) {
  if ((lambda.array() <= 0.0).any()) throw UsageError("step_to_boundary: eigenvalues must be positive");
  const Eigen::VectorXd is = lambda.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd P = is.asDiagonal() * (0.5 * (Delta + Delta.transpose())) * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues()(0);
  return mu < 0.0 ? -1.0 / mu : 0.0;
}

ReducedSolution reduce(const SpectrahedronPoint& input, const GramAssembly& ga, const ReductionOptions& opts) {
  const Eigen::Index n = ga.n;
  ReducedSolution out;
  out.k_bound = rank_bound(n);
  Eigen::MatrixXd S = 0.5 * (input.S + input.S.transpose());
  out.binding = find_binding(S, ga);
  out.value_before = out.binding.value;
  std::vector<Eigen::Index> sigma = out.binding.sigma;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig0(S);
  Eigen::Index first = 0;
  while (first < eig0.eigenvalues().size() && !(eig0.eigenvalues()(first) > opts.rank_tol)) ++first;
  // Eigenvalues at or below the tolerance are frozen; only the range part moves.
  Eigen::MatrixXd rest = Eigen::MatrixXd::Zero(S.rows(), S.cols());
  for (Eigen::Index i = 0; i < first; ++i) {
    const double l = std::max(0.0, eig0.eigenvalues()(i));
    rest.noalias() += l * eig0.eigenvectors().col(i) * eig0.eigenvectors().col(i).transpose();
  }
  Eigen::MatrixXd Q = eig0.eigenvectors().rightCols(S.rows() - first);
  Eigen::VectorXd lam = eig0.eigenvalues().tail(S.rows() - first);
  out.rank_before = lam.size();
  out.eigen_history.push_back(lam.reverse());

  Eigen::VectorXd potentials = out.binding.dual_f;
  std::vector<std::vector<Eigen::Index>> ties;
  int zero_run = 0;
  Eigen::MatrixXd target_fn;  // pivoting objective, redrawn after each rank drop
  const long max_its = opts.max_iterations > 0 ? opts.max_iterations : static_cast<long>(2 * n + 2);
  const long max_pivots = opts.max_pivots > 0 ? opts.max_pivots : static_cast<long>(50 * n + 500);

  bool fallback = false;
  long level_pivots = 0;  // pivots since the last rank drop
  const long level_budget = opts.level_pivots > 0 ? opts.level_pivots : static_cast<long>(2 * n);
  Eigen::MatrixXd Delta;
  double step = 0.0;
  double sign = 1.0;
  while (lam.size() > 1) {
    if (out.iterations >= max_its || out.pivots >= max_pivots) {
      out.hit_iteration_limit = true;
      break;
    }
    const Eigen::Index r = lam.size();
    const Eigen::MatrixXd Ah = Q.transpose() * ga.A;
    const Eigen::MatrixXd Bh = Q.transpose() * ga.B;

    std::vector<Eigen::MatrixXd> factors;
    if (level_pivots > level_budget && r > out.k_bound) fallback = true;
    if (fallback) {
      // Constraints of the printed method: the n binding pairs of sigma only.
      // Other pairs may become cheaper, so the objective is re-evaluated.
      for (Eigen::Index i = 0; i < n; ++i) {
        factors.emplace_back(Ah.col(i) - Bh.col(sigma[static_cast<std::size_t>(i)]));
      }
      auto dir = null_direction(factors, r, 0,
                                derive_seed(opts.seed, "rankred.fallback", static_cast<std::uint64_t>(out.iterations)));
      if (!dir) break;
      double best_value = -std::numeric_limits<double>::infinity();
      for (const double sgn : {1.0, -1.0}) {
        const double t = step_to_boundary(lam, sgn * *dir);
        if (!(t > 0.0)) continue;
        const Eigen::MatrixXd D = Q * (lam.asDiagonal().toDenseMatrix() + t * sgn * *dir) * Q.transpose() + rest;
        const double value = objective_exact(D, ga);
        if (value > best_value) {
          best_value = value;
          step = t;
          sign = sgn;
        }
      }
      if (!(best_value > -std::numeric_limits<double>::infinity())) break;
      Delta = *dir;
      ++out.fallback_steps;
    } else {
    // One aggregated constraint per assignment: the transport cost of sigma
    // (and of each pinned tie) stays fixed while sigma remains optimal.
    auto assignment_block = [&](const std::vector<Eigen::Index>& perm) {
      Eigen::MatrixXd F(r, n);
      for (Eigen::Index i = 0; i < n; ++i) F.col(i) = Ah.col(i) - Bh.col(perm[static_cast<std::size_t>(i)]);
      return F;
    };
    factors.push_back(assignment_block(sigma));
    for (const auto& tie : ties) factors.push_back(assignment_block(tie));
    const std::uint64_t dseed =
        derive_seed(opts.seed, "rankred.direction", static_cast<std::uint64_t>(out.iterations + out.pivots));
    const Constraints cons = make_constraints(factors, r);
    auto dir = direction_from(cons, r, 0, dseed);
    if (!dir) {
      // A vertex of the value-preserving set.
      if (r <= out.k_bound) break;
      fallback = true;
      continue;
    }
    Delta = std::move(*dir);

    const Eigen::MatrixXd C = pair_costs(S, ga);
    const double tol = 1e-12 * (1.0 + C.cwiseAbs().maxCoeff());
    Eigen::MatrixXd W(n, n), Rp(n, n);
    auto edge_rates = [&](const Eigen::MatrixXd& D) {
      const Eigen::MatrixXd rate = quad_costs(D, Ah, Bh);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index col = sigma[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < n; ++k) {
          W(i, k) = C(k, col) - C(i, col);
          Rp(i, k) = rate(k, col) - rate(i, col);
        }
      }
    };
    edge_rates(Delta);

    step = 0.0;
    sign = 1.0;
    bool reached = false;
    Eigen::VectorXd next_potentials = potentials;
    for (const double s : {1.0, -1.0}) {
      const Eigen::MatrixXd Rs = s * Rp;
      const CycleSearch cs{W, Rs, tol};
      const double target = step_to_boundary(lam, s * Delta);
      Eigen::VectorXd d = potentials;
      if (target > 0.0 && !cs.negative_cycle(target, d)) {
        step = target;
        sign = s;
        reached = true;
        next_potentials = std::move(d);
        break;
      }
    }
    if (!reached && r <= out.k_bound) break;
    if (!reached) {
      // Another assignment becomes optimal first. Ascend a fixed random linear
      // functional instead, so that positive steps never revisit a point, walk
      // to the tie and switch the binding assignment there.
      if (target_fn.rows() == 0) {
        target_fn = random_symmetric(S.rows(), derive_seed(opts.seed, "rankred.target",
                                                           static_cast<std::uint64_t>(out.iterations)));
      }
      auto ascent = project_targets(cons, r, {Eigen::MatrixXd(Q.transpose() * target_fn * Q)}, 1.0);
      if (!ascent) break;
      Delta = std::move(*ascent);
      sign = 1.0;
      edge_rates(Delta);
      const CycleSearch cs{W, Rp, tol};
      const double boundary = step_to_boundary(lam, Delta);
      LineLimit lim = largest_optimal_step(cs, potentials, boundary);
      // Steps at rounding level are degenerate pivots, not progress.
      step = lim.delta > 1e-10 * boundary ? lim.delta : 0.0;
      next_potentials = std::move(lim.potentials);
      const std::vector<Eigen::Index> tight = std::move(lim.cycle);
      if (!tight.empty()) {
        ++level_pivots;
        zero_run = step > 0.0 ? 0 : zero_run + 1;
        if (zero_run <= 2) {
          std::vector<Eigen::Index> rotated = sigma;
          for (std::size_t t = 0; t < tight.size(); ++t) {
            const Eigen::Index v = tight[t];
            const Eigen::Index u = tight[(t + 1) % tight.size()];
            rotated[static_cast<std::size_t>(v)] = sigma[static_cast<std::size_t>(u)];
          }
          sigma = std::move(rotated);
        } else {
          // Repeated zero-length pivots: pin the competing assignment instead of switching.
          std::vector<Eigen::Index> tie = sigma;
          for (std::size_t t = 0; t < tight.size(); ++t) {
            const Eigen::Index v = tight[t];
            const Eigen::Index u = tight[(t + 1) % tight.size()];
            tie[static_cast<std::size_t>(v)] = sigma[static_cast<std::size_t>(u)];
          }
          ties.push_back(std::move(tie));
          ++out.tie_constraints;
        }
        ++out.pivots;
      }
    }
    potentials = std::move(next_potentials);
    }
    if (step <= 0.0) continue;

    Eigen::MatrixXd Mx = lam.asDiagonal();
    Mx += step * sign * Delta;
    Mx = 0.5 * (Mx + Mx.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Mx);
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const Eigen::MatrixXd Qn = Q * eig.eigenvectors();
    Eigen::Index drop = 0;
    while (drop < mu.size() && !(mu(drop) > opts.rank_tol)) ++drop;
    for (Eigen::Index i = 0; i < drop; ++i) {
      const double l = std::max(0.0, mu(i));
      if (l > 0.0) rest.noalias() += l * Qn.col(i) * Qn.col(i).transpose();
    }
    Q = Qn.rightCols(mu.size() - drop);
    lam = mu.tail(mu.size() - drop);
    S = Q * lam.asDiagonal() * Q.transpose() + rest;
    S = 0.5 * (S + S.transpose()).eval();
    if (fallback) {
      fallback = false;
      level_pivots = 0;
      const BindingSet b = find_binding(S, ga);
      sigma = b.sigma;
      potentials = b.dual_f;
    }
    if (drop > 0) {
      ++out.iterations;
      level_pivots = 0;
      ties.clear();
      zero_run = 0;
      target_fn.resize(0, 0);
      out.eigen_history.push_back(lam.reverse());
    }
  }

  out.S.S = S;
  out.rank = numerical_rank(S, opts.rank_tol);
  const Eigen::MatrixXd c_end = pair_costs(S, ga);
  out.binding.sigma = sigma;
  out.binding.dual_f = potentials;
  out.binding.dual_g.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = sigma[static_cast<std::size_t>(i)];
    out.binding.dual_g(j) = c_end(i, j) - potentials(i);
  }
  double violation = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      violation = std::max(violation, out.binding.dual_f(i) + out.binding.dual_g(j) - c_end(i, j));
    }
  }
  out.dual_violation = violation;
  out.value_after = objective_exact(S, ga);
  out.binding.value = out.value_after;
  return out;
}

}  // namespace kms
