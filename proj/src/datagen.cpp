#include "datagen.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace kms {

namespace {

const std::map<std::string, double>& defaults(DatasetKind kind) {
  static const std::map<std::string, double> circle{{"r_in", 1.0}, {"r_out", 2.0}, {"noise", 0.1}};
  static const std::map<std::string, double> shift{{"rho", 0.06}};
  static const std::map<std::string, double> mixture{{"rho", 0.05}, {"shift", 0.5}};
  static const std::map<std::string, double> two_point{{"p_one", 0.5}};
  static const std::map<std::string, double> none{};
  switch (kind) {
    case DatasetKind::circle: return circle;
    case DatasetKind::gauss_cov_shift: return shift;
    case DatasetKind::gauss_mixture: return mixture;
    case DatasetKind::two_point_1d: return two_point;
    case DatasetKind::circulant_adversarial: return none;
  }
  return none;
}

void gaussian_fill(Rng& rng, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  }
}

// Adds sqrt(rho) * g * 1 to each row, g ~ N(0, 1): covariance gains rho * E.
void add_common_factor(Rng& rng, Eigen::MatrixXd& m, double rho) {
  const double s = std::sqrt(rho);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).array() += s * rng.normal();
}

Eigen::MatrixXd ring(Rng& rng, Eigen::Index n, double radius, double noise) {
  Eigen::MatrixXd m(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    m(i, 0) = radius * std::cos(angle) + noise * rng.normal();
    m(i, 1) = radius * std::sin(angle) + noise * rng.normal();
  }
  return m;
}

Eigen::MatrixXd mixture(Rng& rng, Eigen::Index n, Eigen::Index d, double shift, double rho) {
  Eigen::MatrixXd m(n, d);
  gaussian_fill(rng, m);
  if (rho > 0.0) add_common_factor(rng, m, rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rng.uniform() < 0.5) m.row(i).array() += shift;
  }
  return m;
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "circle") return DatasetKind::circle;
  if (name == "gauss_cov_shift") return DatasetKind::gauss_cov_shift;
  if (name == "gauss_mixture") return DatasetKind::gauss_mixture;
  if (name == "two_point_1d") return DatasetKind::two_point_1d;
  if (name == "circulant_adversarial") return DatasetKind::circulant_adversarial;
  throw UsageError("unknown dataset kind '" + name + "' (expected " + dataset_kind_list() + ")");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::circle: return "circle";
    case DatasetKind::gauss_cov_shift: return "gauss_cov_shift";
    case DatasetKind::gauss_mixture: return "gauss_mixture";
    case DatasetKind::two_point_1d: return "two_point_1d";
    case DatasetKind::circulant_adversarial: return "circulant_adversarial";
  }
  return "?";
}

std::string dataset_kind_list() { return "circle|gauss_cov_shift|gauss_mixture|two_point_1d|circulant_adversarial"; }

double DatasetSpec::param(const std::string& name) const {
  if (const auto it = params.find(name); it != params.end()) return it->second;
  const auto& def = defaults(kind);
  if (const auto it = def.find(name); it != def.end()) return it->second;
  throw UsageError("dataset " + to_string(kind) + " has no parameter '" + name + "'");
}

void DatasetSpec::validate() const {
  if (n < 1) throw UsageError("dataset: n must be positive");
  if (d < 1) throw UsageError("dataset: d must be positive");
  const auto& def = defaults(kind);
  for (const auto& [key, value] : params) {
    if (!def.count(key)) throw UsageError("dataset " + to_string(kind) + " has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw UsageError("dataset parameter '" + key + "' must be finite");
  }
  switch (kind) {
    case DatasetKind::circle:
      if (!(param("r_in") > 0.0) || !(param("r_out") > 0.0)) throw UsageError("circle radii must be positive");
      if (param("noise") < 0.0) throw UsageError("circle noise must be nonnegative");
      if (d != 2) throw UsageError("circle data lives in d = 2");
      break;
    case DatasetKind::gauss_cov_shift:
    case DatasetKind::gauss_mixture:
      if (param("rho") < 0.0 || param("rho") > 1.0) {
        throw UsageError("rho must lie in [0, 1], got " + io::format_double(param("rho")));
      }
      break;
    case DatasetKind::two_point_1d:
      if (d != 1) throw UsageError("two_point_1d data lives in d = 1");
      if (param("p_one") < 0.0 || param("p_one") > 1.0) throw UsageError("p_one must lie in [0, 1]");
      break;
    case DatasetKind::circulant_adversarial:
      break;
  }
}

Eigen::Index default_dimension(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::circle: return 2;
    case DatasetKind::gauss_cov_shift: return 10;
    case DatasetKind::gauss_mixture: return 40;
    case DatasetKind::two_point_1d: return 1;
    case DatasetKind::circulant_adversarial: return 5;
  }
  return 1;
}

std::pair<PointCloud, PointCloud> generate(const DatasetSpec& spec) {
  spec.validate();
  Rng rx(derive_seed(spec.seed, "datagen.x"));
  Rng ry(derive_seed(spec.seed, "datagen.y"));
  const Eigen::Index n = spec.n;
  const Eigen::Index d = spec.d;
  Eigen::MatrixXd x, y;
  switch (spec.kind) {
    case DatasetKind::circle:
      x = ring(rx, n, spec.param("r_in"), spec.param("noise"));
      y = ring(ry, n, spec.param("r_out"), spec.param("noise"));
      break;
    case DatasetKind::gauss_cov_shift:
      x.resize(n, d);
      y.resize(n, d);
      gaussian_fill(rx, x);
      gaussian_fill(ry, y);
      add_common_factor(ry, y, spec.param("rho"));
      break;
    case DatasetKind::gauss_mixture:
      x = mixture(rx, n, d, spec.param("shift"), 0.0);
      y = mixture(ry, n, d, spec.param("shift"), spec.param("rho"));
      break;
    case DatasetKind::two_point_1d: {
      const double p = spec.param("p_one");
      x.resize(n, 1);
      y.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = rx.uniform() < p ? 1.0 : 0.0;
      for (Eigen::Index i = 0; i < n; ++i) y(i, 0) = ry.uniform() < p ? 1.0 : 0.0;
      break;
    }
    case DatasetKind::circulant_adversarial:
      x.resize(n, d);
      y.resize(n, d);
      gaussian_fill(rx, x);
      gaussian_fill(ry, y);
      for (Eigen::Index i = 0; i < n; ++i) y.row(i).normalize();
      break;
  }
  return {PointCloud(std::move(x)), PointCloud(std::move(y))};
}

std::vector<std::vector<Eigen::Index>> circulant_indices(Eigen::Index n) {
  if (n < 1) throw UsageError("circulant_indices: n must be positive");
  std::vector<std::vector<Eigen::Index>> idx(static_cast<std::size_t>(n), std::vector<Eigen::Index>(static_cast<std::size_t>(n)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = ((j - i) % n + n) % n;
  }
  return idx;
}

Eigen::MatrixXd circulant_costs(const Eigen::MatrixXd& A, const Eigen::VectorXd& omega) {
  if (A.rows() < 1) throw UsageError("circulant_costs: need at least one vector");
  if (A.cols() != omega.size()) throw UsageError("circulant_costs: vectors and omega differ in dimension");
  const Eigen::Index n = A.rows();
  const Eigen::VectorXd proj = (A * omega).array().square();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = proj(((j - i) % n + n) % n);
  }
  return c;
}

}  // namespace kms
