#include "point_cloud.hpp"

#include <string>

#include "errors.hpp"

namespace kms {

void validate(const PointCloud& cloud, const char* what) {
  if (cloud.n() < 1 || cloud.d() < 1) throw UsageError(std::string(what) + ": empty point cloud");
  if (!cloud.points.allFinite()) throw UsageError(std::string(what) + ": non-finite coordinate");
}

void validate_pair(const PointCloud& x, const PointCloud& y) {
  validate(x, "x");
  validate(y, "y");
  if (x.d() != y.d()) {
    throw UsageError("dimension mismatch: x has d=" + std::to_string(x.d()) + ", y has d=" +
                     std::to_string(y.d()));
  }
  if (x.n() != y.n()) {
    throw UsageError("sample sizes differ (" + std::to_string(x.n()) + " vs " + std::to_string(y.n()) +
                     "); subsample the larger cloud to equal size");
  }
}

}  // namespace kms
