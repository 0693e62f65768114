#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "point_cloud.hpp"

namespace kms::io {

/// Shortest round-trip decimal form ("%.17g"), used for every number we print.
std::string format_double(double value);

Eigen::MatrixXd parse_csv(std::istream& in, const std::string& origin);
Eigen::MatrixXd read_csv(const std::string& path);
void write_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_csv(const std::string& path, const Eigen::MatrixXd& m);

// Binary layout: u64 rows, u64 cols, then rows*cols f64 in row-major order,
// all little-endian.
Eigen::MatrixXd read_binary(const std::string& path);
void write_binary(const std::string& path, const Eigen::MatrixXd& m);

/// Loads a point cloud; ".bin" selects the binary format, anything else CSV.
PointCloud load_cloud(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace kms::io
