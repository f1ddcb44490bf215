#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "enda/ensemble.hpp"

namespace enda {

// Shortest round-trip decimal formatting; every CSV double goes through this
// so files are byte-stable and parse back exactly.
std::string format_double(double value);
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

// Ensemble CSV: header p0,p1,...,p<d-1>, one member per row.
void write_ensemble_csv(const std::string& path, const Ensemble& e);
Ensemble read_ensemble_csv(const std::string& path);

// Row-major grid field CSV (one grid row per line, no header).
void write_field_csv(const std::string& path, const Eigen::VectorXd& field, int n);
Eigen::VectorXd read_field_csv(const std::string& path, int expected_n = -1);

// Ensemble <-> binary snapshot ("members" section).
void write_ensemble_snapshot(const std::string& path, const Ensemble& e);
Ensemble read_ensemble_snapshot(const std::string& path);

}  // namespace enda
