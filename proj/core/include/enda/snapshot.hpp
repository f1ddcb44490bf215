#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

#include "enda/errors.hpp"

namespace enda {

// Binary snapshot container used for replicate checkpointing and basis
// caches: named f64 matrix sections in a flat file.
//
// Layout (all integers and doubles little-endian):
//   magic   8 bytes  "ENDASNAP"
//   version u32      1
//   count   u32      number of sections
//   then per section:
//     name_len u32, name bytes, rows u64, cols u64, rows*cols f64
//       (column-major, matching Eigen's default)
class Snapshot {
 public:
  void set(const std::string& name, const Eigen::MatrixXd& value);
  const Eigen::MatrixXd& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  void save(const std::string& path) const;
  static Snapshot load(const std::string& path);

 private:
  std::map<std::string, Eigen::MatrixXd> sections_;
};

}  // namespace enda
