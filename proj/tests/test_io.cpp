#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "enda/io.hpp"
#include "enda/rng.hpp"
#include "enda/snapshot.hpp"

using namespace enda;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("double formatting round-trips exactly") {
  Rng rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    const double value = rng.normal() * std::pow(10.0, rng.uniform(-30.0, 30.0));
    CHECK(parse_double(format_double(value)) == value);
  }
  CHECK(parse_double(format_double(0.0)) == 0.0);
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK_THROWS_AS(parse_double("not-a-number"), IoError);
}

TEST_CASE("ensemble csv round trip") {
  Rng rng(56);
  Ensemble e;
  e.members.resize(7, 3);
  for (Eigen::Index i = 0; i < e.members.size(); ++i)
    e.members.data()[i] = rng.normal() * 1e3;

  const fs::path path = temp_file("enda_test_ensemble.csv");
  write_ensemble_csv(path.string(), e);

  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "p0,p1,p2");

  const Ensemble loaded = read_ensemble_csv(path.string());
  CHECK(loaded.member_count() == 7);
  CHECK(loaded.dim() == 3);
  CHECK((loaded.members - e.members).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(path);
}

TEST_CASE("ensemble snapshot round trip") {
  Rng rng(57);
  Ensemble e;
  e.members.resize(5, 4);
  for (Eigen::Index i = 0; i < e.members.size(); ++i) e.members.data()[i] = rng.normal();

  const fs::path path = temp_file("enda_test_ensemble.snap");
  write_ensemble_snapshot(path.string(), e);
  const Ensemble loaded = read_ensemble_snapshot(path.string());
  CHECK((loaded.members - e.members).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(path);
}

TEST_CASE("snapshot rejects corrupt input") {
  const fs::path path = temp_file("enda_test_bad.snap");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTMAGIC" << std::string(64, '\0');
  }
  CHECK_THROWS_AS(Snapshot::load(path.string()), IoError);
  CHECK_THROWS_AS(Snapshot::load("/nonexistent/enda.snap"), IoError);
  fs::remove(path);
}

TEST_CASE("field csv round trip") {
  Rng rng(58);
  const int n = 6;
  Eigen::VectorXd field(n * n);
  for (Eigen::Index i = 0; i < field.size(); ++i) field(i) = rng.normal();

  const fs::path path = temp_file("enda_test_field.csv");
  write_field_csv(path.string(), field, n);
  const Eigen::VectorXd loaded = read_field_csv(path.string(), n);
  CHECK((loaded - field).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(read_field_csv(path.string(), n + 1), IoError);
  fs::remove(path);
}
