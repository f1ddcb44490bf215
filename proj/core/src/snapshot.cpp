#include "enda/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace enda {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'D', 'A', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_f64(std::ostream& os, double value) {
  write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(value));
}

double read_f64(std::istream& is) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is));
}

}  // namespace

void Snapshot::set(const std::string& name, const Eigen::MatrixXd& value) {
  sections_[name] = value;
}

const Eigen::MatrixXd& Snapshot::get(const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) throw IoError("snapshot: missing section '" + name + "'");
  return it->second;
}

bool Snapshot::contains(const std::string& name) const {
  return sections_.count(name) != 0;
}

void Snapshot::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("snapshot: cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(sections_.size()));
  for (const auto& [name, value] : sections_) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(value.rows()));
    write_le<std::uint64_t>(os, static_cast<std::uint64_t>(value.cols()));
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) write_f64(os, value(i, j));
  }
  if (!os) throw IoError("snapshot: write failed for '" + path + "'");
}

Snapshot Snapshot::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("snapshot: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("snapshot: bad magic in '" + path + "'");
  if (read_le<std::uint32_t>(is) != kVersion)
    throw IoError("snapshot: unsupported version in '" + path + "'");

  Snapshot snap;
  const std::uint32_t count = read_le<std::uint32_t>(is);
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint32_t name_len = read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint64_t rows = read_le<std::uint64_t>(is);
    const std::uint64_t cols = read_le<std::uint64_t>(is);
    if (!is || rows > (1ull << 32) || cols > (1ull << 32))
      throw IoError("snapshot: corrupt section header in '" + path + "'");
    Eigen::MatrixXd value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) value(i, j) = read_f64(is);
    if (!is) throw IoError("snapshot: truncated section '" + name + "'");
    snap.sections_[name] = std::move(value);
  }
  return snap;
}

}  // namespace enda
