#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "replayirl/error.hpp"

namespace replayirl::io {

// Little helpers for the versioned binary checkpoint format. Values are
// written in host byte order; checkpoints are not meant to move across
// architectures.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  // Fixed 8-byte format tag followed by a version number.
  void put_tag(const char (&tag)[9], std::uint32_t version) {
    out_.write(tag, 8);
    put(version);
  }

  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void put_vector(const Eigen::VectorXd& v) {
    put<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void put_array(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  // Throws CheckpointVersionMismatch unless the tag and version match.
  void expect_tag(const char (&tag)[9], std::uint32_t version) {
    char got[8];
    read(got, 8);
    if (std::memcmp(got, tag, 8) != 0) throw Error(Errc::CheckpointVersionMismatch, "unexpected file format tag");
    if (get<std::uint32_t>() != version) throw Error(Errc::CheckpointVersionMismatch, "unsupported format version");
  }

  std::string get_string() {
    std::string s(checked_size(get<std::uint64_t>()), '\0');
    read(s.data(), s.size());
    return s;
  }

  Eigen::VectorXd get_vector() {
    Eigen::VectorXd v(static_cast<Eigen::Index>(checked_size(get<std::uint64_t>())));
    read(reinterpret_cast<char*>(v.data()), static_cast<std::size_t>(v.size()) * sizeof(double));
    return v;
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  std::vector<T> get_array() {
    std::vector<T> v(checked_size(get<std::uint64_t>()));
    read(reinterpret_cast<char*>(v.data()), v.size() * sizeof(T));
    return v;
  }

 private:
  static std::size_t checked_size(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 36)) throw Error(Errc::Io, "corrupt checkpoint length");
    return static_cast<std::size_t>(n);
  }

  void read(char* dst, std::size_t n) {
    if (!in_.read(dst, static_cast<std::streamsize>(n))) throw Error(Errc::Io, "truncated checkpoint");
  }

  std::istream& in_;
};

}  // namespace replayirl::io
