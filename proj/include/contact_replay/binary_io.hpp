#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "contact_replay/errors.hpp"

namespace contact_replay {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host byte order (little endian)");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
  void write(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void write_magic(std::string_view magic) {
    out_.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  }

  void write_string(std::string_view s) {
    write<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void write_doubles(const double* data, std::size_t n) {
    write<std::uint64_t>(n);
    out_.write(reinterpret_cast<const char*>(data),
               static_cast<std::streamsize>(n * sizeof(double)));
  }

  void write_vector(const std::vector<double>& v) { write_doubles(v.data(), v.size()); }

  void check() const {
    if (!out_) throw IoError("write failed");
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
  T read(const char* what) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw IoError(std::string("truncated input while reading ") + what);
    return value;
  }

  std::string read_string(const char* what, std::uint64_t max_len = 1u << 24) {
    auto n = read<std::uint64_t>(what);
    if (n > max_len) throw IoError(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw IoError(std::string("truncated input while reading ") + what);
    return s;
  }

  std::vector<double> read_vector(const char* what, std::uint64_t max_len = 1u << 28) {
    auto n = read<std::uint64_t>(what);
    if (n > max_len) throw IoError(std::string("implausible length for ") + what);
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw IoError(std::string("truncated input while reading ") + what);
    return v;
  }

  void expect_magic(std::string_view magic, const char* format) {
    std::string got(magic.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(magic.size()));
    if (!in_ || got != magic) {
      throw IoError(std::string("not a ") + format + " file (bad magic)");
    }
  }

 private:
  std::istream& in_;
};

}  // namespace contact_replay
