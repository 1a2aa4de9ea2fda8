// Copyright 2026 The AdaRC Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADARC_BINARY_IO_HPP_
#define ADARC_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "adarc/types.hpp"

// Little-endian primitives shared by the dataset and checkpoint formats.
namespace adarc::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw InvalidArgument(what + ": truncated header");
  }
  return v;
}

inline double read_f32(std::istream& in, const std::string& what) {
  float f = 0.0f;
  if (!in.read(reinterpret_cast<char*>(&f), sizeof(f))) {
    throw InvalidArgument(what + ": truncated payload");
  }
  return static_cast<double>(f);
}

inline void expect_magic(std::istream& in, const char* magic, const std::string& what) {
  const std::size_t n = std::strlen(magic);
  std::string got(n, '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(n)) || got != magic) {
    throw InvalidArgument(what + ": bad magic (expected \"" + magic + "\")");
  }
}

template <typename Derived>
void write_f32_rowmajor(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(out, m(r, c));
}

template <typename Derived>
void read_f32_rowmajor(std::istream& in, Eigen::MatrixBase<Derived>& m,
                       const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f32(in, what);
}

}  // namespace adarc::binary

#endif  // ADARC_BINARY_IO_HPP_
