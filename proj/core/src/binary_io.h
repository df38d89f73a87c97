// Copyright 2026 The WIG Authors.
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

// Little-endian fixed-width primitives shared by the binary file formats.

#ifndef WIG_SRC_BINARY_IO_H_
#define WIG_SRC_BINARY_IO_H_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "wig/error.h"

namespace wig::internal {

template <typename UInt>
void WriteLE(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt ReadLE(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::kParse, "unexpected end of binary stream");
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void WriteF64(std::ostream& out, double value) {
  WriteLE<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value));
}

inline double ReadF64(std::istream& in) {
  return std::bit_cast<double>(ReadLE<std::uint64_t>(in));
}

inline void WriteMagic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void ExpectMagic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in || got != magic) {
    throw Error(ErrorCode::kParse,
                "bad file magic, expected '" + std::string(magic) + "'");
  }
}

inline std::ifstream OpenIn(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return in;
}

inline std::ofstream OpenOut(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  return out;
}

}  // namespace wig::internal

#endif  // WIG_SRC_BINARY_IO_H_
