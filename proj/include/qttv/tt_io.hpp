#pragma once

// Serialization of tensor-train vectors.
//
// Binary layout (all integers and floats little-endian):
//
//   offset  size        field
//   0       4           magic "QTTV"
//   4       4  u32      format version (1)
//   8       1  u8       scalar kind: 0 = float64, 1 = complex128 (re, im)
//   9       3           reserved, zero
//   12      4  u32      d, number of cores
//   16      8(d+1) u64  ranks r_0..r_d
//   ...                 core payloads, core 0 first
//
// Core p is an r_p x 2 x r_{p+1} array written in column-major order, i.e.
// element (alpha, k, beta) sits at alpha + r_p * (k + 2 * beta).
//
// The JSON debug form mirrors the same data:
//   {"format": "qttv.tt/1", "scalar": "float64"|"complex128", "d": d,
//    "ranks": [...], "cores": [[...], ...]}
// with each core flattened in the binary order; complex entries are [re, im].

#include <iosfwd>
#include <string>
#include <variant>

#include <json.hpp>

#include "qttv/tt_core.hpp"

namespace qttv {

inline constexpr std::uint32_t kBinaryFormatVersion = 1;

using AnyTT = std::variant<TTVector, TTVectorC>;

template <class T>
void write_binary(std::ostream& os, const TensorTrain<T>& a);

/// Reads either scalar kind.
AnyTT read_binary(std::istream& is);

template <class T>
nlohmann::json to_json(const TensorTrain<T>& a);

AnyTT from_json(const nlohmann::json& j);

}  // namespace qttv
