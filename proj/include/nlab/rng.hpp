// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nlab {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter generate(Counter ctr, Key key);
};

/// SplitMix64 finaliser; used to derive independent seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

/// Stream purposes. Distinct substreams of the same path never overlap.
enum class Substream : std::uint32_t {
  brownian = 0,
  initial_state = 1,
  auxiliary = 2,
};

/// Random stream of one Monte-Carlo path.
///
/// The stream is addressed by (seed, path, substream); draw i of the stream
/// is a pure function of these and i, so a path is bit-identical no matter
/// which worker simulates it or in which order. Normal draws use Box-Muller
/// on one Philox block per pair of variates.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path, Substream sub = Substream::brownian);

  /// Next standard normal.
  double normal();
  /// Next uniform on (0, 1).
  double uniform();
  /// Standard normal number `index` of this stream (random access, does not
  /// move the cursor).
  double normal_at(std::uint64_t index) const;
  /// Moves the cursor so that the next normal() is normal_at(index).
  void seek_normal(std::uint64_t index);

 private:
  std::array<double, 2> normal_pair(std::uint64_t block) const;
  std::array<double, 2> uniform_pair(std::uint64_t block) const;

  Philox4x32::Key key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
  std::uint32_t sub_;
  std::uint64_t cursor_ = 0;
  std::array<double, 2> cache_{};
  std::uint64_t cache_block_ = ~std::uint64_t{0};
};

}  // namespace nlab
