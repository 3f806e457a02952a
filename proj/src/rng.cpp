// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace nlab {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(splitmix64(master) ^ splitmix64(tag + 0x632BE59BD9B4E019ULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  // FNV-1a over the tag bytes
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(master, h);
}

PathStream::PathStream(std::uint64_t seed, std::uint64_t path, Substream sub)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      path_lo_(static_cast<std::uint32_t>(path)),
      path_hi_(static_cast<std::uint32_t>(path >> 32)),
      sub_(static_cast<std::uint32_t>(sub)) {}

std::array<double, 2> PathStream::uniform_pair(std::uint64_t block) const {
  // counter layout: {block, sub | block_hi << 8, path_lo, path_hi}
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                sub_ | (static_cast<std::uint32_t>(block >> 32) << 8), path_lo_,
                                path_hi_};
  const auto r = Philox4x32::generate(ctr, key_);
  return {to_open_unit(r[0], r[1]), to_open_unit(r[2], r[3])};
}

std::array<double, 2> PathStream::normal_pair(std::uint64_t block) const {
  const auto u = uniform_pair(block);
  const double radius = std::sqrt(-2.0 * std::log(u[0]));
  const double angle = 2.0 * std::numbers::pi * u[1];
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double PathStream::normal_at(std::uint64_t index) const {
  const std::uint64_t block = index >> 1;
  if (block == cache_block_) return cache_[index & 1];
  return normal_pair(block)[index & 1];
}

double PathStream::normal() {
  const std::uint64_t block = cursor_ >> 1;
  if (block != cache_block_) {
    cache_ = normal_pair(block);
    cache_block_ = block;
  }
  return cache_[cursor_++ & 1];
}

void PathStream::seek_normal(std::uint64_t index) { cursor_ = index; }

double PathStream::uniform() {
  // shares the cursor with normal(); a stream serves one kind of draw
  const auto pair = uniform_pair(cursor_ >> 1);
  return pair[cursor_++ & 1];
}

}  // namespace nlab
