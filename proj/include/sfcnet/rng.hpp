#pragma once

#include <cstdint>
#include <random>

namespace sfcnet {

// What a random stream is used for; part of the substream key.
enum class StreamPurpose : std::uint32_t {
  Fitness = 1,
  Registry = 2,
  Topology = 3,
};

// Seeded 64-bit Mersenne twister with a platform-independent mapping to [0,1).
//
// Substreams are keyed by (master seed, purpose, trial, layer) through
// std::seed_seq, so the stream a trial sees does not depend on how many
// trials run or in which order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  static RandomStream derive(std::uint64_t master_seed, StreamPurpose purpose,
                             std::uint64_t trial = 0, std::uint64_t layer = 0);

  std::uint64_t next() { return engine_(); }

  // 53 random mantissa bits, uniform on [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  explicit RandomStream(std::seed_seq& seq) : engine_(seq) {}

  std::mt19937_64 engine_;
};

}  // namespace sfcnet
