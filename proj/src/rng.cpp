#include "sfcnet/rng.hpp"

#include <vector>

namespace sfcnet {

namespace {

void push_u64(std::vector<std::uint32_t>& words, std::uint64_t v) {
  words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
  words.push_back(static_cast<std::uint32_t>(v >> 32));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) {
  std::vector<std::uint32_t> words;
  push_u64(words, seed);
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

RandomStream RandomStream::derive(std::uint64_t master_seed, StreamPurpose purpose,
                                  std::uint64_t trial, std::uint64_t layer) {
  std::vector<std::uint32_t> words;
  push_u64(words, master_seed);
  words.push_back(static_cast<std::uint32_t>(purpose));
  push_u64(words, trial);
  push_u64(words, layer);
  std::seed_seq seq(words.begin(), words.end());
  return RandomStream(seq);
}

}  // namespace sfcnet
