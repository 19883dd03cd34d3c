#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace svy {

// Seeded random stream. Streams are addressed by a key path, e.g.
// (master_seed, replicate) or (forest_seed, tree); the key is hashed with
// SplitMix64 into the engine seed, so any stream can be reconstructed
// independently of how many other streams were consumed before it.
class Stream {
 public:
  explicit Stream(std::uint64_t seed);
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  // Deterministic child stream; does not advance this stream.
  Stream substream(std::uint64_t id) const;

  std::uint64_t key() const noexcept { return key_; }

  double uniform();
  // Uniform integer in [0, bound).
  std::size_t index(std::size_t bound);
  double normal(double mean, double sd);
  double exponential(double rate);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit hash of a string label (FNV-1a), for deriving method streams.
std::uint64_t label_hash(const char* s);

}  // namespace svy
