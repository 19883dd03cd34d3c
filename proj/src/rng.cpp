#include "svy/rng.hpp"

namespace svy {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t label_hash(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s != '\0'; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t combine(std::uint64_t key, std::uint64_t id) { return splitmix64(key ^ splitmix64(id)); }

}  // namespace

Stream::Stream(std::uint64_t seed) : key_(splitmix64(seed)), engine_(key_) {}

Stream::Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : key_(splitmix64(seed)) {
  for (auto id : path) key_ = combine(key_, id);
  engine_.seed(key_);
}

Stream Stream::substream(std::uint64_t id) const {
  Stream child(0);
  child.key_ = combine(key_, id);
  child.engine_.seed(child.key_);
  return child;
}

double Stream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::size_t Stream::index(std::size_t bound) {
  return std::uniform_int_distribution<std::size_t>(0, bound - 1)(engine_);
}

double Stream::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(engine_);
}

double Stream::exponential(double rate) {
  return std::exponential_distribution<double>(rate)(engine_);
}

}  // namespace svy
