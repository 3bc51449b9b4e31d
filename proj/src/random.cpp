#include "irsse/random.hpp"

namespace irsse {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t seed, std::uint64_t trial, StreamTag tag) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ trial);
  key = splitmix64(key ^ static_cast<std::uint64_t>(tag));
  return RandomStream(key);
}

}  // namespace irsse
