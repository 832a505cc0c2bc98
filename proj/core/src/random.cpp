#include "sot/random.hpp"

#include <limits>

#include "sot/error.hpp"

namespace sot {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t split_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) {
  std::uint64_t s = splitmix64(parent);
  s = splitmix64(s ^ fnv1a(label));
  return splitmix64(s ^ (index * 0xd1342543de82ef95ULL));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw_invalid("Rng::below requires a positive bound");
  // Rejection sampling on the top of the range removes modulo bias.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

}  // namespace sot
