#include "tsaw/rng.hpp"

#include <cmath>

namespace tsaw {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_replica_seed(std::uint64_t master, std::uint64_t replica) noexcept {
  return mix64(master ^ mix64(replica + kGolden));
}

double counter_exponential(std::uint64_t seed, std::uint64_t key, std::uint64_t index) noexcept {
  std::uint64_t h = mix64(seed + kGolden * (mix64(key) ^ (index + 1)));
  h = mix64(h ^ (key * 0xD6E8FEB86659FD93ULL));
  return -std::log(open_unit(h));
}

double Rng::exponential() { return -std::log(uniform()); }

}  // namespace tsaw
