#pragma once

#include <cstdint>
#include <random>

namespace tsaw {

// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Counter-based stream derivation: seed_i = mix64(master ^ mix64(i + golden)).
// Injective in i for a fixed master because each stage is a bijection.
std::uint64_t derive_replica_seed(std::uint64_t master, std::uint64_t replica) noexcept;

// Uniform in the open interval (0,1) from the top 53 bits of a word.
inline double open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Unit exponential determined entirely by (seed, key, index).
double counter_exponential(std::uint64_t seed, std::uint64_t key, std::uint64_t index) noexcept;

// Per-replica generator. Draws go through our own transforms rather than
// std:: distributions so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return open_unit(engine_()); }
  double exponential();

 private:
  std::mt19937_64 engine_;
};

}  // namespace tsaw
