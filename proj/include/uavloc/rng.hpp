#ifndef UAVLOC_RNG_HPP
#define UAVLOC_RNG_HPP

#include <cstdint>

namespace uavloc {

// All randomness in the toolkit flows from one top-level seed; sub-seeds
// are derived with splitmix64 so modules stay decoupled and deterministic.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

}  // namespace uavloc

#endif
