#ifndef ECM_RANDOM_H_
#define ECM_RANDOM_H_

#include <cstdint>

namespace ecm {

// SplitMix64 finalizer; used to derive independent stream seeds from a base
// seed so results do not depend on how work is sharded.
inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t StreamSeed(uint64_t base, uint64_t stream) {
  return SplitMix64(SplitMix64(base) ^ SplitMix64(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace ecm

#endif  // ECM_RANDOM_H_
