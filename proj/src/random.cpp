#include "mcsync/random.hpp"

namespace mcsync {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t v : stream) {
    h = splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
  }
  return h;
}

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
  std::uint64_t x = seed;
  for (auto& s : state_) {
    x += 0x9e3779b97f4a7c15ULL;
    s = splitmix64(x);
  }
}

}  // namespace mcsync
