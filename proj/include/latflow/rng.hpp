#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace latflow {

// Recorded in every manifest. Bump when any derivation below changes.
inline constexpr std::string_view kRngVersion = "splitmix64-counter/1+mt19937_64";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based word for (seed, stream, counter); independent of call order.
constexpr std::uint64_t stream_word(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + counter);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return stream_word(seed, 0x5eed, index);
}

// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Sequential generator for Monte Carlo paths. Uses its own [0,1) mapping
// because std::uniform_real_distribution is not portable bit-for-bit.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return to_unit(engine_()); }
  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

} // namespace latflow
