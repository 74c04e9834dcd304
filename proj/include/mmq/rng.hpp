#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mmq {

/// splitmix64 finalizer; used to derive well-separated stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random stream for the simulators.
///
/// std::mt19937_64 is fully specified by the standard, and the conversions to
/// uniform/exponential variates below are done by hand (the std distributions
/// are implementation-defined), so a stream is bit-reproducible for a given
/// (seed, stream index) on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent stream `index` of the family rooted at `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(splitmix64(index + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform on (0, 1].
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mmq
