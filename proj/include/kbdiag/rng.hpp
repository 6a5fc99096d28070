#pragma once
#include <cstdint>

namespace kbdiag {

// Small counter-seeded generator (splitmix64 core). Each logical stream is
// derived from (base_seed, stream_index), so parallel consumers get
// reproducible draws regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t base_seed, std::uint64_t index) {
    // one mixing round separates the (seed, index) pairs before use
    Rng r(base_seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1], safe as an argument to log()
  double next_double_pos() { return 1.0 - next_double(); }

 private:
  std::uint64_t state_;
};

}  // namespace kbdiag
