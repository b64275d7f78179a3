#ifndef GPI_RNG_HPP_
#define GPI_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace gpi {

// Deterministic counter-based generator (splitmix64). All randomness in the
// library flows through this type so that runs are reproducible from a single
// seed across platforms; the standard <random> distributions are
// implementation-defined and are deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. No spare caching: two uniforms per draw,
  // so the stream position is independent of call history.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t state_;
};

// Fans a master seed out to independent per-component streams. Stream ids are
// documented in the config reference; the same (seed, stream) pair always
// yields the same generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  Rng r(master ^ (0xa0761d6478bd642fULL * (stream + 1)));
  return r.next_u64();
}

}  // namespace gpi

#endif  // GPI_RNG_HPP_
