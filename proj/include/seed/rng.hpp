#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace seed {

/// splitmix64 step; used both for seeding and for deriving named sub-streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// 64-bit FNV-1a over the bytes of a name.
std::uint64_t fnv1a64(std::string_view name);

/// xoshiro256** 1.0 generator with Box-Muller normals.
///
/// The full generation order is fixed so that any implementation can
/// reproduce the streams:
///   - seeding fills the four state words from successive splitmix64 outputs;
///   - uniform() = (next() >> 11) * 2^-53, in [0, 1);
///   - below(n) = next() % n;
///   - normal() draws u1 = 1 - uniform() in (0, 1] and u2 = uniform(),
///     returns sqrt(-2 ln u1) cos(2 pi u2) and caches sqrt(-2 ln u1) sin(2 pi u2)
///     for the following call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Sub-stream for a named purpose ("data", "init", "shuffle", ...).
  static Rng substream(std::uint64_t global_seed, std::string_view name);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  double normal();

  struct Snapshot {
    std::array<std::uint64_t, 4> s{};
    bool has_spare = false;
    double spare = 0.0;
    bool operator==(const Snapshot&) const = default;
  };
  Snapshot snapshot() const { return {s_, has_spare_, spare_}; }
  void restore(const Snapshot& snap);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace seed
