#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace liebn {

/// Philox4x32-10 counter-based generator. A block of four 32-bit words is a
/// pure function of (key, counter), so streams can be evaluated at any index
/// in any order — parallel sampling stays bitwise reproducible.
namespace philox {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(Block& x, const Key& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}
}  // namespace detail

/// Ten-round Philox4x32 block function.
inline Block block(Block counter, Key key) {
  for (int r = 0; r < 10; ++r) {
    detail::round_once(counter, key);
    key[0] += detail::kWeyl0;
    key[1] += detail::kWeyl1;
  }
  return counter;
}

}  // namespace philox

/// Stateless stream of N(0,1) doubles addressed by (element, slot).
/// `stream` separates independent draws within one run (fresh comparison
/// samples, perturbation probes, ...) without touching the seed.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed, std::uint32_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  /// slot-th standard normal of the given element, Box-Muller on 53-bit uniforms.
  double normal(std::uint64_t element, std::uint32_t slot) const {
    const philox::Block ctr = {slot / 2, static_cast<std::uint32_t>(element),
                               static_cast<std::uint32_t>(element >> 32), stream_};
    const philox::Block out = philox::block(ctr, key_);
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return (slot % 2 == 0) ? r * std::cos(a) : r * std::sin(a);
  }

  /// 53-bit uniform in (0,1), never exactly 0 or 1.
  double uniform(std::uint64_t element, std::uint32_t slot) const {
    const philox::Block ctr = {slot, static_cast<std::uint32_t>(element),
                               static_cast<std::uint32_t>(element >> 32), stream_ ^ 0x80000000u};
    const philox::Block out = philox::block(ctr, key_);
    return to_unit(out[0], out[1]);
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
  }

  philox::Key key_;
  std::uint32_t stream_;
};

}  // namespace liebn
