#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rcb {

/// Philox4x32-10 counter-based generator. A (seed, stream_id) pair fixes the
/// whole sequence; distinct streams never share counters.
class Philox {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  Philox(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0,1), 53-bit resolution.
  double uniform();

  static Block bijection(Block counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block out_{};
  int used_ = 4;
};

}  // namespace rcb
