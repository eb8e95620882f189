#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every stream is addressed by (master seed, run, sensor, role, extra); the
// draws of one stream never depend on how many other streams exist or on the
// order in which they are consumed, so Monte Carlo runs can be distributed
// over any number of workers without changing a single bit.

#include <array>
#include <cstdint>

namespace dkf {

enum class StreamRole : std::uint32_t {
  kParameter = 1,      // parameter increments delta_k
  kRegressor = 2,      // regressor innovations xi_{k,i}
  kObservationNoise = 3,
  kDiagnostics = 4,    // Monte Carlo futures for excitation estimates
  kTest = 5,
};

struct StreamId {
  std::uint64_t run = 0;
  std::uint32_t sensor = 0;
  StreamRole role = StreamRole::kTest;
  std::uint64_t extra = 0;
};

/// One Philox4x32-10 block: 4 output words for a 128-bit counter and 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, const StreamId& id);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  /// Standard normal (Box-Muller, pairs cached).
  double normal();

  std::uint64_t next_u64();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_hash_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace dkf
