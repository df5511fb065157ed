#pragma once

#include <array>
#include <cstdint>

namespace sausage {

// Stream identifiers. Every consumer of randomness draws from its own stream
// so that, e.g., volume sampling noise is independent of path noise.
enum class Stream : std::uint32_t {
  PathIncrements = 0,
  BridgeRefine = 1,
  VolumeSamples = 2,
  HittingTrials = 3,
  Bootstrap = 4,
  Synthetic = 5,
};

// Philox4x32-10 counter-based generator. The output is a pure function of
// (key, replica, stream, position), which makes replicas independently
// reproducible without sequential dependence.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint32_t replica, Stream stream,
             std::uint32_t substream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos();
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t replica_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive sub-seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace sausage
