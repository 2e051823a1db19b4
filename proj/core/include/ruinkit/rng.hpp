#pragma once

#include <array>
#include <cstdint>

namespace ruinkit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

std::uint64_t splitmix64(std::uint64_t x);

// Mixes a tag into a seed; used to give each engine purpose its own key space.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x9e3779b97f4a7c15ULL));
}

// A stream of variates addressed by (seed, stream_id). The i-th 128-bit block
// of a stream is Philox(counter = (i, stream_id), key = f(seed)), so streams
// are independent of how work is scheduled across threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  double exponential(double mean);
  // Marsaglia-Tsang; shape > 0.
  double gamma(double shape, double scale);

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill();

  Philox4x32::Key key_{};
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
};

}  // namespace ruinkit
