#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace medsurv {

// Philox4x32-10 counter-based stream keyed by (seed, label path).
//
// Two streams built from the same seed and label produce bit-identical
// output. Streams with different labels use different keys and are
// statistically independent, so replicate r can own the substream
// "rep/r" regardless of which worker evaluates it.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label);

  RandomStream substream(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  std::vector<Eigen::Index> permutation(Eigen::Index n);

 private:
  void refill();

  std::uint64_t seed_;
  std::string label_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace medsurv
