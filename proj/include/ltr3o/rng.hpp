#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ltr3o {

// Deterministic keyed random stream. The same (seed, tag) pair always yields
// the identical sequence, on every platform; distinct tags yield independent
// streams. All randomized pipeline stages must draw from these streams so a
// run is reproducible from its config alone.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view tag);

  std::uint64_t next_u64();
  // Uniform in [0, 1), 53-bit resolution.
  double next_real();
  // Uniform integer in [lo, hi], inclusive. Rejection sampled, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal(double mean = 0.0, double stddev = 1.0);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

RngStream make_rng(std::uint64_t seed, std::string_view tag);

}  // namespace ltr3o
