#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace pipf {

/// What a stream is used for. Part of the stream key so that unrelated draws
/// never share random numbers.
enum class StreamPurpose : std::uint64_t {
  initial = 1,
  truth_initial,
  truth,
  observation,
  propagate,
  resample,
  path_integral,
  model_generation,
  test,
};

/// Identifies one independent random stream. Two streams with equal ids
/// produce identical sequences, whatever order they are created or consumed in.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  StreamPurpose purpose = StreamPurpose::test;
  std::uint64_t window = 0;
  std::uint64_t particle = 0;

  StreamId with_purpose(StreamPurpose p) const {
    StreamId id = *this;
    id.purpose = p;
    return id;
  }
  StreamId with_window(std::uint64_t w) const {
    StreamId id = *this;
    id.window = w;
    return id;
  }
  StreamId with_particle(std::uint64_t k) const {
    StreamId id = *this;
    id.particle = k;
    return id;
  }

  std::uint64_t key() const;
};

/// SplitMix64 generator. Cheap to construct, which matters because a fresh
/// stream is created per (window, particle).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class RandomStream {
 public:
  explicit RandomStream(const StreamId& id) : engine_(id.key()) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }

  SplitMix64& engine() { return engine_; }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace pipf
