#pragma once

#include <cstdint>
#include <random>

namespace krw {

// A reproducible generator identified by (seed, stream id). Streams with
// different ids are seeded through std::seed_seq from disjoint inputs.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t bits() { return eng_(); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double normal() { return normal_(eng_); }
  double exponential() { return std::exponential_distribution<double>(1.0)(eng_); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_); }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return eng_; }

  // Child stream derived deterministically from this stream's identity.
  RandomStream child(std::uint64_t sub_id) const;
  // Independent streams for a batch of parallel tasks. The salt is drawn from
  // this stream, so repeated batches from one stream do not share randomness.
  std::uint64_t draw_salt() { return eng_(); }
  RandomStream substream(std::uint64_t salt, std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace krw
