#include "krw/random.hpp"

namespace krw {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6b72774cU};
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), eng_(make_engine(seed, stream_id)) {}

RandomStream RandomStream::child(std::uint64_t sub_id) const {
  // Mix the parent id into the upper half so children of different parents differ.
  std::uint64_t id = (stream_ * 0x9e3779b97f4a7c15ULL) ^ (sub_id + 0x632be59bd9b4e019ULL);
  return RandomStream(seed_, id);
}

RandomStream RandomStream::substream(std::uint64_t salt, std::uint64_t index) const {
  std::uint64_t id = salt ^ ((index + 1) * 0xbf58476d1ce4e5b9ULL);
  id ^= id >> 31;
  return RandomStream(seed_, id);
}

}  // namespace krw
