#include "dkf/random.hpp"

#include <cmath>
#include <numbers>

namespace dkf {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t master_seed, const StreamId& id) {
  const std::uint64_t k = splitmix64(master_seed);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::uint64_t h = splitmix64(id.run);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(id.sensor) << 32 |
                      static_cast<std::uint32_t>(id.role)));
  h = splitmix64(h ^ id.extra);
  stream_hash_ = h;
}

void RandomStream::refill() {
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_),
                        static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_hash_),
                        static_cast<std::uint32_t>(stream_hash_ >> 32)},
                       key_);
  ++block_;
  buffered_ = 4;
}

std::uint64_t RandomStream::next_u64() {
  if (buffered_ < 2) refill();
  const std::uint64_t lo = buffer_[static_cast<std::size_t>(4 - buffered_)];
  const std::uint64_t hi = buffer_[static_cast<std::size_t>(5 - buffered_)];
  buffered_ -= 2;
  return (hi << 32) | lo;
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

}  // namespace dkf
