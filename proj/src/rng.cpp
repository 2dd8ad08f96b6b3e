#include "metasrm/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace metasrm {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  return splitmix_next(x);
}

std::uint64_t hash_words(std::span<const std::uint64_t> words) {
  std::uint64_t h = 0xA0761D6478BD642FULL;
  for (std::uint64_t w : words) {
    h = splitmix_next(h) ^ mix64(w);
  }
  return mix64(h);
}

std::uint64_t hash_bytes(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0x243F6A8885A308D3ULL ^ len;
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    std::uint64_t w = 0;
    for (int b = 0; b < 8; ++b) w |= std::uint64_t(p[i + b]) << (8 * b);
    h = splitmix_next(h) ^ mix64(w);
  }
  std::uint64_t tail = 0;
  for (int b = 0; i < len; ++i, ++b) tail |= std::uint64_t(p[i]) << (8 * b);
  h = splitmix_next(h) ^ mix64(tail);
  return mix64(h);
}

Rng::Rng(std::initializer_list<std::uint64_t> key)
    : Rng(std::span<const std::uint64_t>(key.begin(), key.size())) {}

Rng::Rng(std::span<const std::uint64_t> key) {
  std::uint64_t seed = hash_words(key);
  for (auto& w : s_) w = splitmix_next(seed);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection to remove modulo bias.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    const double u = uniform_pos();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("beta: parameters must be > 0");
  }
  const double x = gamma(alpha);
  const double y = gamma(beta);
  return x / (x + y);
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::invalid_argument("bernoulli: p must be in [0,1]");
  }
  return uniform() < p;
}

namespace {
// Phase words keep the per-task streams of one slot disjoint.
constexpr std::uint64_t kPhaseTask = 0x01;
constexpr std::uint64_t kPhaseSetup = 0x02;
}  // namespace

Rng StreamFactory::task_stream(std::uint64_t task) const {
  return Rng({base_seed_, replication_, agent_, task, kPhaseTask});
}

Rng StreamFactory::setup_stream() const {
  return Rng({base_seed_, replication_, agent_, 0, kPhaseSetup});
}

}  // namespace metasrm
