#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace metasrm {

// Deterministic keyed random stream.
//
// Streams are derived from an ordered tuple of 64-bit words (base seed,
// replication, agent, task, phase, ...) so that adding or reordering agents
// never perturbs draws made from streams keyed without the agent word.
// The generator is xoshiro256++ with its state expanded from the key via
// splitmix64; all samplers are implemented here so that a given (key, call
// sequence) produces the same bytes on every platform and compiler.
class Rng {
 public:
  Rng() : Rng({0}) {}
  explicit Rng(std::initializer_list<std::uint64_t> key);
  explicit Rng(std::span<const std::uint64_t> key);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (one value per pair of uniforms).
  double normal();
  double normal(double mean, double stddev);

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Unit scale.
  double gamma(double shape);
  double beta(double alpha, double beta);
  bool bernoulli(double p);

 private:
  std::uint64_t s_[4];
};

// 64-bit mixing used for both stream keying and data fingerprints.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_words(std::span<const std::uint64_t> words);
std::uint64_t hash_bytes(const void* data, std::size_t len);

// Streams for one (base seed, replication, agent) slot. Environment draws
// use the reserved agent id so agent lists never affect them.
class StreamFactory {
 public:
  static constexpr std::uint64_t kEnvAgent = 0xE21F0EED5EEDED01ULL;

  StreamFactory(std::uint64_t base_seed, std::uint64_t replication,
                std::uint64_t agent)
      : base_seed_(base_seed), replication_(replication), agent_(agent) {}

  // Policy, reward, and recommendation randomness for one task.
  Rng task_stream(std::uint64_t task) const;
  // Per-replication setup randomness (e.g. sampled prior misspecification).
  Rng setup_stream() const;

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t replication() const { return replication_; }
  std::uint64_t agent() const { return agent_; }

 private:
  std::uint64_t base_seed_, replication_, agent_;
};

}  // namespace metasrm
