// Counter-based random number generation (Philox-4x32-10) with keyed,
// hierarchical substreams.  Every Monte Carlo experiment derives one stream
// per (seed, label path, item index); streams with distinct keys are
// statistically independent and reproducible regardless of scheduling.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fkmc {

// One application of the Philox-4x32 round function, 10 rounds, as published
// by Salmon, Moraes, Dror and Shaw (SC'11).  Exposed for known-answer tests.
std::array<uint32_t, 4> philox4x32_10(const std::array<uint32_t, 4>& counter,
                                      const std::array<uint32_t, 2>& key);

// Identifies an independent random stream.  `seed` is the user-facing seed;
// `state` folds the label path (experiment name, path index, ...) into 64
// bits.  Children are derived through a splitmix64 chain, so the same seed
// and label path always reproduce the same stream.
struct RngKey {
    uint64_t seed = 0;
    uint64_t state = 0;

    static RngKey root(uint64_t seed);
    RngKey child(std::string_view name, uint64_t index = 0) const;
};

// Convenience: root(seed).child(name, index).
RngKey substream(const RngKey& key, std::string_view name, uint64_t index = 0);

// Stream of uniforms/normals backed by Philox blocks.  The 128-bit counter
// starts at zero and increments per block, so a stream can produce 2^66
// draws without repeating; the key carries the substream identity.
class RandomStream {
  public:
    explicit RandomStream(const RngKey& key);

    uint32_t next_u32();
    // Uniform double in [0,1), 53 random bits (consumes two u32 words).
    double uniform();
    // Standard normal via the 128-layer ziggurat (exact distribution).
    double normal();
    // Exponential(1) via inversion (used by tail sampling and tests).
    double exponential();

    const RngKey& key() const { return key_; }

  private:
    void refill();

    RngKey key_;
    std::array<uint32_t, 2> philox_key_;
    std::array<uint32_t, 2> counter_salt_;
    uint64_t block_ = 0;
    std::array<uint32_t, 4> buf_{};
    int pos_ = 4;
};

// splitmix64 one-step mix, also used by the key derivation and tests.
uint64_t splitmix64(uint64_t& state);
uint64_t fnv1a64(std::string_view s);

}  // namespace fkmc
