#include "fkmc/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fkmc {

namespace {

// Philox-4x32 round constants (Salmon et al., SC'11).
constexpr uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mul_hilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = uint64_t(a) * uint64_t(b);
    hi = uint32_t(p >> 32);
    lo = uint32_t(p);
}

inline std::array<uint32_t, 4> philox_round(const std::array<uint32_t, 4>& c,
                                            const std::array<uint32_t, 2>& k) {
    uint32_t hi0, lo0, hi1, lo1;
    mul_hilo(kPhiloxM4x32A, c[0], hi0, lo0);
    mul_hilo(kPhiloxM4x32B, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<uint32_t, 4> philox4x32_10(const std::array<uint32_t, 4>& counter,
                                      const std::array<uint32_t, 2>& key) {
    std::array<uint32_t, 4> c = counter;
    std::array<uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        c = philox_round(c, k);
        k[0] += kPhiloxW32A;
        k[1] += kPhiloxW32B;
    }
    return c;
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

RngKey RngKey::root(uint64_t seed) {
    uint64_t s = seed ^ 0x5851F42D4C957F2DULL;
    return RngKey{seed, splitmix64(s)};
}

RngKey RngKey::child(std::string_view name, uint64_t index) const {
    uint64_t s = state ^ fnv1a64(name);
    uint64_t a = splitmix64(s);
    s = a ^ index;
    uint64_t b = splitmix64(s);
    return RngKey{seed, b};
}

RngKey substream(const RngKey& key, std::string_view name, uint64_t index) {
    return key.child(name, index);
}

RandomStream::RandomStream(const RngKey& key) : key_(key) {
    uint64_t s = key.state;
    uint64_t salt = splitmix64(s);
    philox_key_ = {uint32_t(key.state), uint32_t(key.state >> 32)};
    counter_salt_ = {uint32_t(salt), uint32_t(salt >> 32)};
}

void RandomStream::refill() {
    std::array<uint32_t, 4> ctr = {uint32_t(block_), uint32_t(block_ >> 32),
                                   counter_salt_[0], counter_salt_[1]};
    buf_ = philox4x32_10(ctr, philox_key_);
    ++block_;
    pos_ = 0;
}

uint32_t RandomStream::next_u32() {
    if (pos_ >= 4) refill();
    return buf_[pos_++];
}

double RandomStream::uniform() {
    uint64_t lo = next_u32();
    uint64_t hi = next_u32();
    uint64_t bits = (hi << 32) | lo;
    return double(bits >> 11) * 0x1.0p-53;
}

double RandomStream::exponential() {
    // -log of a uniform in (0,1]; 1-u maps [0,1) into (0,1].
    return -std::log1p(-uniform());
}

namespace {

// 128-layer ziggurat for the standard normal, double-precision variant of
// Marsaglia & Tsang (2000).  Tables are built once at startup.
struct ZigguratTables {
    double w[128];  // layer half-width scale per unit of |signed u32|
    double f[128];  // exp(-x_i^2/2) at the layer edge
    uint32_t k[128];
    static constexpr double kR = 3.442619855899;

    ZigguratTables() {
        const double m1 = 2147483648.0;  // 2^31, |int32| range
        const double vn = 9.91256303526217e-3;
        double dn = kR, tn = kR;
        double q = vn / std::exp(-0.5 * dn * dn);
        k[0] = uint32_t((dn / q) * m1);
        k[1] = 0;
        w[0] = q / m1;
        w[127] = dn / m1;
        f[0] = 1.0;
        f[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            k[i + 1] = uint32_t((dn / tn) * m1);
            tn = dn;
            f[i] = std::exp(-0.5 * dn * dn);
            w[i] = dn / m1;
        }
    }
};

const ZigguratTables& zig() {
    static const ZigguratTables tables;
    return tables;
}

}  // namespace

double RandomStream::normal() {
    const ZigguratTables& z = zig();
    for (;;) {
        int32_t hz = int32_t(next_u32());
        uint32_t iz = uint32_t(hz) & 127u;
        uint32_t ahz = hz < 0 ? uint32_t(-int64_t(hz)) : uint32_t(hz);
        if (ahz < z.k[iz]) return hz * z.w[iz];
        if (iz == 0) {
            // Base layer: sample the tail beyond R by Marsaglia's method.
            double x, y;
            do {
                x = -std::log1p(-uniform()) / ZigguratTables::kR;
                y = -std::log1p(-uniform());
            } while (y + y < x * x);
            return hz > 0 ? ZigguratTables::kR + x : -(ZigguratTables::kR + x);
        }
        double x = hz * z.w[iz];
        if (z.f[iz] + uniform() * (z.f[iz - 1] - z.f[iz]) <
            std::exp(-0.5 * x * x))
            return x;
    }
}

}  // namespace fkmc
