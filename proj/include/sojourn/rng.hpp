#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sojourn {

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
class Philox {
public:
    using result_type = std::uint32_t;

    Philox(std::uint64_t key_lo, std::uint64_t key_hi = 0) { seed(key_lo, key_hi); }

    void seed(std::uint64_t key_lo, std::uint64_t key_hi = 0)
    {
        key_ = {static_cast<std::uint32_t>(key_lo), static_cast<std::uint32_t>(key_lo >> 32)};
        stream_ = key_hi;
        ctr_ = 0;
        idx_ = 4;
        has_spare_ = false;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xffffffffu; }

    result_type operator()()
    {
        if (idx_ == 4) refill();
        return buf_[idx_++];
    }

    std::uint64_t next_u64()
    {
        std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    // uniform in (0,1), 53 bits
    double uniform()
    {
        return ((next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Box-Muller; spelled out so streams match across standard libraries
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    // jump to an arbitrary block of the stream
    void set_counter(std::uint64_t c)
    {
        ctr_ = c;
        idx_ = 4;
        has_spare_ = false;
    }

private:
    std::array<std::uint32_t, 2> key_{};
    std::uint64_t stream_ = 0;
    std::uint64_t ctr_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int idx_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;

    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
    {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void refill()
    {
        std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(ctr_),
                                       static_cast<std::uint32_t>(ctr_ >> 32),
                                       static_cast<std::uint32_t>(stream_),
                                       static_cast<std::uint32_t>(stream_ >> 32)};
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c[0], hi0, lo0);
            mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        buf_ = c;
        ++ctr_;
        idx_ = 0;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Seed128 {
    std::uint64_t lo, hi;
    bool operator==(const Seed128&) const = default;
};

// Replicate r of a run seeded by master.
inline Seed128 derive_seed(std::uint64_t master, std::uint64_t r)
{
    std::uint64_t a = splitmix64(master ^ 0x243F6A8885A308D3ull);
    std::uint64_t b = splitmix64(r + 0x13198A2E03707344ull);
    return {splitmix64(a ^ (b << 1)), splitmix64(b ^ (a >> 1) ^ 0xA4093822299F31D0ull)};
}

inline Philox make_rng(Seed128 s) { return Philox(s.lo, s.hi); }

} // namespace sojourn
