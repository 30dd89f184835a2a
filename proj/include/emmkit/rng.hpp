#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

namespace emmkit {

inline constexpr std::uint64_t default_seed = 0x5EED;

/// Master seed: EMMKIT_SEED from the environment if set, else 0x5EED.
inline std::uint64_t seed_from_env() {
    if (const char* s = std::getenv("EMMKIT_SEED")) {
        try {
            return std::stoull(s, nullptr, 0);
        } catch (...) {
        }
    }
    return default_seed;
}

enum class StreamRole : std::uint32_t { brownian = 0, event_times = 1, marks = 2, thinning = 3 };

/// Philox4x32-10 keyed by the master seed; the counter carries (block, role, stream).
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox {
public:
    using result_type = std::uint64_t;

    Philox(std::uint64_t seed, std::uint64_t stream, StreamRole role)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0u, static_cast<std::uint32_t>(role), static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) {
            refill();
            pos_ = 0;
        }
        const std::size_t k = 2 * pos_++;
        return (static_cast<std::uint64_t>(buf_[k]) << 32) | buf_[k + 1];
    }

    /// Uniform on (0, 1), never exactly 0 or 1.
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform()); }

    /// Box-Muller; the second variate of each pair is kept for the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> x, std::array<std::uint32_t, 2> k) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * x[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * x[2];
            x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        return x;
    }

private:
    void refill() {
        buf_ = block(ctr_, key_);
        ++ctr_[0];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    std::size_t pos_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace emmkit
