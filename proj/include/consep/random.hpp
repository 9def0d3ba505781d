#ifndef CONSEP_RANDOM_HPP
#define CONSEP_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace consep {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Output depends only
/// on (counter, key), so any path can be regenerated in any order.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter c, Key k) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t{M0} * c[0];
            const std::uint64_t p1 = std::uint64_t{M1} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += W0;
            k[1] += W1;
        }
        return c;
    }
};

/// Sequential draws from the Philox stream keyed by (seed, path, stream).
/// The 64-bit seed is the key; the path id and stream id fill the upper
/// counter words; the lower two words count blocks.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path, std::uint32_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_(path), stream_(stream) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buf_ = Philox4x32::block({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(path_),
                                      static_cast<std::uint32_t>(path_ >> 32), stream_},
                                     key_);
            ++block_;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on (0, 1), never exactly 0 or 1 (53-bit resolution).
    double uniform() {
        const std::uint64_t hi = next_u32() >> 5, lo = next_u32() >> 6;
        return ((hi << 26 | lo) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box-Muller; the second variate is cached.
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

    /// Exp(rate) by inversion.
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    Philox4x32::Key key_;
    std::uint64_t path_;
    std::uint32_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace consep

#endif  // CONSEP_RANDOM_HPP
