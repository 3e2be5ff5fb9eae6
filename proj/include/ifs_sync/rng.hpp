#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace ifs_sync {

//! 64-bit finalizer from SplitMix64 (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

//! FNV-1a over a tag, used to name substreams.
constexpr std::uint64_t stream_tag(std::string_view tag) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/*!
 * Counter-based SplitMix64 stream.
 *
 * Output k of the stream keyed by (seed, stream) is mix64(key + (k+1)*gamma),
 * so every (seed, stream) pair names a reproducible, platform independent
 * sequence. Parallel work derives one stream per task index.
 */
class Rng
{
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : state_(mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL)))
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept
    {
        state_ += kGamma;
        return mix64(state_);
    }

    //! Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept
    {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    //! Uniform double in [lo, hi).
    double uniform(double lo, double hi) noexcept
    {
        return lo + (hi - lo) * uniform();
    }

    __extension__ using u128 = unsigned __int128;

    //! Uniform integer in [0, n); n > 0. Lemire's nearly-divisionless method.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        u128 m = static_cast<u128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = -n % n;
            while (low < threshold) {
                m = static_cast<u128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    //! Independent child stream; does not advance this stream.
    Rng fork(std::uint64_t index) const noexcept { return Rng(state_, index); }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_;
};

} // namespace ifs_sync
