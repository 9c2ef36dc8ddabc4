#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tensometa {

inline constexpr std::string_view kVersion = "0.3.1";

/// Error raised by every module; the message is prefixed with the module name.
class Error : public std::runtime_error {
public:
    Error(std::string_view module, const std::string& what)
        : std::runtime_error(std::string(module) + ": " + what), module_(module) {}

    [[nodiscard]] const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

// SplitMix64 finalizer. Used to derive independent per-task seeds from one
// top-level seed, so results do not depend on scheduling.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                                  std::uint64_t b = 0) noexcept {
    return mix64(mix64(mix64(seed) ^ a) + 0x632be59bd9b4e019ULL * (b + 1));
}

using Rng = std::mt19937_64;

[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                                  std::uint64_t sub = 0) {
    return Rng(derive_seed(seed, stream, sub));
}

// Stream tags keep the purposes of derived streams apart.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kLatent = 2;
inline constexpr std::uint64_t kTrajectory = 3;
inline constexpr std::uint64_t kMeasurement = 4;
inline constexpr std::uint64_t kGraph = 5;
inline constexpr std::uint64_t kData = 6;
inline constexpr std::uint64_t kShuffle = 7;
inline constexpr std::uint64_t kVariance = 8;
inline constexpr std::uint64_t kDirectInit = 9;
} // namespace stream

} // namespace tensometa
