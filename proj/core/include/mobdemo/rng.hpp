#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mobdemo {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a named sub-seed ("split", "folds", "init", "dropout",
/// "subsample", ...) from a run-level seed. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view name) noexcept;

/// Same, with an additional integer index (fold number, household index).
std::uint64_t derive_seed(std::uint64_t base, std::string_view name, std::uint64_t index) noexcept;

} // namespace mobdemo
