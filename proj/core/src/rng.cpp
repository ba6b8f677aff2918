#include "mobdemo/rng.hpp"

namespace mobdemo {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) noexcept {
    return mix64(mix64(base) ^ fnv1a(name));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view name, std::uint64_t index) noexcept {
    return mix64(derive_seed(base, name) + mix64(index));
}

} // namespace mobdemo
