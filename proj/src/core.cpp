#include "delayrecon/core.hpp"
#include "delayrecon/random.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <utility>

namespace delayrecon {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink_ref() {
    static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex());
    return std::exchange(sink_ref(), std::move(sink));
}

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (sink_ref()) sink_ref()(message);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept {
    // FNV-1a over the tag, folded into the root.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(root) ^ h);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(mix64(root) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

double unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t col) noexcept {
    const std::uint64_t h = derive_seed(seed, row, col);
    const double u1 = unit_open(h);
    const double u2 = unit_open(mix64(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform01(Rng& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace delayrecon
