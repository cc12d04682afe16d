// SPDX-License-Identifier: Apache-2.0
#include "shortdf/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shortdf {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view stream_name) {
    std::uint64_t mix = seed ^ fnv1a(stream_name);
    for (auto& word : state_.s) word = splitmix64(mix);
}

std::uint64_t RngStream::next_u64() {
    auto& s = state_.s;
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
    if (state_.has_gauss) {
        state_.has_gauss = false;
        return state_.gauss;
    }
    // u1 in (0,1] keeps the log finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    state_.gauss = r * std::sin(theta);
    state_.has_gauss = true;
    return r * std::cos(theta);
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::next_below: n must be positive");
    const std::uint64_t min = (-n) % n;  // 2^64 mod n
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r < min);
    return r % n;
}

int RngStream::uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("RngStream::uniform_int: empty range");
    auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
    return lo + static_cast<int>(next_below(span));
}

Sample gaussian_sample(RngStream& rng, std::size_t batch, std::size_t dims) {
    Sample s = Sample::zeros(batch, dims);
    for (auto& v : s.data) v = rng.next_gaussian();
    return s;
}

}  // namespace shortdf
