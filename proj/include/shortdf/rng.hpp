// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_RNG_HPP
#define SHORTDF_RNG_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "shortdf/sample.hpp"

namespace shortdf {

// Serializable generator state: xoshiro256++ core plus the Box-Muller spare.
struct RngState {
    std::array<std::uint64_t, 4> s{1, 2, 3, 4};
    bool has_gauss = false;
    double gauss = 0.0;

    bool operator==(const RngState&) const = default;
};

// Deterministic random stream. Seeding mixes a run seed with a stream name so
// independent concerns (data noise, step pairs, init) draw from disjoint
// streams and ablations share noise realizations.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::string_view stream_name);

    std::uint64_t next_u64();
    double next_double();          // uniform [0, 1)
    double next_gaussian();        // standard normal (Box-Muller pair, cached)
    std::uint64_t next_below(std::uint64_t n);  // uniform [0, n), rejection sampled
    int uniform_int(int lo, int hi);            // uniform inclusive range

    const RngState& state() const { return state_; }
    void set_state(const RngState& st) { state_ = st; }

private:
    RngState state_;
};

Sample gaussian_sample(RngStream& rng, std::size_t batch, std::size_t dims);

}  // namespace shortdf

#endif
