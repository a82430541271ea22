#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "irsmusic/geometry.hpp"

namespace irsmusic {

using Rng = std::mt19937_64;

// Independent, reproducible substream for (seed, tags...). Trials, cells and
// stages of an experiment each get their own tag tuple so that results do not
// depend on scheduling order or worker count.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint32_t> tags = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + tags.size());
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    words.insert(words.end(), tags.begin(), tags.end());
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// One draw from the standard circularly-symmetric complex Gaussian CN(0, 1):
// real and imaginary parts are independent N(0, 1/2).
inline std::complex<double> complex_gaussian(Rng& rng) {
    std::normal_distribution<double> component(0.0, std::numbers::sqrt2 / 2.0);
    const double re = component(rng);
    const double im = component(rng);
    return {re, im};
}

inline double uniform_phase(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, kTwoPi);
    return dist(rng);
}

}  // namespace irsmusic
