#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "core.hpp"

namespace xyzff {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard and the double extraction below avoids the implementation-defined
// std::uniform_real_distribution, so identical seeds give identical draws on
// every platform. Reports rely on this.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    double unit() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    cplx box(double re_lo, double re_hi, double im_lo, double im_hi) {
        double re = uniform(re_lo, re_hi);
        double im = uniform(im_lo, im_hi);
        return {re, im};
    }

    // Complex value with both components in [-r, r].
    cplx centered(double r) { return box(-r, r, -r, r); }

    std::uint64_t raw() { return gen_(); }

    // Independent stream derived from a label; gives every check its own
    // reproducible randomness independent of execution order.
    Rng child(std::string_view label) const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : label) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ull;
        }
        return Rng(splitmix(seed_ ^ h));
    }

  private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace xyzff
