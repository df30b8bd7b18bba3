#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace xyzff {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx imag_unit{0.0, 1.0};

// ---------------------------------------------------------------------------
// Error taxonomy. Construction/evaluation failures are distinguished from
// tolerance failures by the harness (exit codes 4 vs 3).
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidModulus : Error {
    using Error::Error;
};
struct TruncationOverflow : Error {
    using Error::Error;
};
struct PoleCollision : Error {
    using Error::Error;
};
struct GaugeSingularity : Error {
    using Error::Error;
};
struct DimensionOverflow : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct SingularMatrix : Error {
    using Error::Error;
};
struct RootCountMismatch : Error {
    using Error::Error;
};
struct TwinPairingFailure : Error {
    using Error::Error;
};
struct DerivativeSingularity : Error {
    using Error::Error;
};
struct EvaluationPointSingular : Error {
    using Error::Error;
};
struct DegenerateNormalization : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Anisotropy parameter. The free-fermion machinery needs eta = 1/2 held
// exactly (its Fourier phases are integer powers of i); the vertex-model
// builders accept a generic complex value.
// ---------------------------------------------------------------------------

class Eta {
  public:
    static Eta half() { return Eta(cplx(0.5, 0.0), true); }
    static Eta generic(cplx value) { return Eta(value, value == cplx(0.5, 0.0)); }

    cplx value() const { return value_; }
    bool is_exact_half() const { return exact_half_; }

    void require_half(const char* where) const {
        if (!exact_half_)
            throw Error(std::string(where) + ": requires eta = 1/2 exactly");
    }

  private:
    Eta(cplx v, bool half) : value_(v), exact_half_(half) {}
    cplx value_;
    bool exact_half_;
};

// i^k for integer k (negative allowed). Exact, no trig roundoff.
inline cplx unit_i_pow(long k) {
    switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

// exp(+i*pi*eta*k) at eta = 1/2, i.e. i^k.
inline cplx half_eta_phase(long k) { return unit_i_pow(k); }

inline int parity_sign(long k) { return (k % 2 == 0) ? 1 : -1; }

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace xyzff
