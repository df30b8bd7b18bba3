#pragma once

#include <cmath>
#include <cstdlib>

#include "core.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Jacobi theta functions, nome q = exp(i*pi*tau):
//
//   theta1(u|tau) = 2 sum_{k>=0} (-1)^k q^{(k+1/2)^2} sin((2k+1) pi u)
//   theta2(u|tau) = 2 sum_{k>=0}        q^{(k+1/2)^2} cos((2k+1) pi u)
//   theta3(u|tau) = 1 + 2 sum_{k>=1}        q^{k^2} cos(2k pi u)
//   theta4(u|tau) = 1 + 2 sum_{k>=1} (-1)^k q^{k^2} cos(2k pi u)
//
// Arguments are reduced into the cell 0 <= Re u < 1, |Im u| <= Im(tau)/2
// through the quasi-periodicity
//
//   theta_a(u + 1)   = s1_a * theta_a(u)
//   theta_a(u + tau) = s2_a * exp(-i*pi*(2u + tau)) * theta_a(u)
//
// before summing, and the accumulated prefactor is reapplied. Without the
// reduction the series loses all accuracy once |Im u| is a few multiples of
// Im(tau). The truncation order is chosen adaptively from the tail bound and
// certified against eps_target.
// ---------------------------------------------------------------------------

struct ModularContext {
    cplx tau;
    cplx q;                    // exp(i*pi*tau), derived
    double eps_target = 1e-14; // absolute series-tail bound
    int k_max_cap = 64;        // hard truncation ceiling
    double im_floor = 0.05;    // minimum Im(tau)

    explicit ModularContext(cplx tau_, double eps = 1e-14, int cap = 64, double floor = 0.05)
        : tau(tau_), eps_target(eps), k_max_cap(cap), im_floor(floor) {
        if (!(tau.imag() >= im_floor))
            throw InvalidModulus("ModularContext: Im(tau) below floor");
        q = std::exp(imag_unit * pi * tau);
        if (!(std::abs(q) < 1.0))
            throw InvalidModulus("ModularContext: |q| >= 1");
    }
};

// Record of the lattice reduction applied to an argument.
struct EllipticPoint {
    cplx u;        // reduced argument
    long shift_1;  // subtracted multiples of 1
    long shift_tau;// subtracted multiples of tau
};

namespace theta_detail {

inline EllipticPoint reduce(cplx u, cplx tau_s) {
    long r = std::lround(u.imag() / tau_s.imag());
    cplx u1 = u - static_cast<double>(r) * tau_s;
    long p = static_cast<long>(std::floor(u1.real()));
    return {u1 - static_cast<double>(p), p, r};
}

// Sign of theta_a under a unit shift (+1 direction).
inline int sign_one(int kind) { return (kind == 1 || kind == 2) ? -1 : 1; }
// Sign of theta_a under a tau shift (on top of the common exponential).
inline int sign_tau(int kind) { return (kind == 1 || kind == 4) ? -1 : 1; }

struct SeriesResult {
    cplx value;
    cplx derivative;
};

// Sum the defining series and its term-wise derivative at an already reduced
// argument. Terms decrease monotonically after reduction, so the first
// neglected term (times a geometric safety factor) bounds the tail.
inline SeriesResult series(int kind, cplx u0, cplx tau_s, double eps_target, int cap) {
    const cplx ipitau = imag_unit * pi * tau_s;
    const double aq = std::exp(-pi * tau_s.imag());  // |q|
    const double aim = std::abs(u0.imag());
    // Tail of a geometric-dominated series: ratio <= e^{-pi Im(tau)} < 1.
    const double geom = 1.0 / (1.0 - aq);

    cplx sum = 0.0, dsum = 0.0;
    if (kind == 3 || kind == 4) {
        sum = 1.0;
        for (int k = 1;; ++k) {
            const double kk = static_cast<double>(k);
            cplx qk = std::exp(ipitau * (kk * kk));
            cplx ph = 2.0 * pi * kk * u0;
            double sgn = (kind == 4 && (k & 1)) ? -1.0 : 1.0;
            sum += 2.0 * sgn * qk * std::cos(ph);
            dsum += -4.0 * pi * kk * sgn * qk * std::sin(ph);
            const double kn = kk + 1.0;
            double bound = 2.0 * std::pow(aq, kn * kn) * std::exp(2.0 * kn * pi * aim);
            if (bound * geom < eps_target) break;
            if (k >= cap)
                throw TruncationOverflow("theta series: truncation order exceeds cap");
        }
    } else {
        for (int k = 0;; ++k) {
            const double kh = static_cast<double>(k) + 0.5;
            cplx qk = std::exp(ipitau * (kh * kh));
            cplx ph = (2.0 * kh) * pi * u0;
            double sgn = (kind == 1 && (k & 1)) ? -1.0 : 1.0;
            if (kind == 1) {
                sum += 2.0 * sgn * qk * std::sin(ph);
                dsum += 2.0 * pi * (2.0 * kh) * sgn * qk * std::cos(ph);
            } else {
                sum += 2.0 * sgn * qk * std::cos(ph);
                dsum += -2.0 * pi * (2.0 * kh) * sgn * qk * std::sin(ph);
            }
            const double kn = kh + 1.0;
            double bound = 2.0 * std::pow(aq, kn * kn) * std::exp(2.0 * kn * pi * aim);
            if (bound * geom < eps_target) break;
            if (k >= cap)
                throw TruncationOverflow("theta series: truncation order exceeds cap");
        }
    }
    return {sum, dsum};
}

inline void check_args(int kind, cplx tau_s, const ModularContext& ctx) {
    if (kind < 1 || kind > 4) throw Error("eval_theta: kind must be in 1..4");
    if (!(tau_s.imag() >= ctx.im_floor))
        throw InvalidModulus("eval_theta: Im(period_scale*tau) below floor");
}

}  // namespace theta_detail

// theta_kind(u | period_scale * tau).
inline cplx eval_theta(int kind, cplx u, const ModularContext& ctx, int period_scale = 1) {
    const cplx tau_s = static_cast<double>(period_scale) * ctx.tau;
    theta_detail::check_args(kind, tau_s, ctx);
    const auto red = theta_detail::reduce(u, tau_s);
    const auto sr = theta_detail::series(kind, red.u, tau_s, ctx.eps_target, ctx.k_max_cap);
    const double s1 = (red.shift_1 % 2 == 0) ? 1.0 : theta_detail::sign_one(kind);
    const double s2 = (red.shift_tau % 2 == 0) ? 1.0 : theta_detail::sign_tau(kind);
    const double r = static_cast<double>(red.shift_tau);
    const cplx expo = std::exp(-imag_unit * pi * (2.0 * r * red.u + r * r * tau_s));
    return s1 * s2 * expo * sr.value;
}

// d/du theta_kind(u | period_scale * tau), term-wise differentiated series
// under the same reduction and tail-bound policy.
inline cplx eval_theta_derivative(int kind, cplx u, const ModularContext& ctx,
                                  int period_scale = 1) {
    const cplx tau_s = static_cast<double>(period_scale) * ctx.tau;
    theta_detail::check_args(kind, tau_s, ctx);
    const auto red = theta_detail::reduce(u, tau_s);
    const auto sr = theta_detail::series(kind, red.u, tau_s, ctx.eps_target, ctx.k_max_cap);
    const double s1 = (red.shift_1 % 2 == 0) ? 1.0 : theta_detail::sign_one(kind);
    const double s2 = (red.shift_tau % 2 == 0) ? 1.0 : theta_detail::sign_tau(kind);
    const double r = static_cast<double>(red.shift_tau);
    const cplx pref = s1 * s2 * std::exp(-imag_unit * pi * (2.0 * r * red.u + r * r * tau_s));
    // (pref * theta)(u): pref itself carries d/du = -2*pi*i*r.
    return pref * (sr.derivative - 2.0 * pi * imag_unit * r * sr.value);
}

inline cplx eval_theta1_derivative(cplx u, const ModularContext& ctx, int period_scale = 1) {
    return eval_theta_derivative(1, u, ctx, period_scale);
}

// theta'_kind / theta_kind; throws PoleCollision near a zero of theta_kind.
inline cplx theta_log_derivative(int kind, cplx u, const ModularContext& ctx,
                                 int period_scale = 1, double zero_tol = 1e-12) {
    const cplx v = eval_theta(kind, u, ctx, period_scale);
    if (std::abs(v) < zero_tol)
        throw PoleCollision("theta_log_derivative: argument at a theta zero");
    return eval_theta_derivative(kind, u, ctx, period_scale) / v;
}

}  // namespace xyzff
