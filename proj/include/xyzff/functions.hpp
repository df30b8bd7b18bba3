#pragma once

#include <span>
#include <vector>

#include "model.hpp"

namespace xyzff {

inline constexpr double collision_tol = 1e-9;

// Product of theta_kind(u - w) over a set; empty set gives 1.
inline cplx theta_set_prod(int kind, cplx u, std::span<const cplx> set, const ModelParams& mp,
                           int scale = 1) {
    cplx prod = 1.0;
    for (cplx w : set) prod *= eval_theta(kind, u - w, mp.ctx, scale);
    return prod;
}

inline cplx f_func(cplx u, cplx v, const ModelParams& mp) {
    const cplx den = eval_theta(1, u - v, mp.ctx);
    if (std::abs(den) < collision_tol)
        throw PoleCollision("f_func: argument difference at a theta1 zero");
    return eval_theta(1, u - v + mp.eta.value(), mp.ctx) / den;
}

inline cplx h_func(cplx u, cplx v, const ModelParams& mp) {
    return eval_theta(1, u - v + mp.eta.value(), mp.ctx) /
           eval_theta(1, mp.eta.value(), mp.ctx);
}

// Set-valued conventions: the product runs over the set argument(s).
inline cplx f_prod(cplx u, std::span<const cplx> set, const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx w : set) prod *= f_func(u, w, mp);
    return prod;
}

inline cplx f_prod(std::span<const cplx> set, cplx v, const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx w : set) prod *= f_func(w, v, mp);
    return prod;
}

inline cplx f_prod(std::span<const cplx> lhs, std::span<const cplx> rhs,
                   const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx a : lhs)
        for (cplx b : rhs) prod *= f_func(a, b, mp);
    return prod;
}

inline cplx h_prod(cplx u, std::span<const cplx> set, const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx w : set) prod *= h_func(u, w, mp);
    return prod;
}

// Set minus one / two elements.
inline std::vector<cplx> drop(std::span<const cplx> set, std::size_t j) {
    std::vector<cplx> out;
    out.reserve(set.size() - 1);
    for (std::size_t i = 0; i < set.size(); ++i)
        if (i != j) out.push_back(set[i]);
    return out;
}

inline std::vector<cplx> drop2(std::span<const cplx> set, std::size_t a, std::size_t b) {
    std::vector<cplx> out;
    out.reserve(set.size() - 2);
    for (std::size_t i = 0; i < set.size(); ++i)
        if (i != a && i != b) out.push_back(set[i]);
    return out;
}

// a(u) = prod_k theta1(u - xi_k + eta), d(u) = prod_k theta1(u - xi_k).
inline cplx a_func(cplx u, const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx xi : mp.xi) prod *= eval_theta(1, u - xi + mp.eta.value(), mp.ctx);
    return prod;
}

inline cplx d_func(cplx u, const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx xi : mp.xi) prod *= eval_theta(1, u - xi, mp.ctx);
    return prod;
}

// Product-rule derivatives; stable at zeros of individual factors.
inline cplx a_func_derivative(cplx u, const ModelParams& mp) {
    cplx sum = 0.0;
    for (std::size_t k = 0; k < mp.xi.size(); ++k) {
        cplx term = eval_theta_derivative(1, u - mp.xi[k] + mp.eta.value(), mp.ctx);
        for (std::size_t j = 0; j < mp.xi.size(); ++j)
            if (j != k) term *= eval_theta(1, u - mp.xi[j] + mp.eta.value(), mp.ctx);
        sum += term;
    }
    return sum;
}

inline cplx d_func_derivative(cplx u, const ModelParams& mp) {
    cplx sum = 0.0;
    for (std::size_t k = 0; k < mp.xi.size(); ++k) {
        cplx term = eval_theta_derivative(1, u - mp.xi[k], mp.ctx);
        for (std::size_t j = 0; j < mp.xi.size(); ++j)
            if (j != k) term *= eval_theta(1, u - mp.xi[j], mp.ctx);
        sum += term;
    }
    return sum;
}

// chi_nu(z) = (-1)^n e^{i pi eta nu} a(z) + e^{-i pi eta nu} d(z), eta = 1/2.
inline cplx chi(int nu, cplx z, const ModelParams& mp) {
    mp.eta.require_half("chi");
    const double sign_n = parity_sign(mp.n);
    return sign_n * unit_i_pow(nu) * a_func(z, mp) + unit_i_pow(-nu) * d_func(z, mp);
}

inline cplx chi_derivative(int nu, cplx z, const ModelParams& mp) {
    mp.eta.require_half("chi_derivative");
    const double sign_n = parity_sign(mp.n);
    return sign_n * unit_i_pow(nu) * a_func_derivative(z, mp) +
           unit_i_pow(-nu) * d_func_derivative(z, mp);
}

// Magnitude scale of chi's two terms, for relative root residuals.
inline double chi_scale(int nu, cplx z, const ModelParams& mp) {
    return std::abs(a_func(z, mp)) + std::abs(d_func(z, mp));
}

// Transfer-matrix eigenvalue T_nu(z | roots) = chi_nu(z) f(z, roots).
inline cplx transfer_eigenvalue(int nu, cplx z, std::span<const cplx> roots,
                                const ModelParams& mp) {
    return chi(nu, z, mp) * f_prod(z, roots, mp);
}

// Antisymmetric pair coefficient entering the odd-imbalance linear systems:
// omega_{ab}(z) = [d(w_a) a(w_b) - d(w_b) a(w_a)] f(w_a, w_a-bar) f(w_b-bar, w_b)
//                 / (f(w_a, w_b) h(w_a, z) h(z, w_b)).
inline cplx omega_pair_coeff(std::span<const cplx> w, std::size_t a, std::size_t b, cplx z,
                             const ModelParams& mp) {
    const cplx bracket = d_func(w[a], mp) * a_func(w[b], mp) -
                         d_func(w[b], mp) * a_func(w[a], mp);
    const auto wa_rest = drop(w, a);
    const auto wb_rest = drop(w, b);
    return bracket * f_prod(w[a], wa_rest, mp) * f_prod(wb_rest, w[b], mp) /
           (f_func(w[a], w[b], mp) * h_func(w[a], z, mp) * h_func(z, w[b], mp));
}

}  // namespace xyzff
