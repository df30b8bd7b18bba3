#pragma once

#include <Eigen/Dense>

#include "functions.hpp"
#include "rng.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Gauge frame: the 2x2 matrices M_k(u), the gauge-transformed monodromy
// blocks, and the vacuum vectors they create. Gauge indices are plain
// integers; no modular reduction is ever applied to them, the defining
// formulas are evaluated literally.
// ---------------------------------------------------------------------------

struct GaugeParams {
    cplx s, t;

    cplx x() const { return 0.5 * (s + t); }
    cplx y() const { return 0.5 * (s - t); }
};

inline cplx gauge_s_k(const GaugeParams& gp, const ModelParams& mp, long k) {
    return gp.s + static_cast<double>(k) * mp.eta.value();
}
inline cplx gauge_t_k(const GaugeParams& gp, const ModelParams& mp, long k) {
    return gp.t + static_cast<double>(k) * mp.eta.value();
}
inline cplx gauge_x_k(const GaugeParams& gp, const ModelParams& mp, long k) {
    return gp.x() + static_cast<double>(k) * mp.eta.value();
}

inline cplx gauge_gamma(const GaugeParams& gp, const ModelParams& mp, long k) {
    const cplx den = eval_theta(2, gauge_x_k(gp, mp, k), mp.ctx) * eval_theta(2, 0.0, mp.ctx);
    if (std::abs(den) < collision_tol)
        throw GaugeSingularity("gauge_gamma: theta2(x_k) vanishes");
    return 2.0 / den;
}

inline Eigen::Matrix2cd gauge_matrix(long k, cplx u, const GaugeParams& gp,
                                     const ModelParams& mp) {
    const cplx sk = gauge_s_k(gp, mp, k);
    const cplx tk = gauge_t_k(gp, mp, k);
    const cplx gk = gauge_gamma(gp, mp, k);
    Eigen::Matrix2cd m;
    m(0, 0) = eval_theta(1, sk + u, mp.ctx, 2);
    m(0, 1) = gk * eval_theta(1, tk - u, mp.ctx, 2);
    m(1, 0) = eval_theta(4, sk + u, mp.ctx, 2);
    m(1, 1) = gk * eval_theta(4, tk - u, mp.ctx, 2);
    return m;
}

// det M_k(u) = 2 theta1(y+u) / theta2(0), independent of k.
inline cplx gauge_matrix_det_closed(cplx u, const GaugeParams& gp, const ModelParams& mp) {
    return 2.0 * eval_theta(1, gp.y() + u, mp.ctx) / eval_theta(2, 0.0, mp.ctx);
}

inline Eigen::Matrix2cd gauge_matrix_inverse(long k, cplx u, const GaugeParams& gp,
                                             const ModelParams& mp) {
    const Eigen::Matrix2cd m = gauge_matrix(k, u, gp, mp);
    const cplx det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double scale = m.cwiseAbs().maxCoeff();
    if (std::abs(det) < 1e-12 * scale * scale)
        throw SingularMatrix("gauge_matrix_inverse: det M_k(u) vanishes");
    Eigen::Matrix2cd inv;
    inv(0, 0) = m(1, 1);
    inv(0, 1) = -m(0, 1);
    inv(1, 0) = -m(1, 0);
    inv(1, 1) = m(0, 0);
    return inv / det;
}

// Gauge-transformed monodromy T_{k,l}(u) = M_k^{-1}(u) T(u) M_l(u). The
// auxiliary-space conjugation recombines the blocks with scalar weights.
inline OperatorBlock gauge_blocks(const Monodromy& mono, long k, long l, cplx u,
                                  const GaugeParams& gp, const ModelParams& mp) {
    const Eigen::Matrix2cd mki = gauge_matrix_inverse(k, u, gp, mp);
    const Eigen::Matrix2cd ml = gauge_matrix(l, u, gp, mp);
    CMat blk[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CMat acc = CMat::Zero(mono.dim(), mono.dim());
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) acc += mki(i, a) * ml(b, j) * mono.block(a, b);
            blk[i][j] = std::move(acc);
        }
    return {std::move(blk[0][0]), std::move(blk[0][1]), std::move(blk[1][0]),
            std::move(blk[1][1])};
}

enum class GaugeEntry { A, B, C, D };

inline CMat gauge_block(const Monodromy& mono, long k, long l, cplx u, GaugeEntry which,
                        const GaugeParams& gp, const ModelParams& mp) {
    const Eigen::Matrix2cd mki = gauge_matrix_inverse(k, u, gp, mp);
    const Eigen::Matrix2cd ml = gauge_matrix(l, u, gp, mp);
    const int i = (which == GaugeEntry::A || which == GaugeEntry::B) ? 0 : 1;
    const int j = (which == GaugeEntry::A || which == GaugeEntry::C) ? 0 : 1;
    CMat acc = CMat::Zero(mono.dim(), mono.dim());
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) acc += mki(i, a) * ml(b, j) * mono.block(a, b);
    return acc;
}

// C-bar_{k,l} = gamma_k gamma_l C_{k,l}.
inline CMat gauge_block_cbar(const Monodromy& mono, long k, long l, cplx u,
                             const GaugeParams& gp, const ModelParams& mp) {
    return gauge_gamma(gp, mp, k) * gauge_gamma(gp, mp, l) *
           gauge_block(mono, k, l, u, GaugeEntry::C, gp, mp);
}

// ---------------------------------------------------------------------------
// The alpha/beta function kit of the linear systems and their discrete
// Fourier transforms over the gauge index (eta = 1/2 phases).
// ---------------------------------------------------------------------------

// alpha_l(z) = theta2(z + x_{l+1}) / theta2(x_{l+1}). The offset index and
// the theta2 normalization are fixed by the transfer-matrix action itself:
// the even Fourier transforms then obey alpha-hat_0(0) = 4 and
// alpha-hat_2(0) = 0, so the diagonal term of the action is exactly the
// wanted term chi(u_j) f(u_j, u-bar_j).
inline cplx alpha_fn(long l, cplx z, const GaugeParams& gp, const ModelParams& mp) {
    const cplx xl = gauge_x_k(gp, mp, l + 1);
    const cplx den = eval_theta(2, xl, mp.ctx);
    if (std::abs(den) < collision_tol)
        throw GaugeSingularity("alpha_fn: theta2(x_{l+1}) vanishes");
    return eval_theta(2, z + xl, mp.ctx) / den;
}

inline cplx alpha_hat(int mu, cplx z, const GaugeParams& gp, const ModelParams& mp) {
    mp.eta.require_half("alpha_hat");
    cplx sum = 0.0;
    for (long l = 0; l <= 3; ++l)
        sum += unit_i_pow(-static_cast<long>(mu) * l) * alpha_fn(l, z, gp, mp);
    return sum;
}

inline cplx beta_plus(long l, cplx z, const GaugeParams& gp, const ModelParams& mp) {
    return eval_theta(2, z + gauge_s_k(gp, mp, l), mp.ctx);
}

inline cplx beta_minus(long l, cplx z, cplx u, cplx v, const GaugeParams& gp,
                       const ModelParams& mp) {
    const cplx tl = gauge_t_k(gp, mp, l);
    const cplx xl = gauge_x_k(gp, mp, l);
    return eval_theta(2, z - tl, mp.ctx) * eval_theta(2, z - u + xl, mp.ctx) *
           eval_theta(2, z - v + xl, mp.ctx);
}

inline cplx beta_hat_plus(int mu, cplx z, const GaugeParams& gp, const ModelParams& mp) {
    mp.eta.require_half("beta_hat_plus");
    cplx sum = 0.0;
    for (long l = 0; l <= 3; ++l)
        sum += unit_i_pow(-static_cast<long>(mu) * l) * beta_plus(l, z, gp, mp);
    return sum;
}

inline cplx beta_hat_minus(int mu, cplx z, cplx u, cplx v, const GaugeParams& gp,
                           const ModelParams& mp) {
    mp.eta.require_half("beta_hat_minus");
    cplx sum = 0.0;
    for (long l = 0; l <= 3; ++l)
        sum += unit_i_pow(-static_cast<long>(mu) * l) * beta_minus(l, z, u, v, gp, mp);
    return sum;
}

// ---------------------------------------------------------------------------
// Vacuum vectors. Not normalized; the action identities are exact only
// without normalization.
// ---------------------------------------------------------------------------

inline StateVector vacuum(long l, const GaugeParams& gp, const ModelParams& mp) {
    std::vector<CVec> locals;
    locals.reserve(mp.N);
    for (int k = 1; k <= mp.N; ++k) {
        const cplx arg = gauge_s_k(gp, mp, k + l - 1) + mp.xi[k - 1];
        CVec v(2);
        v << eval_theta(1, arg, mp.ctx, 2), eval_theta(4, arg, mp.ctx, 2);
        locals.push_back(std::move(v));
    }
    return {kron_vec(locals, mp.dim_cap)};
}

inline DualVector dual_vacuum(long l, const GaugeParams& gp, const ModelParams& mp) {
    std::vector<CVec> locals;
    locals.reserve(mp.N);
    for (int k = 1; k <= mp.N; ++k) {
        const cplx arg = gauge_t_k(gp, mp, k + l) - mp.xi[k - 1];
        CVec v(2);
        v << -eval_theta(4, arg, mp.ctx, 2), eval_theta(1, arg, mp.ctx, 2);
        locals.push_back(std::move(v));
    }
    return {kron_vec(locals, mp.dim_cap)};
}

// ---------------------------------------------------------------------------
// Gauge parameters are "arbitrary"; defaults are drawn from a seeded stream
// inside a safe box, rejecting draws too close to the singular loci that
// appear anywhere in a run.
// ---------------------------------------------------------------------------

inline bool gauge_is_safe(const GaugeParams& gp, const ModelParams& mp, int index_window,
                          double safe_tol = 2e-2) {
    const cplx x = gp.x();
    if (std::abs(eval_theta(1, x, mp.ctx)) < safe_tol) return false;
    if (std::abs(eval_theta(2, x, mp.ctx)) < safe_tol) return false;
    if (std::abs(eval_theta(1, 2.0 * x, mp.ctx, 2)) < safe_tol) return false;
    for (int k = -index_window; k <= index_window; ++k) {
        if (std::abs(eval_theta(2, gauge_x_k(gp, mp, k), mp.ctx)) < safe_tol) return false;
        if (std::abs(eval_theta(1, gauge_x_k(gp, mp, k), mp.ctx)) < safe_tol) return false;
    }
    return true;
}

inline GaugeParams random_gauge(Rng& rng, const ModelParams& mp, int index_window = 0) {
    if (index_window == 0) index_window = 2 * mp.N + 4;
    for (int attempt = 0; attempt < 256; ++attempt) {
        GaugeParams gp{rng.centered(0.4), rng.centered(0.4)};
        if (gauge_is_safe(gp, mp, index_window)) return gp;
    }
    throw GaugeSingularity("random_gauge: rejection sampling failed");
}

}  // namespace xyzff
