#pragma once

#include "scalar_products.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Linear-system machinery behind the cascade of scalar-product identities:
// the even-imbalance homogeneous systems, their structured matrices, elliptic
// Cauchy inverses, rank-1 reductions and residue-sum identities.
// ---------------------------------------------------------------------------

// Omega^eps_{jk} = -(1/f(u_j, v)) (f(u_k, u-bar_k)/h(u_j, u_k)) alpha_eps(u_j - u_k)
inline CMat omega_eps_matrix(int eps, std::span<const cplx> us, std::span<const cplx> vs,
                             const GaugeParams& gp, const ModelParams& mp) {
    const long M = static_cast<long>(us.size());
    CMat out(M, M);
    for (long j = 0; j < M; ++j) {
        const cplx fjv = f_prod(us[j], vs, mp);
        for (long k = 0; k < M; ++k) {
            const auto rest = drop(us, k);
            out(j, k) = -(f_prod(us[k], rest, mp) / (fjv * h_func(us[j], us[k], mp))) *
                        alpha_fn(eps, us[j] - us[k], gp, mp);
        }
    }
    return out;
}

// Rectangular factors of I - Omega^1 Omega^0:
//   A_{jk} = f(v_k, v-bar_k) / (f(u_j, v) f(v_k, u)) th1(u_j - v_k + x)/th1(u_j - v_k)
//   B_{jk} = th2(u_k - v_j - x)/th1(u_k - v_j) f(u_k, u-bar_k)
inline CMat cascade_a_matrix(std::span<const cplx> us, std::span<const cplx> vs, cplx x,
                             const ModelParams& mp) {
    const long M = static_cast<long>(us.size());
    const long n = static_cast<long>(vs.size());
    CMat a(M, n);
    for (long j = 0; j < M; ++j) {
        const cplx fjv = f_prod(us[j], vs, mp);
        for (long k = 0; k < n; ++k) {
            const auto rest = drop(vs, k);
            a(j, k) = f_prod(vs[k], rest, mp) / (fjv * f_prod(vs[k], us, mp)) *
                      eval_theta(1, us[j] - vs[k] + x, mp.ctx) /
                      eval_theta(1, us[j] - vs[k], mp.ctx);
        }
    }
    return a;
}

inline CMat cascade_b_matrix(std::span<const cplx> us, std::span<const cplx> vs, cplx x,
                             const ModelParams& mp) {
    const long M = static_cast<long>(us.size());
    const long n = static_cast<long>(vs.size());
    CMat b(n, M);
    for (long j = 0; j < n; ++j)
        for (long k = 0; k < M; ++k) {
            const auto rest = drop(us, k);
            b(j, k) = eval_theta(2, us[k] - vs[j] - x, mp.ctx) /
                      eval_theta(1, us[k] - vs[j], mp.ctx) * f_prod(us[k], rest, mp);
        }
    return b;
}

// H_{jk} as the direct sum over the parameter set.
inline cplx cascade_h_sum(long j, long k, std::span<const cplx> us, std::span<const cplx> vs,
                          cplx x, const ModelParams& mp) {
    cplx sum = 0.0;
    for (std::size_t a = 0; a < us.size(); ++a) {
        cplx term = theta_set_prod(2, us[a], us, mp) * theta_set_prod(1, us[a], vs, mp);
        term /= theta_set_prod(1, us[a], drop(us, a), mp) *
                theta_set_prod(2, us[a], vs, mp);
        term *= eval_theta(2, us[a] - us[j] - x, mp.ctx) *
                eval_theta(1, us[a] - us[k] + x, mp.ctx);
        term /= eval_theta(2, us[a] - us[j], mp.ctx) * eval_theta(2, us[a] - us[k], mp.ctx);
        sum += term;
    }
    return sum;
}

// H_{jk} by the residue identity.
inline cplx cascade_h_residue(long j, long k, std::span<const cplx> us,
                              std::span<const cplx> vs, cplx x, const ModelParams& mp) {
    const cplx th1x = eval_theta(1, x, mp.ctx);
    const cplx th2x = eval_theta(2, x, mp.ctx);
    const cplx th20 = eval_theta(2, 0.0, mp.ctx);
    cplx sum = 0.0;
    if (j == k) {
        const auto rest = drop(us, j);
        sum += f_prod(us[j], vs, mp) / f_prod(us[j], rest, mp) * th1x * th2x / th20;
    }
    cplx qsum = 0.0;
    for (std::size_t q = 0; q < vs.size(); ++q) {
        const auto rest = drop(vs, q);
        cplx term = f_prod(vs[q], rest, mp) / f_prod(vs[q], us, mp);
        term *= eval_theta(1, us[j] - vs[q] + x, mp.ctx) *
                eval_theta(2, us[k] - vs[q] - x, mp.ctx);
        term /= eval_theta(1, us[j] - vs[q], mp.ctx) * eval_theta(1, us[k] - vs[q], mp.ctx);
        qsum += term;
    }
    return sum + th20 * qsum;
}

// ---------------------------------------------------------------------------
// Homogeneous system residuals (even imbalance kappa = 2p); X is populated
// externally, normally by the brute-force scalar products.
// ---------------------------------------------------------------------------

// X[lambda mod 4][j] = S^{nu, lambda}_{n, m}(v | u-bar_j) for the deletions of us.
inline std::array<std::vector<cplx>, 4> oracle_x(const SpContext& ctx,
                                                 std::span<const cplx> us) {
    std::array<std::vector<cplx>, 4> x;
    for (int lambda = 0; lambda <= 3; ++lambda) {
        x[lambda].resize(us.size());
        for (std::size_t j = 0; j < us.size(); ++j) {
            const auto rest = drop(us, j);
            x[lambda][j] = brute_scalar_product(ctx, lambda, rest);
        }
    }
    return x;
}

// max_j |LHS_j^lambda| / scale for the even-imbalance system.
inline double sandw4_residual(const SpContext& ctx, std::span<const cplx> us,
                              const std::array<std::vector<cplx>, 4>& x) {
    const ModelParams& mp = ctx.model();
    const auto& vs = ctx.vbar();
    double worst = 0.0, scale = 0.0;
    for (int lambda = 0; lambda <= 3; ++lambda) {
        for (std::size_t j = 0; j < us.size(); ++j) {
            cplx lhs = f_prod(us[j], vs, mp) * chi(ctx.nu, us[j], mp) * x[lambda][j];
            scale = std::max(scale, std::abs(lhs));
            cplx sum = 0.0;
            for (int mu = 0; mu <= 3; ++mu)
                for (std::size_t k = 0; k < us.size(); ++k) {
                    const auto rest = drop(us, k);
                    cplx term = f_prod(us[k], rest, mp) / h_func(us[j], us[k], mp);
                    term *= alpha_hat(lambda - mu, us[j] - us[k], ctx.gauge(), mp);
                    term *= chi(mu, us[k], mp) * x[mu][k];
                    sum += term;
                    scale = std::max(scale, 0.25 * std::abs(term));
                }
            worst = std::max(worst, std::abs(lhs - 0.25 * sum));
        }
    }
    return worst / std::max(scale, 1e-300);
}

// The epsilon-combined form of the same system.
inline double homsys1_residual(const SpContext& ctx, std::span<const cplx> us,
                               const std::array<std::vector<cplx>, 4>& x) {
    const ModelParams& mp = ctx.model();
    const auto& vs = ctx.vbar();
    const int nu = ctx.nu;
    double worst = 0.0, scale = 0.0;
    for (int eps : {0, 1}) {
        const double sg = parity_sign(eps);
        for (std::size_t j = 0; j < us.size(); ++j) {
            const cplx xje = x[nu % 4][j] + sg * x[(nu + 2) % 4][j];
            cplx lhs = chi(nu, us[j], mp) * xje;
            scale = std::max(scale, std::abs(lhs));
            cplx sum = 0.0;
            for (std::size_t k = 0; k < us.size(); ++k) {
                const auto rest = drop(us, k);
                const cplx xk1e = x[nu % 4][k] - sg * x[(nu + 2) % 4][k];
                cplx term = f_prod(us[k], rest, mp) / h_func(us[j], us[k], mp) *
                            chi(nu, us[k], mp) *
                            alpha_fn(eps, us[j] - us[k], ctx.gauge(), mp) * xk1e;
                sum += term;
                scale = std::max(scale, std::abs(term));
            }
            worst = std::max(worst, std::abs(lhs - sum / f_prod(us[j], vs, mp)));
        }
    }
    return worst / std::max(scale, 1e-300);
}

// Residual of the chi-free transformed system on Y_j^eps = X_j^eps / prod chi.
inline double homsys2_residual(const SpContext& ctx, std::span<const cplx> us,
                               const std::array<std::vector<cplx>, 4>& x) {
    const ModelParams& mp = ctx.model();
    const auto& vs = ctx.vbar();
    const int nu = ctx.nu;
    const std::size_t M = us.size();
    std::array<std::vector<cplx>, 2> y;
    for (int eps : {0, 1}) {
        y[eps].resize(M);
        const double sg = parity_sign(eps);
        for (std::size_t j = 0; j < M; ++j) {
            cplx denom = 1.0;
            for (std::size_t a = 0; a < M; ++a)
                if (a != j) denom *= chi(nu, us[a], mp);
            y[eps][j] = (x[nu % 4][j] + sg * x[(nu + 2) % 4][j]) / denom;
        }
    }
    double worst = 0.0, scale = 0.0;
    for (int eps : {0, 1}) {
        for (std::size_t j = 0; j < M; ++j) {
            cplx sum = 0.0;
            for (std::size_t k = 0; k < M; ++k) {
                const auto rest = drop(us, k);
                sum += f_prod(us[k], rest, mp) / h_func(us[j], us[k], mp) *
                       alpha_fn(eps, us[j] - us[k], ctx.gauge(), mp) * y[1 - eps][k];
            }
            cplx lhs = y[eps][j] - sum / f_prod(us[j], vs, mp);
            scale = std::max({scale, std::abs(y[eps][j]), std::abs(sum)});
            worst = std::max(worst, std::abs(lhs));
        }
    }
    return worst / std::max(scale, 1e-300);
}

// ---------------------------------------------------------------------------
// Elliptic Cauchy matrices and closed-form inverses.
// ---------------------------------------------------------------------------

inline CMat theta_cauchy(std::span<const cplx> xs, std::span<const cplx> ys, cplx lambda,
                         const ModelParams& mp) {
    const long N = static_cast<long>(xs.size());
    if (ys.size() != xs.size()) throw DimensionMismatch("theta_cauchy: nonsquare input");
    CMat b(N, N);
    for (long j = 0; j < N; ++j)
        for (long k = 0; k < N; ++k) {
            const cplx den = eval_theta(1, xs[j] - ys[k], mp.ctx);
            if (std::abs(den) < collision_tol)
                throw PoleCollision("theta_cauchy: coincident points");
            b(j, k) = eval_theta(1, xs[j] - ys[k] + lambda, mp.ctx) / den;
        }
    return b;
}

inline CMat theta_cauchy_inverse(std::span<const cplx> xs, std::span<const cplx> ys,
                                 cplx lambda, const ModelParams& mp) {
    const long N = static_cast<long>(xs.size());
    cplx S = 0.0;
    for (long i = 0; i < N; ++i) S += xs[i] - ys[i];
    const cplx th_l = eval_theta(1, lambda, mp.ctx);
    const cplx th_sl = eval_theta(1, S + lambda, mp.ctx);
    if (std::abs(th_l) < collision_tol || std::abs(th_sl) < collision_tol)
        throw GaugeSingularity("theta_cauchy_inverse: theta1(lambda) factors vanish");
    CMat inv(N, N);
    for (long j = 0; j < N; ++j)
        for (long k = 0; k < N; ++k) {
            cplx val = eval_theta(1, S + lambda - xs[k] + ys[j], mp.ctx) /
                       (th_l * th_sl * eval_theta(1, xs[k] - ys[j], mp.ctx));
            val *= theta_set_prod(1, xs[k], ys, mp) / theta_set_prod(1, xs[k], drop(xs, k), mp);
            cplx num = 1.0, den = 1.0;
            for (long q = 0; q < N; ++q) {
                num *= eval_theta(1, xs[q] - ys[j], mp.ctx);
                if (q != j) den *= eval_theta(1, ys[q] - ys[j], mp.ctx);
            }
            inv(j, k) = val * num / den;
        }
    return inv;
}

// ---------------------------------------------------------------------------
// kappa = +2 geometry: bold A, bold B of size (n-1), their closed inverses,
// and the rank-1 trace 1 + sum_k L_kk.
// ---------------------------------------------------------------------------

struct RankOneGeometry {
    std::vector<cplx> us;  // n-1 free parameters
    std::vector<cplx> vs;  // n on-shell roots
    cplx x;
};

inline cplx rank_one_s(const RankOneGeometry& g) {
    cplx s = 0.0;
    for (std::size_t j = 0; j + 1 < g.vs.size(); ++j) s += g.vs[j] - g.us[j];
    return s;
}

namespace cascade_detail {

// prod over the set of theta_kind(w - c)
inline cplx set_minus_point(int kind, std::span<const cplx> set, cplx c,
                            const ModelParams& mp) {
    cplx prod = 1.0;
    for (cplx w : set) prod *= eval_theta(kind, w - c, mp.ctx);
    return prod;
}

}  // namespace cascade_detail

// (A^{-1})_{jk}, closed form; v-bar_n is the root set without its last entry.
inline CMat bold_a_inverse_closed(const RankOneGeometry& g, const ModelParams& mp) {
    const long m = static_cast<long>(g.us.size());
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    CMat inv(m, m);
    for (long j = 0; j < m; ++j) {
        const auto vs_nj = drop(vs_head, j);  // v-bar_{n,j}
        for (long k = 0; k < m; ++k) {
            cplx val = -f_prod(g.us[k], g.vs, mp) /
                       (f_func(vn, g.vs[j], mp) * eval_theta(1, g.x, mp.ctx) *
                        eval_theta(1, g.x - S, mp.ctx));
            val *= cascade_detail::set_minus_point(2, g.us, g.vs[j], mp) /
                   cascade_detail::set_minus_point(2, vs_nj, g.vs[j], mp);
            val *= eval_theta(1, g.us[k] - g.vs[j] - g.x + S, mp.ctx) /
                   eval_theta(1, g.us[k] - g.vs[j], mp.ctx);
            val *= theta_set_prod(1, g.us[k], vs_head, mp) /
                   theta_set_prod(1, g.us[k], drop(g.us, k), mp);
            inv(j, k) = val;
        }
    }
    return inv;
}

// (B^{-1})_{jk}, closed form.
inline CMat bold_b_inverse_closed(const RankOneGeometry& g, const ModelParams& mp) {
    const long m = static_cast<long>(g.us.size());
    const cplx S = rank_one_s(g);
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    CMat inv(m, m);
    for (long j = 0; j < m; ++j)
        for (long k = 0; k < m; ++k) {
            const auto vs_nk = drop(vs_head, k);
            cplx val = 1.0 / (eval_theta(2, g.x, mp.ctx) * eval_theta(2, g.x + S, mp.ctx));
            val *= cascade_detail::set_minus_point(1, g.us, g.vs[k], mp) /
                   cascade_detail::set_minus_point(1, vs_nk, g.vs[k], mp);
            val *= eval_theta(2, g.us[j] - g.vs[k] + g.x + S, mp.ctx) /
                   eval_theta(1, g.us[j] - g.vs[k], mp.ctx);
            val *= theta_set_prod(1, g.us[j], vs_head, mp) /
                   theta_set_prod(2, g.us[j], drop(g.us, j), mp);
            inv(j, k) = val;
        }
    return inv;
}

// Assembly values: calA_j = sum_l (A^{-1})_{jl} A_{ln}, calB_k = sum_l B_{nl} (B^{-1})_{lk},
// computed with LU inverses of the bold blocks (independent of the closed forms).
struct RankOneAssembly {
    std::vector<cplx> cal_a;
    std::vector<cplx> cal_b;
    cplx one_plus_trace;
};

inline RankOneAssembly rank_one_assembly(const RankOneGeometry& g, const ModelParams& mp) {
    const long m = static_cast<long>(g.us.size());
    CMat a_full = cascade_a_matrix(g.us, g.vs, g.x, mp);  // m x n
    CMat b_full = cascade_b_matrix(g.us, g.vs, g.x, mp);  // n x m
    CMat a_bold = a_full.leftCols(m);
    CMat b_bold = b_full.topRows(m);
    CMat a_inv = inv(a_bold);
    CMat b_inv = inv(b_bold);
    RankOneAssembly out;
    out.cal_a.resize(m);
    out.cal_b.resize(m);
    cplx trace = 0.0;
    for (long j = 0; j < m; ++j) {
        out.cal_a[j] = (a_inv.row(j) * a_full.col(g.vs.size() - 1))(0, 0);
        out.cal_b[j] = (b_full.row(g.vs.size() - 1) * b_inv.col(j))(0, 0);
        trace += out.cal_a[j] * out.cal_b[j];
    }
    out.one_plus_trace = 1.0 + trace;
    return out;
}

// calA_j by the residue-sum closed form.
inline cplx cal_a_closed(const RankOneGeometry& g, long j, const ModelParams& mp) {
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    const auto vs_nj = drop(vs_head, j);
    cplx val = 1.0 / eval_theta(1, g.x - S, mp.ctx);
    val *= cascade_detail::set_minus_point(2, g.us, g.vs[j], mp) /
           cascade_detail::set_minus_point(2, vs_nj, g.vs[j], mp);
    val *= eval_theta(1, vn - g.vs[j] - g.x + S, mp.ctx) /
           eval_theta(2, vn - g.vs[j], mp.ctx);
    val *= theta_set_prod(2, vn, vs_head, mp) / theta_set_prod(2, vn, g.us, mp);
    return val;
}

// calB_k by the residue-sum closed form.
inline cplx cal_b_closed(const RankOneGeometry& g, long k, const ModelParams& mp) {
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    const auto vs_nk = drop(vs_head, k);
    cplx val = -1.0 / eval_theta(2, g.x + S, mp.ctx);
    val *= cascade_detail::set_minus_point(1, g.us, g.vs[k], mp) /
           cascade_detail::set_minus_point(1, vs_nk, g.vs[k], mp);
    val *= eval_theta(2, vn - g.vs[k] + g.x + S, mp.ctx) /
           eval_theta(1, vn - g.vs[k], mp.ctx);
    val *= theta_set_prod(1, vn, vs_head, mp) / theta_set_prod(1, vn, g.us, mp);
    return val;
}

// 1 + sum_k L_kk through the doubled-period closed form.
inline cplx rank_one_trace_closed(const RankOneGeometry& g, const ModelParams& mp) {
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    const cplx t12x = eval_theta(1, 2.0 * g.x, mp.ctx, 2);
    const cplx t42x = eval_theta(4, 2.0 * g.x, mp.ctx, 2);
    const cplx t12s = eval_theta(1, 2.0 * S, mp.ctx, 2);
    const cplx t42s = eval_theta(4, 2.0 * S, mp.ctx, 2);
    const cplx denom = t12x * t42s - t42x * t12s;
    cplx pref = 1.0;
    for (cplx v : vs_head) pref *= eval_theta(1, 2.0 * (vn - v), mp.ctx, 2);
    cplx pref_den = 1.0;
    for (cplx u : g.us) pref_den *= eval_theta(1, 2.0 * (vn - u), mp.ctx, 2);
    cplx sum = 0.0;
    for (std::size_t k = 0; k < vs_head.size(); ++k) {
        cplx num = 1.0;
        for (cplx u : g.us) num *= eval_theta(1, 2.0 * (u - g.vs[k]), mp.ctx, 2);
        cplx den = 1.0;
        for (std::size_t q = 0; q < g.vs.size(); ++q)
            if (q != k) den *= eval_theta(1, 2.0 * (g.vs[q] - g.vs[k]), mp.ctx, 2);
        const cplx vnk = vn - g.vs[k];
        cplx kre = t12x * eval_theta(4, 2.0 * vnk + 2.0 * S, mp.ctx, 2) -
                   t42x * eval_theta(1, 2.0 * vnk + 2.0 * S, mp.ctx, 2);
        sum += num / den * kre / denom;
    }
    return 1.0 + pref / pref_den * sum;
}

// The fully degenerate point u_k = v_k (k >= 2).
inline cplx rank_one_trace_degenerate(const RankOneGeometry& g, const ModelParams& mp) {
    const cplx v1 = g.vs.front();
    const cplx vn = g.vs.back();
    const cplx u1 = g.us.front();
    return eval_theta(1, v1 - vn, mp.ctx) * eval_theta(2, v1 + vn - 2.0 * u1, mp.ctx) *
           eval_theta(1, g.x, mp.ctx) * eval_theta(2, g.x, mp.ctx) /
           (eval_theta(1, vn - u1, mp.ctx) * eval_theta(2, vn - u1, mp.ctx) *
            eval_theta(1, v1 - u1 - g.x, mp.ctx) * eval_theta(2, v1 - u1 + g.x, mp.ctx));
}

// ---------------------------------------------------------------------------
// kappa = -2 geometry: extended square B, its closed inverse columns, and the
// zero eigenvectors of I - Omega^1 Omega^0.
// ---------------------------------------------------------------------------

// Extended (n+3) x (n+3) matrix: rows from v (n of them) then from z (3).
inline CMat extended_b_matrix(std::span<const cplx> us, std::span<const cplx> vs,
                              std::span<const cplx> zs, cplx x, const ModelParams& mp) {
    const long M = static_cast<long>(us.size());
    if (static_cast<long>(vs.size() + zs.size()) != M)
        throw DimensionMismatch("extended_b_matrix: need #v + #z = #u");
    CMat b(M, M);
    std::vector<cplx> rows(vs.begin(), vs.end());
    rows.insert(rows.end(), zs.begin(), zs.end());
    for (long j = 0; j < M; ++j)
        for (long k = 0; k < M; ++k) {
            const auto rest = drop(us, k);
            b(j, k) = eval_theta(2, us[k] - rows[j] - x, mp.ctx) /
                      eval_theta(1, us[k] - rows[j], mp.ctx) * f_prod(us[k], rest, mp);
        }
    return b;
}

// Closed-form columns n+l of the inverse of the extended matrix.
inline cplx extended_b_inverse_entry(std::span<const cplx> us, std::span<const cplx> vs,
                                     std::span<const cplx> zs, cplx x, long j, long l,
                                     const ModelParams& mp) {
    cplx s_tilde = 0.0;
    for (cplx v : vs) s_tilde += v;
    for (cplx z : zs) s_tilde += z;
    for (cplx u : us) s_tilde -= u;
    cplx val = 1.0 / (eval_theta(2, x, mp.ctx) * eval_theta(2, x + s_tilde, mp.ctx));
    val *= eval_theta(2, us[j] - zs[l] + x + s_tilde, mp.ctx) /
           eval_theta(1, us[j] - zs[l], mp.ctx);
    val *= theta_set_prod(1, us[j], vs, mp) * theta_set_prod(1, us[j], zs, mp) /
           theta_set_prod(2, us[j], drop(us, j), mp);
    val *= cascade_detail::set_minus_point(1, us, zs[l], mp);
    val /= cascade_detail::set_minus_point(1, vs, zs[l], mp) *
           cascade_detail::set_minus_point(1, drop(zs, l), zs[l], mp);
    return val;
}

// ---------------------------------------------------------------------------
// Residue-sum identities of the contour-integral method.
// ---------------------------------------------------------------------------

// Direct sum G_j over the n-1 parameters.
inline cplx contour_g_direct(const RankOneGeometry& g, long j, const ModelParams& mp) {
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    cplx sum = 0.0;
    for (std::size_t a = 0; a < g.us.size(); ++a) {
        cplx term = eval_theta(1, g.us[a] - g.vs[j] - g.x + S, mp.ctx) *
                    eval_theta(1, g.us[a] - vn + g.x, mp.ctx);
        term /= eval_theta(1, g.us[a] - g.vs[j], mp.ctx) *
                eval_theta(1, g.us[a] - vn, mp.ctx);
        term *= theta_set_prod(1, g.us[a], vs_head, mp) /
                theta_set_prod(1, g.us[a], drop(g.us, a), mp);
        sum += term;
    }
    return sum;
}

// The same value from the single surviving residue.
inline cplx contour_g_residue(const RankOneGeometry& g, long j, const ModelParams& mp) {
    const cplx S = rank_one_s(g);
    const cplx vn = g.vs.back();
    const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
    const cplx vnj = vn - g.vs[j];
    cplx val = -eval_theta(1, g.x, mp.ctx) * eval_theta(1, vnj - g.x + S, mp.ctx) /
               eval_theta(1, vnj, mp.ctx);
    val *= theta_set_prod(1, vn, vs_head, mp) / theta_set_prod(1, vn, g.us, mp);
    return val;
}

// ---------------------------------------------------------------------------
// Odd-imbalance inhomogeneous system (kappa = 2p + 1).
// ---------------------------------------------------------------------------

struct InhomResidual {
    double system;    // max relative residual of the full system
    double dir_expr;  // deviation of the explicit w_{m+1} = -y* expression
};

// S2[mu] supplies S^{nu,mu}_{n, n-2p-2}(v | w_{a,b}) for each deleted pair
// (a > b, flattened index a*(a-1)/2 + b); S0[mu] supplies S^{nu,mu}_{n,n-2p}(v | w).
inline double sinhom_residual(const SpContext& ctx, int p, std::span<const cplx> ws,
                              const std::array<std::vector<cplx>, 4>& x,
                              const std::array<std::vector<cplx>, 4>& s2,
                              const std::array<cplx, 4>& s0) {
    const ModelParams& mp = ctx.model();
    const GaugeParams& gp = ctx.gauge();
    const auto& vs = ctx.vbar();
    const cplx y = gp.y();
    const cplx th1x = eval_theta(1, gp.x(), mp.ctx);
    const cplx th2x = eval_theta(2, gp.x(), mp.ctx);
    const cplx th20 = eval_theta(2, 0.0, mp.ctx);
    const double psign = parity_sign(p);
    const std::size_t M = ws.size();

    double worst = 0.0, scale = 0.0;
    for (int lambda = 0; lambda <= 3; ++lambda) {
        for (std::size_t j = 0; j < M; ++j) {
            const cplx th1yw = eval_theta(1, y + ws[j], mp.ctx);
            if (std::abs(th1yw) < collision_tol)
                throw EvaluationPointSingular("sinhom_residual: theta1(y + w_j) vanishes");
            cplx lhs = transfer_eigenvalue(ctx.nu, ws[j], vs, mp) * x[lambda][j];
            cplx asum = 0.0;
            for (int mu = 0; mu <= 3; ++mu)
                for (std::size_t k = 0; k < M; ++k) {
                    const auto rest = drop(ws, k);
                    asum += f_prod(ws[k], rest, mp) / h_func(ws[j], ws[k], mp) *
                            alpha_hat(lambda - mu, ws[j] - ws[k], gp, mp) *
                            chi(mu, ws[k], mp) * x[mu][k];
                }
            lhs -= eval_theta(2, y + ws[j], mp.ctx) / (4.0 * th1yw) * asum;

            cplx bsum = 0.0;
            for (std::size_t a = 0; a < M; ++a)
                for (std::size_t b = 0; b < a; ++b) {
                    const cplx om = omega_pair_coeff(ws, a, b, ws[j], mp);
                    for (int mu = 0; mu <= 3; ++mu)
                        bsum += om *
                                beta_hat_minus(lambda - mu, ws[j], ws[a], ws[b], gp, mp) *
                                s2[mu][a * (a - 1) / 2 + b];
                }
            cplx rhs = psign / (2.0 * th1yw * th1x * th1x * th2x * th2x) * bsum;
            cplx csum = 0.0;
            for (int mu = 0; mu <= 3; ++mu)
                csum += beta_hat_plus(lambda - mu, ws[j], gp, mp) * s0[mu];
            rhs += psign * th20 * th20 / (8.0 * th1yw) * csum;

            scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst / std::max(scale, 1e-300);
}

// Explicit expression for X_{m+1} at w_{m+1} = -y*.
inline cplx dir_expr_value(const SpContext& ctx, int lambda, std::span<const cplx> ws,
                           const std::array<std::vector<cplx>, 4>& s2,
                           const std::array<cplx, 4>& s0) {
    const ModelParams& mp = ctx.model();
    const GaugeParams& gp = ctx.gauge();
    const cplx z = minus_y_star(ctx);
    const int n = ctx.n();
    const int m = static_cast<int>(ws.size()) - 1;
    const cplx th1x = eval_theta(1, gp.x(), mp.ctx);
    const cplx th2x = eval_theta(2, gp.x(), mp.ctx);
    const cplx th20 = eval_theta(2, 0.0, mp.ctx);
    const double sign = parity_sign((n - m - 1) / 2);

    cplx sum_plus = 0.0;
    for (int mu = 0; mu <= 3; ++mu)
        sum_plus += beta_hat_plus(lambda - mu, z, gp, mp) * s0[mu];
    cplx sum_minus = 0.0;
    for (std::size_t a = 0; a < ws.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) {
            const cplx om = omega_pair_coeff(ws, a, b, z, mp);
            for (int mu = 0; mu <= 3; ++mu)
                sum_minus += om * beta_hat_minus(lambda - mu, z, ws[a], ws[b], gp, mp) *
                             s2[mu][a * (a - 1) / 2 + b];
        }
    return sign / t_at_minus_y_star(ctx) *
           (th20 / 8.0 * sum_plus +
            sum_minus / (2.0 * th1x * th1x * th2x * th2x * th20));
}

}  // namespace xyzff
