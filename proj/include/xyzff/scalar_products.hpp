#pragma once

#include "bethe.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Scalar products S^{nu,lambda}_{n,m}(v|u) = N <Psi^nu_n(v)|Psi^lambda_m(u)>
// with the bilinear pairing and N = 1 / <Psi^nu_n(v)|Psi^nu_n(v)>. The left
// vector is on-shell and twin-free; the right vector carries m = n - kappa
// free parameters.
// ---------------------------------------------------------------------------

struct SpContext {
    StateBuilder* sb = nullptr;
    int nu = 0;
    BetheRootSet roots;       // live-sector root data
    EigenvalueData eig;       // omega and V at the selected roots
    BetheState left;          // dual on-shell state
    BetheState right_onshell; // matching right state (for the normalization)
    cplx norm_inverse = 0.0;  // the factor N

    const ModelParams& model() const { return sb->model(); }
    const GaugeParams& gauge() const { return sb->gauge(); }
    const std::vector<cplx>& vbar() const { return roots.selected; }
    int n() const { return sb->model().n; }
};

inline SpContext make_sp_context(StateBuilder& sb, int nu_pref,
                                 const RootSolveOptions& opt = {}) {
    OnShellPair pair_ = make_on_shell_pair(sb, nu_pref, opt);
    SpContext ctx;
    ctx.sb = &sb;
    ctx.nu = pair_.nu;
    ctx.eig = omega_and_v(pair_.roots, sb.model());
    ctx.roots = std::move(pair_.roots);
    ctx.left = std::move(pair_.left);
    ctx.right_onshell = std::move(pair_.right);
    const cplx nn = pair(ctx.left.dual(), ctx.right_onshell.state());
    if (std::abs(nn) < 1e-10 * ctx.left.norm() * ctx.right_onshell.norm())
        throw DegenerateNormalization("make_sp_context: on-shell norm pairing vanished");
    ctx.norm_inverse = 1.0 / nn;
    return ctx;
}

// Brute-force S^{nu,lambda}_{n,m} from the materialized vectors.
inline cplx brute_scalar_product(const SpContext& ctx, int lambda,
                                 std::span<const cplx> us) {
    const int r = ctx.n() - static_cast<int>(us.size());
    BetheState right = ctx.sb->bethe(lambda, us, r);
    return ctx.norm_inverse * pair(ctx.left.dual(), right.state());
}

// |<L|R>| normalized by |L| and the construction scale of R. Using the
// construction scale (not |R|) keeps the measure honest when R itself is an
// identical zero, as happens for m > N operator chains.
inline double brute_pairing_rel(const SpContext& ctx, int lambda, std::span<const cplx> us) {
    const int r = ctx.n() - static_cast<int>(us.size());
    BetheState right = ctx.sb->bethe(lambda, us, r);
    const double scale = std::max(right.norm(), right.build_scale);
    return std::abs(pair(ctx.left.dual(), right.state())) /
           std::max(1e-300, ctx.left.norm() * scale);
}

namespace sp_detail {

// Common product factor of the balanced closed forms:
//   prod_{a<b} th2(v_a-v_b) th2(u_a-u_b) / prod_{a,b} th2(u_a-v_b)
//   * prod_k T_nu(u_k | v) / Omega_k
inline cplx balanced_core(const SpContext& ctx, std::span<const cplx> us) {
    const ModelParams& mp = ctx.model();
    const auto& vs = ctx.vbar();
    cplx prod = 1.0;
    for (std::size_t a = 0; a < vs.size(); ++a)
        for (std::size_t b = a + 1; b < vs.size(); ++b)
            prod *= eval_theta(2, vs[a] - vs[b], mp.ctx);
    for (std::size_t a = 0; a < us.size(); ++a)
        for (std::size_t b = a + 1; b < us.size(); ++b)
            prod *= eval_theta(2, us[a] - us[b], mp.ctx);
    for (cplx u : us)
        for (cplx v : vs) {
            const cplx den = eval_theta(2, u - v, mp.ctx);
            if (std::abs(den) < collision_tol)
                throw PoleCollision("balanced_core: theta2(u_a - v_b) vanishes");
            prod /= den;
        }
    for (cplx u : us) prod *= transfer_eigenvalue(ctx.nu, u, vs, mp);
    for (cplx om : ctx.eig.omega) prod /= om;
    return prod;
}

inline cplx sum_diff(std::span<const cplx> vs, std::span<const cplx> us) {
    cplx s = 0.0;
    for (cplx v : vs) s += v;
    for (cplx u : us) s -= u;
    return s;
}

}  // namespace sp_detail

// Balanced closed form for a single Fourier component mu in {nu, nu+2 mod 4}.
inline cplx balanced_closed_component(const SpContext& ctx, int mu,
                                      std::span<const cplx> us) {
    const ModelParams& mp = ctx.model();
    if (static_cast<int>(us.size()) != ctx.n())
        throw Error("balanced_closed_component: needs m = n");
    if (((mu - ctx.nu) % 2 + 2) % 2 != 0) return 0.0;  // sector selection
    const int delta = ((mu - ctx.nu) % 4 + 4) % 4;     // 0 or 2
    const cplx x = ctx.gauge().x();
    const cplx S = sp_detail::sum_diff(ctx.vbar(), us);
    const cplx half_delta_tau = 0.5 * static_cast<double>(delta) * mp.tau;
    const cplx den1 = eval_theta(1, S + half_delta_tau, mp.ctx, 2);
    const cplx den2 = eval_theta(1, 2.0 * x, mp.ctx, 2);
    if (std::abs(den1) < collision_tol || std::abs(den2) < collision_tol)
        throw GaugeSingularity("balanced_closed_component: theta1 denominator vanishes");
    cplx phi = std::exp(imag_unit * pi * static_cast<double>(delta) * x) *
               eval_theta(1, S, mp.ctx) *
               eval_theta(1, S + 2.0 * x + half_delta_tau, mp.ctx, 2) / (den1 * den2);
    const cplx ratio = eval_theta1_derivative(0.0, mp.ctx, 2) /
                       eval_theta1_derivative(0.0, mp.ctx);
    return phi * ratio * sp_detail::balanced_core(ctx, us);
}

// Balanced epsilon-combination S^{nu;eps}_{n,n} = theta1(S + x_eps)/theta1(x_eps) * core.
inline cplx balanced_closed_eps(const SpContext& ctx, int eps, std::span<const cplx> us) {
    const ModelParams& mp = ctx.model();
    if (static_cast<int>(us.size()) != ctx.n())
        throw Error("balanced_closed_eps: needs m = n");
    const cplx x_eps = gauge_x_k(ctx.gauge(), mp, eps);
    const cplx den = eval_theta(1, x_eps, mp.ctx);
    if (std::abs(den) < collision_tol)
        throw GaugeSingularity("balanced_closed_eps: theta1(x_eps) vanishes");
    const cplx S = sp_detail::sum_diff(ctx.vbar(), us);
    return eval_theta(1, S + x_eps, mp.ctx) / den * sp_detail::balanced_core(ctx, us);
}

// The special point w = -y* = -y + 1/2 at which theta2(y + w) vanishes.
inline cplx minus_y_star(const SpContext& ctx) { return -ctx.gauge().y() + 0.5; }

inline cplx t_at_minus_y_star(const SpContext& ctx) {
    const cplx w = minus_y_star(ctx);
    const cplx t = transfer_eigenvalue(ctx.nu, w, ctx.vbar(), ctx.model());
    if (std::abs(t) < 1e-10)
        throw EvaluationPointSingular("T_nu(-y*) vanishes; resample the gauge");
    return t;
}

// ---------------------------------------------------------------------------
// kappa = +1: one parameter fewer on the right.
// ---------------------------------------------------------------------------

struct ImbalanceValue {
    cplx direct;     // closed form evaluated directly
    cplx via_route;  // the same through the balanced form at {u, -y*}
};

inline ImbalanceValue imbalance_plus1_eps(const SpContext& ctx, int eps,
                                          std::span<const cplx> us) {
    const ModelParams& mp = ctx.model();
    const auto& vs = ctx.vbar();
    const int n = ctx.n();
    if (static_cast<int>(us.size()) != n - 1)
        throw Error("imbalance_plus1_eps: needs m = n - 1");
    const cplx y = ctx.gauge().y();
    const cplx th20 = eval_theta(2, 0.0, mp.ctx);

    // direct closed form
    cplx value = 0.5 * unit_i_pow(-eps) * th20;
    cplx sprime = 0.0;
    for (cplx v : vs) sprime += v;
    for (cplx u : us) sprime -= u;
    value *= eval_theta(2, sprime + gauge_s_k(ctx.gauge(), mp, eps), mp.ctx);
    for (cplx u : us) {
        const cplx f1 = eval_theta(1, u + y, mp.ctx);
        if (std::abs(f1) < collision_tol)
            throw EvaluationPointSingular("imbalance_plus1_eps: theta1(u_a + y) vanishes");
        value *= f1;
    }
    for (cplx v : vs) {
        const cplx f1 = eval_theta(1, v + y, mp.ctx);
        if (std::abs(f1) < collision_tol)
            throw EvaluationPointSingular("imbalance_plus1_eps: theta1(v_a + y) vanishes");
        value /= f1;
    }
    for (std::size_t a = 0; a < vs.size(); ++a)
        for (std::size_t b = a + 1; b < vs.size(); ++b)
            value *= eval_theta(2, vs[a] - vs[b], mp.ctx);
    for (std::size_t a = 0; a < us.size(); ++a)
        for (std::size_t b = a + 1; b < us.size(); ++b)
            value *= eval_theta(2, us[a] - us[b], mp.ctx);
    for (cplx u : us)
        for (cplx v : vs) {
            const cplx den = eval_theta(2, u - v, mp.ctx);
            if (std::abs(den) < collision_tol)
                throw PoleCollision("imbalance_plus1_eps: theta2(u_a - v_b) vanishes");
            value /= den;
        }
    for (cplx u : us) value *= transfer_eigenvalue(ctx.nu, u, vs, mp);
    for (cplx om : ctx.eig.omega) value /= om;

    // intermediate route through the balanced form at {u, -y*}
    std::vector<cplx> extended(us.begin(), us.end());
    extended.push_back(minus_y_star(ctx));
    const cplx x_eps = gauge_x_k(ctx.gauge(), mp, eps);
    const cplx route = -unit_i_pow(-eps) * th20 * eval_theta(1, x_eps, mp.ctx) /
                       (2.0 * t_at_minus_y_star(ctx)) *
                       balanced_closed_eps(ctx, eps, extended);
    return {value, route};
}

// ---------------------------------------------------------------------------
// kappa = -1: one parameter more on the right; a double sum over the
// balanced form with the pair coefficients omega_{ab}(-y*).
// ---------------------------------------------------------------------------

inline cplx imbalance_minus1_eps(const SpContext& ctx, int eps, std::span<const cplx> us) {
    const ModelParams& mp = ctx.model();
    const int n = ctx.n();
    if (static_cast<int>(us.size()) != n + 1)
        throw Error("imbalance_minus1_eps: needs m = n + 1");
    std::vector<cplx> w(us.begin(), us.end());
    w.push_back(minus_y_star(ctx));
    const cplx x = ctx.gauge().x();
    const cplx th1x = eval_theta(1, x, mp.ctx);
    const cplx th2x = eval_theta(2, x, mp.ctx);
    const cplx th20 = eval_theta(2, 0.0, mp.ctx);
    if (std::abs(th1x) < collision_tol || std::abs(th2x) < collision_tol)
        throw GaugeSingularity("imbalance_minus1_eps: theta(x) vanishes");
    const cplx t_eps = gauge_t_k(ctx.gauge(), mp, eps);
    const cplx x_eps = gauge_x_k(ctx.gauge(), mp, eps);
    const cplx z = minus_y_star(ctx);

    cplx sum = 0.0;
    for (std::size_t a = 0; a < w.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) {
            const cplx om = omega_pair_coeff(w, a, b, z, mp);
            auto rest = drop2(w, a, b);
            sum += om * eval_theta(1, w[a] - t_eps, mp.ctx) *
                   eval_theta(1, w[b] - t_eps, mp.ctx) *
                   balanced_closed_eps(ctx, eps, rest);
        }
    const cplx pref = -2.0 * unit_i_pow(-eps) * eval_theta(1, x_eps, mp.ctx) /
                      (th1x * th1x * th2x * th2x * th20 * t_at_minus_y_star(ctx));
    return pref * sum;
}

// ---------------------------------------------------------------------------
// Proposition 1: scalar products at imbalance +-2 vanish.
// ---------------------------------------------------------------------------

inline double prop1_vanishing(const SpContext& ctx, int lambda, std::span<const cplx> us) {
    const int m = static_cast<int>(us.size());
    if (m != ctx.n() + 2 && m != ctx.n() - 2)
        throw Error("prop1_vanishing: needs m = n +- 2");
    return brute_pairing_rel(ctx, lambda, us);
}

// ---------------------------------------------------------------------------
// Parameter sampling: inside the fundamental cell, kept away from the roots,
// the inhomogeneities, +-y* and their half-shifts (the theta2 pole loci).
// ---------------------------------------------------------------------------

inline std::vector<cplx> sample_free_params(Rng& rng, int count, const SpContext& ctx,
                                            double min_sep = 0.05, double min_dist = 0.02) {
    const ModelParams& mp = ctx.model();
    std::vector<cplx> avoid;
    auto add_avoid = [&](cplx z) {
        avoid.push_back(z);
        avoid.push_back(z + 0.5);
    };
    for (cplx v : ctx.roots.roots) add_avoid(v);
    for (cplx xi : mp.xi) add_avoid(xi);
    add_avoid(minus_y_star(ctx));
    add_avoid(-minus_y_star(ctx));

    auto dist = [&](cplx a, cplx b) {
        return lattice_dist(to_lattice(a, mp.tau), to_lattice(b, mp.tau));
    };
    std::vector<cplx> out;
    for (int attempt = 0; attempt < 4000 && static_cast<int>(out.size()) < count;
         ++attempt) {
        cplx z = from_lattice({rng.unit(), rng.unit()}, mp.tau);
        bool ok = true;
        for (cplx a : avoid)
            if (dist(z, a) < min_dist) {
                ok = false;
                break;
            }
        for (cplx w : out)
            if (ok && dist(z, w) < min_sep) {
                ok = false;
                break;
            }
        if (ok) out.push_back(z);
    }
    if (static_cast<int>(out.size()) < count)
        throw Error("sample_free_params: rejection sampling failed");
    return out;
}

}  // namespace xyzff
