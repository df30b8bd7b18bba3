#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "xyzff/cascade.hpp"

using namespace xyzff;
using tst::rel_diff;

namespace {

std::vector<cplx> random_xi(Rng& rng, int N) {
    std::vector<cplx> xi(N);
    for (auto& x : xi) x = rng.centered(0.3);
    return xi;
}

struct Fixture {
    ModelParams mp;
    GaugeParams gp;
    StateBuilder sb;
    SpContext ctx;

    Fixture(Rng& rng, int N, int nu_pref = 0)
        : mp(N, Eta::half(), rng.box(-0.05, 0.05, 0.7, 0.95), random_xi(rng, N)),
          gp(random_gauge(rng, mp)),
          sb(mp, gp),
          ctx(make_sp_context(sb, nu_pref)) {}
};

double mdev(const CMat& a, const CMat& b) {
    return max_abs(a - b) / std::max(1.0, std::max(max_abs(a), max_abs(b)));
}

// Lagrange extrapolation to delta = 0 through three samples.
cplx extrapolate3(const std::array<double, 3>& d, const std::array<cplx, 3>& f) {
    cplx out = 0.0;
    for (int i = 0; i < 3; ++i) {
        cplx w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) w *= -d[j] / (d[i] - d[j]);
        out += w * f[i];
    }
    return out;
}

}  // namespace

TEST_CASE("even-imbalance system holds on oracle scalar products") {
    Rng rng(91001);
    Fixture fx(rng, 4);
    auto us = sample_free_params(rng, fx.ctx.n() + 1, fx.ctx);  // p = 0
    auto xo = oracle_x(fx.ctx, us);
    REQUIRE(sandw4_residual(fx.ctx, us, xo) < 1e-8);
    REQUIRE(homsys1_residual(fx.ctx, us, xo) < 1e-8);
    REQUIRE(homsys2_residual(fx.ctx, us, xo) < 1e-8);

    // X_j is a function of the deleted set only
    for (std::size_t j = 0; j < us.size(); ++j) {
        auto moved = std::vector<cplx>(us.begin(), us.end());
        moved[j] += 0.1;
        auto rest_orig = drop(us, j);
        auto rest_moved = drop(moved, j);
        cplx a = brute_scalar_product(fx.ctx, fx.ctx.nu, rest_orig);
        cplx b = brute_scalar_product(fx.ctx, fx.ctx.nu, rest_moved);
        REQUIRE(rel_diff(a, b) < 1e-9);
    }
}

TEST_CASE("imbalance +2 system is trivial: the oracle vanishes") {
    Rng rng(91002);
    Fixture fx(rng, 6);
    auto us = sample_free_params(rng, fx.ctx.n() - 1, fx.ctx);  // p = 1
    for (int lambda : {fx.ctx.nu, fx.ctx.nu + 2})
        for (std::size_t j = 0; j < us.size(); ++j) {
            auto rest = drop(us, j);
            REQUIRE(brute_pairing_rel(fx.ctx, lambda, rest) < 1e-10);
        }
}

TEST_CASE("structured product of the Omega matrices") {
    Rng rng(91003);
    for (int N : {4, 6}) {
        Fixture fx(rng, N);
        const auto& vs = fx.ctx.vbar();
        const cplx x = fx.gp.x();
        for (int p : {0, 1}) {
            const int M = fx.ctx.n() - 2 * p + 1;
            if (M < 1) continue;
            auto us = sample_free_params(rng, M, fx.ctx);
            CMat om1 = omega_eps_matrix(1, us, vs, fx.gp, fx.mp);
            CMat om0 = omega_eps_matrix(0, us, vs, fx.gp, fx.mp);
            CMat lhs = CMat::Identity(M, M) - om1 * om0;
            const cplx c = eval_theta(2, 0.0, fx.mp.ctx) * eval_theta(2, 0.0, fx.mp.ctx) /
                           (eval_theta(1, x, fx.mp.ctx) * eval_theta(2, x, fx.mp.ctx));
            CMat rhs = -c * (cascade_a_matrix(us, vs, x, fx.mp) *
                             cascade_b_matrix(us, vs, x, fx.mp));
            REQUIRE(mdev(lhs, rhs) < 1e-9);

            // scalar residue identity at random index pairs
            for (int it = 0; it < 4; ++it) {
                long j = static_cast<long>(rng.raw() % M);
                long k = static_cast<long>(rng.raw() % M);
                cplx direct = cascade_h_sum(j, k, us, vs, x, fx.mp);
                cplx residue = cascade_h_residue(j, k, us, vs, x, fx.mp);
                REQUIRE(rel_diff(direct, residue) < 1e-10);
            }
        }
    }
}

TEST_CASE("imbalance -2 geometry: rank bound and three null vectors") {
    Rng rng(91004);
    Fixture fx(rng, 4);
    const auto& vs = fx.ctx.vbar();
    const cplx x = fx.gp.x();
    const int M = fx.ctx.n() + 3;  // p = -1
    auto us = sample_free_params(rng, M, fx.ctx);
    CMat om1 = omega_eps_matrix(1, us, vs, fx.gp, fx.mp);
    CMat om0 = omega_eps_matrix(0, us, vs, fx.gp, fx.mp);
    CMat mmat = CMat::Identity(M, M) - om1 * om0;

    REQUIRE(std::abs(det(mmat)) < 1e-9 * std::pow(max_abs(mmat), M));
    REQUIRE(nullity(mmat) == 3);

    std::vector<cplx> zs = {rng.centered(0.35), rng.centered(0.35), rng.centered(0.35)};
    CMat bext = extended_b_matrix(us, vs, zs, x, fx.mp);
    CMat bext_lu = inv(bext);
    for (long l = 0; l < 3; ++l) {
        CVec psi(M);
        for (long j = 0; j < M; ++j)
            psi(j) = extended_b_inverse_entry(us, vs, zs, x, j, l, fx.mp);
        // closed inverse columns match the LU inverse
        REQUIRE((psi - bext_lu.col(fx.ctx.n() + l)).norm() / psi.norm() < 1e-9);
        // and are genuine null vectors
        REQUIRE((mmat * psi).norm() < 1e-9 * max_abs(mmat) * psi.norm());

        // propagating through the eps = 0 equation exhibits the
        // f(u_j, z-bar_l) obstruction with a j-independent constant
        CVec y0 = -om0 * psi;
        cplx s_tilde = 0.0;
        for (cplx v : vs) s_tilde += v;
        for (cplx z : zs) s_tilde += z;
        for (cplx u : us) s_tilde -= u;
        const cplx th1x = eval_theta(1, x, fx.mp.ctx);
        const cplx th2x = eval_theta(2, x, fx.mp.ctx);
        cplx ratio0 = 0.0;
        for (long j = 0; j < M; ++j) {
            const auto zrest = drop(zs, l);
            cplx shape = f_prod(us[j], zrest, fx.mp) * th2x / th1x;
            shape *= theta_set_prod(1, us[j], zrest, fx.mp) *
                     theta_set_prod(1, us[j], vs, fx.mp) /
                     theta_set_prod(2, us[j], drop(us, j), fx.mp);
            shape *= eval_theta(1, x + us[j] - zs[l] + s_tilde, fx.mp.ctx);
            cplx ratio = y0(j) / shape;
            if (j == 0) ratio0 = ratio;
            REQUIRE(std::abs(ratio - ratio0) <= 1e-8 * std::max(1.0, std::abs(ratio0)));
        }
    }
}

TEST_CASE("elliptic Cauchy inverse, generic and degenerate sizes") {
    Rng rng(91005);
    ModelParams mp(2, Eta::half(), cplx(0.0, 0.8), {cplx(0.1, 0.02), cplx(-0.08, -0.03)});
    for (int n : {1, 3, 5}) {
        std::vector<cplx> xs, ys;
        for (int i = 0; i < n; ++i) {
            xs.push_back(rng.centered(0.4));
            ys.push_back(rng.centered(0.4));
        }
        cplx lambda = rng.box(0.05, 0.35, 0.02, 0.3);
        CMat c = theta_cauchy(xs, ys, lambda, mp);
        CMat ci = theta_cauchy_inverse(xs, ys, lambda, mp);
        REQUIRE(max_abs(c * ci - CMat::Identity(n, n)) < 1e-10);
        if (n == 1) {
            REQUIRE(rel_diff(ci(0, 0), 1.0 / c(0, 0)) < 1e-12);
        }
    }
}

TEST_CASE("bold Cauchy blocks invert in closed form") {
    Rng rng(91006);
    for (int N : {4, 6}) {
        Fixture fx(rng, N);
        auto us = sample_free_params(rng, fx.ctx.n() - 1, fx.ctx);
        RankOneGeometry g{us, fx.ctx.vbar(), fx.gp.x()};
        const long m = static_cast<long>(us.size());
        CMat a_bold = cascade_a_matrix(g.us, g.vs, g.x, fx.mp).leftCols(m);
        CMat b_bold = cascade_b_matrix(g.us, g.vs, g.x, fx.mp).topRows(m);
        REQUIRE(max_abs(a_bold * bold_a_inverse_closed(g, fx.mp) -
                        CMat::Identity(m, m)) < 1e-9);
        REQUIRE(max_abs(b_bold * bold_b_inverse_closed(g, fx.mp) -
                        CMat::Identity(m, m)) < 1e-9);
    }
}

TEST_CASE("rank-one trace: assembly, closed form and degeneration") {
    Rng rng(91007);
    Fixture fx(rng, 6);
    auto us = sample_free_params(rng, fx.ctx.n() - 1, fx.ctx);
    RankOneGeometry g{us, fx.ctx.vbar(), fx.gp.x()};

    RankOneAssembly asmb = rank_one_assembly(g, fx.mp);
    for (long j = 0; j + 1 < static_cast<long>(g.vs.size()); ++j) {
        REQUIRE(rel_diff(asmb.cal_a[j], cal_a_closed(g, j, fx.mp)) < 1e-9);
        REQUIRE(rel_diff(asmb.cal_b[j], cal_b_closed(g, j, fx.mp)) < 1e-9);
    }
    REQUIRE(rel_diff(asmb.one_plus_trace, rank_one_trace_closed(g, fx.mp)) < 1e-8);

    // approach the degenerate point u_2 = v_2 and extrapolate the assembly
    std::array<double, 3> deltas = {1e-5, 1e-6, 1e-7};
    std::array<cplx, 3> traces;
    for (int i = 0; i < 3; ++i) {
        RankOneGeometry gd = g;
        gd.us[1] = gd.vs[1] + deltas[i];
        traces[i] = rank_one_assembly(gd, fx.mp).one_plus_trace;
    }
    RankOneGeometry gdeg = g;
    gdeg.us[1] = gdeg.vs[1];
    cplx lkk2 = rank_one_trace_degenerate(gdeg, fx.mp);
    cplx extr = extrapolate3(deltas, traces);
    REQUIRE(std::abs(extr - lkk2) / std::abs(lkk2) < 1e-6);
    // the doubled-period closed form is regular at the degenerate point
    REQUIRE(rel_diff(rank_one_trace_closed(gdeg, fx.mp), lkk2) < 1e-9);

    // generic nonvanishing
    for (int it = 0; it < 20; ++it) {
        auto us2 = sample_free_params(rng, fx.ctx.n() - 1, fx.ctx);
        RankOneGeometry g2{us2, fx.ctx.vbar(), fx.gp.x()};
        REQUIRE(std::abs(rank_one_trace_closed(g2, fx.mp)) > 1e-6);
    }
}

TEST_CASE("residue computation of the contour sums") {
    Rng rng(91008);
    for (int N : {4, 6}) {
        Fixture fx(rng, N);
        auto us = sample_free_params(rng, fx.ctx.n() - 1, fx.ctx);
        RankOneGeometry g{us, fx.ctx.vbar(), fx.gp.x()};
        RankOneAssembly asmb = rank_one_assembly(g, fx.mp);
        for (long j = 0; j + 1 < static_cast<long>(g.vs.size()); ++j) {
            REQUIRE(rel_diff(contour_g_direct(g, j, fx.mp), contour_g_residue(g, j, fx.mp)) <
                    1e-10);
            // the assembled coefficient equals the residue form built on G
            const cplx S = rank_one_s(g);
            const cplx vn = g.vs.back();
            const std::vector<cplx> vs_head(g.vs.begin(), g.vs.end() - 1);
            cplx pre = -1.0 / (f_func(vn, g.vs[j], fx.mp) *
                               eval_theta(1, g.x, fx.mp.ctx) *
                               eval_theta(1, g.x - S, fx.mp.ctx));
            pre *= cascade_detail::set_minus_point(2, g.us, g.vs[j], fx.mp) /
                   cascade_detail::set_minus_point(2, drop(vs_head, j), g.vs[j], fx.mp);
            pre *= f_prod(vn, vs_head, fx.mp) / f_prod(vn, g.us, fx.mp);
            cplx cal_a_from_g = pre * contour_g_direct(g, j, fx.mp);
            REQUIRE(rel_diff(cal_a_from_g, asmb.cal_a[j]) < 1e-9);
        }
    }
}

TEST_CASE("odd-imbalance inhomogeneous system with brute-force population") {
    Rng rng(91009);
    Fixture fx(rng, 4);
    const int n = fx.ctx.n();

    auto populate = [&](std::span<const cplx> ws, int p) {
        const std::size_t M = ws.size();
        auto xo = oracle_x(fx.ctx, ws);  // S^{nu,lambda}_{n, M-1}(v | w_j)
        std::array<std::vector<cplx>, 4> s2;
        for (int mu = 0; mu <= 3; ++mu) {
            s2[mu].resize(M * (M - 1) / 2);
            for (std::size_t a = 0; a < M; ++a)
                for (std::size_t b = 0; b < a; ++b) {
                    auto rest = drop2(ws, a, b);
                    s2[mu][a * (a - 1) / 2 + b] =
                        brute_scalar_product(fx.ctx, mu, rest);
                }
        }
        std::array<cplx, 4> s0;
        for (int mu = 0; mu <= 3; ++mu) s0[mu] = brute_scalar_product(fx.ctx, mu, ws);
        return std::make_tuple(xo, s2, s0);
    };

    // kappa = +1 (p = 0): #w = n
    {
        auto ws = sample_free_params(rng, n, fx.ctx);
        auto [xo, s2, s0] = populate(ws, 0);
        REQUIRE(sinhom_residual(fx.ctx, 0, ws, xo, s2, s0) < 1e-7);
    }
    // kappa = -1 (p = -1): #w = n + 2; the pair-deleted terms are balanced
    {
        auto ws = sample_free_params(rng, n + 2, fx.ctx);
        auto [xo, s2, s0] = populate(ws, -1);
        REQUIRE(sinhom_residual(fx.ctx, -1, ws, xo, s2, s0) < 1e-7);

        // the same with the balanced terms supplied by the closed form
        auto s2_closed = s2;
        for (std::size_t a = 0; a < ws.size(); ++a)
            for (std::size_t b = 0; b < a; ++b) {
                auto rest = drop2(ws, a, b);
                for (int delta : {0, 2}) {
                    int mu = (fx.ctx.nu + delta) % 4;
                    s2_closed[mu][a * (a - 1) / 2 + b] =
                        balanced_closed_component(fx.ctx, mu, rest);
                }
            }
        REQUIRE(sinhom_residual(fx.ctx, -1, ws, xo, s2_closed, s0) < 1e-7);
    }
}

TEST_CASE("explicit expression at the special point w = -y*") {
    Rng rng(91010);
    Fixture fx(rng, 4);
    const int n = fx.ctx.n();
    for (int m : {n - 1, n + 1}) {
        auto head = sample_free_params(rng, m, fx.ctx);
        std::vector<cplx> ws(head.begin(), head.end());
        ws.push_back(minus_y_star(fx.ctx));
        std::array<std::vector<cplx>, 4> s2;
        for (int mu = 0; mu <= 3; ++mu) {
            s2[mu].resize(ws.size() * (ws.size() - 1) / 2);
            for (std::size_t a = 0; a < ws.size(); ++a)
                for (std::size_t b = 0; b < a; ++b)
                    s2[mu][a * (a - 1) / 2 + b] =
                        brute_scalar_product(fx.ctx, mu, drop2(ws, a, b));
        }
        std::array<cplx, 4> s0;
        for (int mu = 0; mu <= 3; ++mu) s0[mu] = brute_scalar_product(fx.ctx, mu, ws);
        for (int lambda : {fx.ctx.nu + 1, fx.ctx.nu + 3}) {
            cplx closed = dir_expr_value(fx.ctx, lambda, ws, s2, s0);
            cplx brute = brute_scalar_product(fx.ctx, lambda, head);
            REQUIRE(rel_diff(closed, brute) < 1e-8);
        }
    }
}
