#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "xyzff/gauge.hpp"

using namespace xyzff;
using tst::rel_diff;

namespace {

std::vector<cplx> random_xi(Rng& rng, int N) {
    std::vector<cplx> xi(N);
    for (auto& x : xi) x = rng.centered(0.3);
    return xi;
}

ModelParams random_model(Rng& rng, int N, Eta eta = Eta::half()) {
    return ModelParams(N, eta, rng.box(-0.1, 0.1, 0.6, 1.0), random_xi(rng, N));
}

double vec_residual(const CVec& got, const CVec& want) {
    return (got - want).norm() / std::max(1e-30, want.norm());
}

}  // namespace

TEST_CASE("gauge matrix determinant is k-independent and matches the closed form") {
    Rng rng(41001);
    for (Eta eta : {Eta::half(), Eta::generic(cplx(0.23, 0.06))}) {
        ModelParams mp = random_model(rng, 2, eta);
        GaugeParams gp = random_gauge(rng, mp);
        cplx u = rng.centered(0.5);
        cplx closed = gauge_matrix_det_closed(u, gp, mp);
        for (int k = -4; k <= 4; ++k) {
            Eigen::Matrix2cd m = gauge_matrix(k, u, gp, mp);
            cplx det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            REQUIRE(rel_diff(det, closed) < 1e-11);
        }
    }
}

TEST_CASE("gauge matrix entries and singular locus") {
    Rng rng(41002);
    ModelParams mp = random_model(rng, 2);
    GaugeParams gp = random_gauge(rng, mp);
    cplx u = rng.centered(0.4);
    Eigen::Matrix2cd m = gauge_matrix(0, u, gp, mp);
    REQUIRE(rel_diff(m(0, 0), eval_theta(1, gp.s + u, mp.ctx, 2)) < 1e-13);
    // det M vanishes at u = -y
    REQUIRE_THROWS_AS(gauge_matrix_inverse(1, -gp.y(), gp, mp), SingularMatrix);
    // inverse satisfies M * M^{-1} = 1
    Eigen::Matrix2cd prod = gauge_matrix(2, u, gp, mp) * gauge_matrix_inverse(2, u, gp, mp);
    REQUIRE((prod - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gauge transformation reverses exactly") {
    Rng rng(41003);
    ModelParams mp = random_model(rng, 2);
    GaugeParams gp = random_gauge(rng, mp);
    cplx u = rng.centered(0.5);
    Monodromy mono = build_monodromy(u, mp);
    OperatorBlock g = gauge_blocks(mono, 1, 3, u, gp, mp);
    Eigen::Matrix2cd mk = gauge_matrix(1, u, gp, mp);
    Eigen::Matrix2cd mli = gauge_matrix_inverse(3, u, gp, mp);
    const long dim = mp.dim();
    CMat rebuilt = CMat::Zero(2 * dim, 2 * dim);
    const CMat* blk[2][2] = {{&g.A, &g.B}, {&g.C, &g.D}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CMat acc = CMat::Zero(dim, dim);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) acc += mk(i, a) * mli(b, j) * (*blk[a][b]);
            rebuilt.block(i * dim, j * dim, dim, dim) = acc;
        }
    REQUIRE(max_abs(rebuilt - mono.full()) / max_abs(mono.full()) < 1e-10);
}

TEST_CASE("vacuum actions of the gauge-transformed blocks") {
    Rng rng(41004);
    for (int N : {2, 4}) {
        for (Eta eta : {Eta::half(), Eta::generic(cplx(0.19, 0.05))}) {
            ModelParams mp = random_model(rng, N, eta);
            GaugeParams gp = random_gauge(rng, mp);
            for (long l = 0; l <= 3; ++l) {
                StateVector omega = vacuum(l, gp, mp);
                DualVector omega_bar = dual_vacuum(l, gp, mp);
                for (int it = 0; it < 2; ++it) {
                    cplx u = rng.centered(0.5);
                    Monodromy mono = build_monodromy(u, mp);
                    OperatorBlock g = gauge_blocks(mono, l, l + mp.N, u, gp, mp);

                    // C kills the right vacuum
                    StateVector cv = g.C * omega;
                    REQUIRE(cv.norm() < 1e-10 * max_abs(g.C) * omega.norm());

                    // A advances l by one with weight a(u)
                    StateVector av = g.A * omega;
                    CVec want_a = a_func(u, mp) * vacuum(l + 1, gp, mp).amp;
                    REQUIRE(vec_residual(av.amp, want_a) < 1e-10);

                    // D lowers l by one with weight d(u)
                    StateVector dv = g.D * omega;
                    CVec want_d = d_func(u, mp) * vacuum(l - 1, gp, mp).amp;
                    REQUIRE(vec_residual(dv.amp, want_d) < 1e-10);

                    // B kills the left vacuum
                    DualVector bv = omega_bar * g.B;
                    REQUIRE(bv.norm() < 1e-10 * max_abs(g.B) * omega_bar.norm());

                    // left action of A
                    DualVector avd = omega_bar * g.A;
                    cplx wa = gauge_gamma(gp, mp, l) / gauge_gamma(gp, mp, l + mp.N) *
                              a_func(u, mp);
                    CVec want_al = wa * dual_vacuum(l - 1, gp, mp).amp;
                    REQUIRE(vec_residual(avd.amp, want_al) < 1e-10);

                    // left action of D
                    DualVector dvd = omega_bar * g.D;
                    cplx wd = gauge_gamma(gp, mp, l + mp.N) / gauge_gamma(gp, mp, l) *
                              d_func(u, mp);
                    CVec want_dl = wd * dual_vacuum(l + 1, gp, mp).amp;
                    REQUIRE(vec_residual(dvd.amp, want_dl) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("a and d vanish at the expected inhomogeneity shifts") {
    Rng rng(41005);
    ModelParams mp = random_model(rng, 4);
    REQUIRE(std::abs(d_func(mp.xi[0], mp)) < 1e-12);
    REQUIRE(std::abs(a_func(mp.xi[0] - mp.eta.value(), mp)) < 1e-12);
    // a/d equals the factor-wise f-product where defined
    cplx u = rng.centered(0.45);
    cplx ratio = a_func(u, mp) / d_func(u, mp);
    cplx oracle = f_prod(u, mp.xi, mp);
    REQUIRE(rel_diff(ratio, oracle) < 1e-12);
}

TEST_CASE("f and h conventions") {
    Rng rng(41006);
    ModelParams mp = random_model(rng, 2);
    cplx u = rng.centered(0.4);
    // empty-set product is 1
    REQUIRE(f_prod(u, std::span<const cplx>{}, mp) == cplx(1.0));
    // h(u, u) = 1
    REQUIRE(rel_diff(h_func(u, u, mp), cplx(1.0)) < 1e-14);
    // f against the theta oracle at eta = 1/2, tau = 0.5i
    ModelParams mp2(2, Eta::half(), cplx(0.0, 0.5), {cplx(0.05, 0.0), cplx(-0.07, 0.0)});
    cplx f = f_func(0.3, 0.1, mp2);
    cplx want = eval_theta(1, 0.7, mp2.ctx) / eval_theta(1, 0.2, mp2.ctx);
    REQUIRE(rel_diff(f, want) < 1e-13);
    // pole guard
    REQUIRE_THROWS_AS(f_func(u, u, mp), PoleCollision);
}
