#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "xyzff/linalg.hpp"

using namespace xyzff;
using tst::rel_diff;

namespace {

CMat random_matrix(Rng& rng, long n) {
    CMat m(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) m(i, j) = rng.centered(1.0);
    return m;
}

// Cofactor expansion along the first row; exponential cost, fine for n <= 6.
cplx cofactor_det(const CMat& m) {
    const long n = m.rows();
    if (n == 1) return m(0, 0);
    cplx sum = 0.0;
    for (long j = 0; j < n; ++j) {
        CMat minor(n - 1, n - 1);
        for (long r = 1; r < n; ++r) {
            long cc = 0;
            for (long c = 0; c < n; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = m(r, c);
            }
        }
        sum += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
    }
    return sum;
}

}  // namespace

TEST_CASE("kron of identities and Pauli action on basis states") {
    CMat i4 = kron({id2(), id2()});
    REQUIRE(max_abs(i4 - CMat::Identity(4, 4)) == 0.0);

    CMat zz = kron({pauli_z(), pauli_z()});
    StateVector e00{CVec::Unit(4, 0)};
    StateVector out = (zz * e00);
    REQUIRE(max_abs(out.amp - e00.amp) < 1e-15);

    // site 1 is the most significant factor: sz x id flips sign on |10>.
    CMat z1 = kron({pauli_z(), id2()});
    StateVector e10{CVec::Unit(4, 2)};
    REQUIRE(max_abs((z1 * e10).amp + e10.amp) < 1e-15);
}

TEST_CASE("kron mixed-product property") {
    Rng rng(77001);
    for (int it = 0; it < 20; ++it) {
        CMat a = random_matrix(rng, 2), b = random_matrix(rng, 2);
        CMat c = random_matrix(rng, 2), d = random_matrix(rng, 2);
        CMat lhs = kron({a, b}) * kron({c, d});
        CMat rhs = kron({a * c, b * d});
        REQUIRE(max_abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("kron dimension cap") {
    std::vector<CMat> many(11, id2());
    REQUIRE_THROWS_AS(kron(many), DimensionOverflow);
}

TEST_CASE("pairing is bilinear, not sesquilinear") {
    DualVector d{CVec::Zero(3)};
    StateVector s{CVec::Zero(3)};
    d.amp << cplx(0, 1), cplx(0, 2), cplx(0, -1);
    s.amp << 1.0, 2.0, 3.0;
    cplx p = pair(d, s);
    REQUIRE(std::abs(p.real()) < 1e-15);
    REQUIRE(std::abs(p.imag() - 2.0) < 1e-15);  // i*1 + 2i*2 - i*3 = 2i

    DualVector ek{CVec::Unit(3, 1)};
    StateVector sk{CVec::Unit(3, 1)};
    REQUIRE(std::abs(pair(ek, sk) - 1.0) < 1e-15);

    DualVector bad{CVec::Zero(4)};
    REQUIRE_THROWS_AS(pair(bad, s), DimensionMismatch);
}

TEST_CASE("pairing associates with operator action") {
    Rng rng(77002);
    for (int it = 0; it < 20; ++it) {
        CMat op = random_matrix(rng, 5);
        DualVector d{CVec(5)};
        StateVector s{CVec(5)};
        for (int i = 0; i < 5; ++i) {
            d.amp(i) = rng.centered(1.0);
            s.amp(i) = rng.centered(1.0);
        }
        cplx lhs = pair((d * op), s);
        cplx rhs = pair(d, (op * s));
        REQUIRE(rel_diff(lhs, rhs) < 1e-11);
    }
}

TEST_CASE("determinant against cofactor expansion") {
    Rng rng(77003);
    REQUIRE(std::abs(det(CMat::Identity(6, 6)) - 1.0) < 1e-14);
    for (int it = 0; it < 10; ++it) {
        CMat m = random_matrix(rng, 5);
        REQUIRE(rel_diff(det(m), cofactor_det(m)) < 1e-10);
    }
}

TEST_CASE("inverse contract and singularity guard") {
    Rng rng(77004);
    for (int it = 0; it < 10; ++it) {
        CMat m = random_matrix(rng, 6);
        CMat mi = inv(m);
        REQUIRE(max_abs(m * mi - CMat::Identity(6, 6)) < 1e-10 * max_abs(m));
    }
    CMat sing = CMat::Zero(3, 3);
    sing(0, 0) = 1.0;
    sing(1, 1) = 1.0;
    REQUIRE_THROWS_AS(inv(sing), SingularMatrix);

    CMat m(2, 2);
    m << 1.0, 0.0, 0.0, 1e-13;
    REQUIRE_THROWS_AS(inv(m), SingularMatrix);  // condition estimate above 1e12
}

TEST_CASE("solve matches inverse application") {
    Rng rng(77005);
    CMat m = random_matrix(rng, 7);
    CVec rhs(7);
    for (int i = 0; i < 7; ++i) rhs(i) = rng.centered(1.0);
    CVec x = solve(m, rhs);
    REQUIRE((m * x - rhs).norm() < 1e-11 * rhs.norm() * max_abs(m));
}

TEST_CASE("nullity via singular values") {
    CMat m = CMat::Zero(4, 4);
    m(0, 0) = 2.0;
    m(1, 1) = 1.0;
    REQUIRE(nullity(m) == 2);
    Rng rng(77006);
    REQUIRE(nullity(random_matrix(rng, 4)) == 0);
}
