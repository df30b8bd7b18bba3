#pragma once

#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "theta.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Model data: chain length, anisotropy, modular parameter, inhomogeneities.
// ---------------------------------------------------------------------------

struct ModelParams {
    int N = 2;                 // even number of sites
    int n = 1;                 // N/2
    Eta eta = Eta::half();
    cplx tau;
    std::vector<cplx> xi;      // inhomogeneities, one per site
    ModularContext ctx;
    long dim_cap = default_dim_cap;

    ModelParams(int N_, Eta eta_, cplx tau_, std::vector<cplx> xi_,
                double xi_min_sep = 1e-6)
        : N(N_), n(N_ / 2), eta(eta_), tau(tau_), xi(std::move(xi_)), ctx(tau_) {
        if (N < 2 || N % 2 != 0) throw Error("ModelParams: N must be even and >= 2");
        if ((1L << (N + 1)) > dim_cap)
            throw DimensionOverflow("ModelParams: 2^(N+1) exceeds dimension cap");
        if (static_cast<int>(xi.size()) != N)
            throw Error("ModelParams: xi must have N entries");
        if (xi_min_sep > 0.0) {
            for (int a = 0; a < N; ++a)
                for (int b = a + 1; b < N; ++b)
                    if (std::abs(xi[a] - xi[b]) < xi_min_sep)
                        throw Error("ModelParams: inhomogeneities not pairwise distinct");
        }
    }

    // Homogeneous limit xi = 0 (used for the Hamiltonian cross-check).
    static ModelParams homogeneous(int N_, Eta eta_, cplx tau_) {
        return ModelParams(N_, eta_, tau_, std::vector<cplx>(N_, cplx(0.0)), 0.0);
    }

    long dim() const { return 1L << N; }
};

// ---------------------------------------------------------------------------
// 8-vertex R-matrix.
// ---------------------------------------------------------------------------

struct RCoeffs {
    cplx a, b, c, d;
};

inline RCoeffs r_coeffs(cplx u, const ModelParams& mp) {
    const cplx eta = mp.eta.value();
    const cplx denom = eval_theta(2, 0.0, mp.ctx) * eval_theta(4, 0.0, mp.ctx, 2);
    const cplx t4e = eval_theta(4, eta, mp.ctx, 2);
    const cplx t1e = eval_theta(1, eta, mp.ctx, 2);
    const cplx t1ue = eval_theta(1, u + eta, mp.ctx, 2);
    const cplx t4ue = eval_theta(4, u + eta, mp.ctx, 2);
    const cplx t1u = eval_theta(1, u, mp.ctx, 2);
    const cplx t4u = eval_theta(4, u, mp.ctx, 2);
    return {2.0 * t4e * t1ue * t4u / denom, 2.0 * t4e * t4ue * t1u / denom,
            2.0 * t1e * t4ue * t4u / denom, 2.0 * t1e * t1ue * t1u / denom};
}

// d/du of the four vertex weights.
inline RCoeffs r_coeffs_derivative(cplx u, const ModelParams& mp) {
    const cplx eta = mp.eta.value();
    const cplx denom = eval_theta(2, 0.0, mp.ctx) * eval_theta(4, 0.0, mp.ctx, 2);
    const cplx t4e = eval_theta(4, eta, mp.ctx, 2);
    const cplx t1e = eval_theta(1, eta, mp.ctx, 2);
    const cplx t1ue = eval_theta(1, u + eta, mp.ctx, 2);
    const cplx t4ue = eval_theta(4, u + eta, mp.ctx, 2);
    const cplx t1u = eval_theta(1, u, mp.ctx, 2);
    const cplx t4u = eval_theta(4, u, mp.ctx, 2);
    const cplx d1ue = eval_theta_derivative(1, u + eta, mp.ctx, 2);
    const cplx d4ue = eval_theta_derivative(4, u + eta, mp.ctx, 2);
    const cplx d1u = eval_theta_derivative(1, u, mp.ctx, 2);
    const cplx d4u = eval_theta_derivative(4, u, mp.ctx, 2);
    return {2.0 * t4e * (d1ue * t4u + t1ue * d4u) / denom,
            2.0 * t4e * (d4ue * t1u + t4ue * d1u) / denom,
            2.0 * t1e * (d4ue * t4u + t4ue * d4u) / denom,
            2.0 * t1e * (d1ue * t1u + t1ue * d1u) / denom};
}

inline Eigen::Matrix4cd assemble_r(const RCoeffs& c) {
    Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
    r(0, 0) = c.a;
    r(0, 3) = c.d;
    r(1, 1) = c.b;
    r(1, 2) = c.c;
    r(2, 1) = c.c;
    r(2, 2) = c.b;
    r(3, 0) = c.d;
    r(3, 3) = c.a;
    return r;
}

struct RMatrix {
    cplx u;
    Eigen::Matrix4cd m;
};

inline RMatrix build_r(cplx u, const ModelParams& mp) { return {u, assemble_r(r_coeffs(u, mp))}; }

// ---------------------------------------------------------------------------
// Monodromy matrix, built by sequentially applying 4x4 R-factors embedded at
// (aux, site k). Basis convention: global index = alpha * 2^N + s where the
// auxiliary bit alpha is most significant and site 1 is the most significant
// site bit within s.
// ---------------------------------------------------------------------------

// out = T * embed(R4 at aux+site k); only the 4 coupled columns mix.
inline CMat multiply_embedded_right(const CMat& T, const Eigen::Matrix4cd& R4, int k, int N) {
    const long dim = 1L << N;
    const long D = 2 * dim;
    const long bit = 1L << (N - k);
    CMat out = CMat::Zero(D, D);
    for (long jq = 0; jq < dim; ++jq) {
        const int tk = (jq & bit) ? 1 : 0;
        const long j0 = jq & ~bit;
        const long j1 = jq | bit;
        for (int beta = 0; beta < 2; ++beta) {
            const long col = beta * dim + jq;
            for (int b2 = 0; b2 < 2; ++b2)
                for (int t2 = 0; t2 < 2; ++t2) {
                    const cplx w = R4(b2 * 2 + t2, beta * 2 + tk);
                    if (w == cplx(0.0)) continue;
                    out.col(col) += w * T.col(b2 * dim + (t2 ? j1 : j0));
                }
        }
    }
    return out;
}

// 2x2 auxiliary-space matrix of operators on the quantum space.
struct OperatorBlock {
    CMat A, B, C, D;
};

class Monodromy {
  public:
    Monodromy(CMat full, int N) : full_(std::move(full)), dim_(1L << N) {}

    const CMat& full() const { return full_; }
    long dim() const { return dim_; }

    CMat block(int i, int j) const { return full_.block(i * dim_, j * dim_, dim_, dim_); }
    CMat A() const { return block(0, 0); }
    CMat B() const { return block(0, 1); }
    CMat C() const { return block(1, 0); }
    CMat D() const { return block(1, 1); }
    OperatorBlock blocks() const { return {A(), B(), C(), D()}; }

  private:
    CMat full_;
    long dim_;
};

inline Monodromy build_monodromy(cplx u, const ModelParams& mp) {
    const long D = 2 * mp.dim();
    CMat T = CMat::Identity(D, D);
    for (int k = 1; k <= mp.N; ++k)
        T = multiply_embedded_right(T, build_r(u - mp.xi[k - 1], mp).m, k, mp.N);
    return Monodromy(std::move(T), mp.N);
}

// d/du of the monodromy by the product rule, with analytic R derivatives.
inline Monodromy build_monodromy_derivative(cplx u, const ModelParams& mp) {
    const long D = 2 * mp.dim();
    CMat sum = CMat::Zero(D, D);
    for (int kd = 1; kd <= mp.N; ++kd) {
        CMat T = CMat::Identity(D, D);
        for (int k = 1; k <= mp.N; ++k) {
            const cplx arg = u - mp.xi[k - 1];
            const Eigen::Matrix4cd r4 = (k == kd)
                                            ? assemble_r(r_coeffs_derivative(arg, mp))
                                            : build_r(arg, mp).m;
            T = multiply_embedded_right(T, r4, k, mp.N);
        }
        sum += T;
    }
    return Monodromy(std::move(sum), mp.N);
}

inline CMat transfer(cplx u, const ModelParams& mp) {
    Monodromy t = build_monodromy(u, mp);
    return t.A() + t.D();
}

inline CMat u3_operator(int N) {
    std::vector<CMat> zs(N, pauli_z());
    return kron(zs);
}

// ---------------------------------------------------------------------------
// XYZ Hamiltonian, two independent constructions.
// ---------------------------------------------------------------------------

// H from the logarithmic derivative of the transfer matrix at u = 0
// (homogeneous chain).
inline CMat hamiltonian_log_derivative(const ModelParams& mp) {
    for (cplx x : mp.xi)
        if (x != cplx(0.0))
            throw Error("hamiltonian_log_derivative: requires the homogeneous limit xi = 0");
    const CMat t0 = transfer(0.0, mp);
    Monodromy dmono = build_monodromy_derivative(0.0, mp);
    const CMat dt0 = dmono.A() + dmono.D();
    const cplx th1p0 = eval_theta1_derivative(0.0, mp.ctx);
    const cplx pref = 2.0 * eval_theta(1, mp.eta.value(), mp.ctx) / th1p0;
    const cplx shift = eval_theta1_derivative(mp.eta.value(), mp.ctx) / th1p0;
    const long dim = mp.dim();
    CMat logderiv = inv(t0) * dt0;  // throws SingularMatrix if T(0) is not invertible
    return pref * logderiv - shift * static_cast<double>(mp.N) * CMat::Identity(dim, dim);
}

struct Couplings {
    cplx jx, jy, jz;
};

inline Couplings xyz_couplings(const ModelParams& mp) {
    const cplx eta = mp.eta.value();
    return {eval_theta(4, eta, mp.ctx) / eval_theta(4, 0.0, mp.ctx),
            eval_theta(3, eta, mp.ctx) / eval_theta(3, 0.0, mp.ctx),
            eval_theta(2, eta, mp.ctx) / eval_theta(2, 0.0, mp.ctx)};
}

// H as the explicit sum of two-site Pauli couplings, periodic boundary.
inline CMat hamiltonian_direct(const ModelParams& mp) {
    const Couplings j = xyz_couplings(mp);
    const long dim = mp.dim();
    CMat h = CMat::Zero(dim, dim);
    for (int site = 1; site <= mp.N; ++site) {
        const int next = (site % mp.N) + 1;
        auto two_site = [&](const CMat& op) {
            std::vector<CMat> fac(mp.N, id2());
            fac[site - 1] = op;
            fac[next - 1] = op;
            return kron(fac);
        };
        h += j.jx * two_site(pauli_x()) + j.jy * two_site(pauli_y()) +
             j.jz * two_site(pauli_z());
    }
    return h;
}

}  // namespace xyzff
