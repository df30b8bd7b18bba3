#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <initializer_list>
#include <vector>

#include "core.hpp"

namespace xyzff {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr long default_dim_cap = 1 << 10;

// Column vector in the 2^N quantum space.
struct StateVector {
    CVec amp;
    long dim() const { return amp.size(); }
    double norm() const { return amp.norm(); }
};

// Row functional on the quantum space. Pairing with a StateVector is
// BILINEAR: no conjugation anywhere. This is the single most error-prone
// convention in the whole artifact; a dual vector is an independently
// constructed left vector, never the Hermitian adjoint of a ket.
struct DualVector {
    CVec amp;
    long dim() const { return amp.size(); }
    double norm() const { return amp.norm(); }
};

inline cplx pair(const DualVector& dual, const StateVector& state) {
    if (dual.dim() != state.dim())
        throw DimensionMismatch("pair: dual and state dimensions differ");
    // transpose, not adjoint
    return (dual.amp.array() * state.amp.array()).sum();
}

inline StateVector operator*(const CMat& op, const StateVector& s) {
    if (op.cols() != s.dim()) throw DimensionMismatch("op*state: dimension mismatch");
    return {op * s.amp};
}

inline DualVector operator*(const DualVector& d, const CMat& op) {
    if (op.rows() != d.dim()) throw DimensionMismatch("dual*op: dimension mismatch");
    return {op.transpose() * d.amp};
}

// Kronecker product in the given order; the first factor is the leftmost /
// most significant one (site 1 convention).
inline CMat kron2(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline CMat kron(const std::vector<CMat>& factors, long dim_cap = default_dim_cap) {
    if (factors.empty()) throw Error("kron: empty factor list");
    CMat out = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        if (out.rows() * factors[i].rows() > dim_cap)
            throw DimensionOverflow("kron: dimension cap exceeded");
        out = kron2(out, factors[i]);
    }
    return out;
}

inline CVec kron_vec(const std::vector<CVec>& factors, long dim_cap = default_dim_cap) {
    if (factors.empty()) throw Error("kron_vec: empty factor list");
    CVec out = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        if (out.size() * factors[i].size() > dim_cap)
            throw DimensionOverflow("kron_vec: dimension cap exceeded");
        CVec next(out.size() * factors[i].size());
        for (long a = 0; a < out.size(); ++a)
            next.segment(a * factors[i].size(), factors[i].size()) = out(a) * factors[i];
        out = next;
    }
    return out;
}

// ---------------------------------------------------------------------------
// LU-backed kernels. Partial pivoting; the Cauchy-type matrices downstream
// can be badly scaled, so unpivoted elimination is not an option.
// ---------------------------------------------------------------------------

namespace lu_detail {

inline Eigen::PartialPivLU<CMat> factor(const CMat& m, const char* who,
                                        bool guard_pivots = true) {
    if (m.rows() != m.cols()) throw DimensionMismatch(std::string(who) + ": matrix not square");
    Eigen::PartialPivLU<CMat> lu(m);
    if (guard_pivots) {
        const double scale = m.cwiseAbs().maxCoeff();
        const auto diag = lu.matrixLU().diagonal();
        double pmin = diag.cwiseAbs().minCoeff();
        if (pmin < 1e-13 * scale)
            throw SingularMatrix(std::string(who) + ": pivot below 1e-13 * scale");
        double pmax = diag.cwiseAbs().maxCoeff();
        if (pmax / pmin > 1e12)
            throw SingularMatrix(std::string(who) + ": condition estimate above 1e12");
    }
    return lu;
}

}  // namespace lu_detail

inline cplx det(const CMat& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("det: matrix not square");
    return Eigen::PartialPivLU<CMat>(m).determinant();
}

inline CMat inv(const CMat& m) {
    auto lu = lu_detail::factor(m, "inv");
    return lu.solve(CMat::Identity(m.rows(), m.cols()));
}

inline CVec solve(const CMat& m, const CVec& rhs) {
    if (m.rows() != rhs.size()) throw DimensionMismatch("solve: rhs size mismatch");
    auto lu = lu_detail::factor(m, "solve");
    return lu.solve(rhs);
}

inline std::vector<double> singular_values(const CMat& m) {
    Eigen::JacobiSVD<CMat> svd(m);
    std::vector<double> out(svd.singularValues().data(),
                            svd.singularValues().data() + svd.singularValues().size());
    return out;
}

// Number of singular values below rel_tol * sigma_max.
inline int nullity(const CMat& m, double rel_tol = 1e-9) {
    auto sv = singular_values(m);
    if (sv.empty()) return 0;
    double smax = sv.front();
    int count = 0;
    for (double s : sv)
        if (s < rel_tol * smax) ++count;
    return count;
}

// Pauli matrices and friends.
inline CMat pauli_x() {
    CMat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline CMat pauli_y() {
    CMat m(2, 2);
    m << cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0);
    return m;
}
inline CMat pauli_z() {
    CMat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
inline CMat id2() { return CMat::Identity(2, 2); }

inline double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace xyzff
