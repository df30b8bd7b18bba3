#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>

#include "gauge.hpp"

namespace xyzff {

// ---------------------------------------------------------------------------
// Generalized (dual) Bethe vectors at eta = 1/2 and the free-fermion Bethe
// equations chi_nu(z) = 0.
// ---------------------------------------------------------------------------

enum class Side { right, left };

struct BetheState {
    int nu = 0;
    std::vector<cplx> params;  // cardinality m = n - r
    int r = 0;                 // imbalance offset
    Side side = Side::right;
    bool on_shell = false;
    CVec amp;
    // Largest pre-vector norm entering the Fourier sum. States that vanish
    // identically (e.g. m > N operator chains) are relative zeros against
    // this scale, which is the honest yardstick for vanishing checks.
    double build_scale = 0.0;

    StateVector state() const {
        if (side != Side::right) throw Error("BetheState: not a right vector");
        return {amp};
    }
    DualVector dual() const {
        if (side != Side::left) throw Error("BetheState: not a left vector");
        return {amp};
    }
    double norm() const { return amp.norm(); }
};

// Builds (dual) pre-Bethe and Bethe vectors, caching the monodromy per
// spectral parameter. One builder per thread; the cache is guarded anyway.
class StateBuilder {
  public:
    StateBuilder(const ModelParams& mp, GaugeParams gp) : mp_(mp), gp_(gp) {}

    const ModelParams& model() const { return mp_; }
    const GaugeParams& gauge() const { return gp_; }

    const Monodromy& monodromy(cplx u) {
        std::scoped_lock lock(mu_);
        auto key = std::make_pair(u.real(), u.imag());
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, build_monodromy(u, mp_)).first;
        return it->second;
    }

    // |psi_{n-r}^l(u)> = B_{l-r-1,l+r+1}(u_m) ... B_{l-n,l+n}(u_1) |Omega^{l-n}>,
    // the factor with u_1 acting first. chain_scale, when given, records the
    // largest intermediate norm; a chain that annihilates identically (m > N)
    // still reports the magnitude it cancelled from.
    StateVector pre_bethe(long l, std::span<const cplx> us, int r,
                          double* chain_scale = nullptr) {
        check_cardinality(us.size(), r, "pre_bethe");
        StateVector v = vacuum(l - mp_.n, gp_, mp_);
        if (chain_scale) *chain_scale = std::max(*chain_scale, v.norm());
        for (std::size_t j = 1; j <= us.size(); ++j) {
            const long lo = l - mp_.n + static_cast<long>(j) - 1;
            const long hi = l + mp_.n - static_cast<long>(j) + 1;
            const cplx u = us[j - 1];
            v = gauge_block(monodromy(u), lo, hi, u, GaugeEntry::B, gp_, mp_) * v;
            if (chain_scale) *chain_scale = std::max(*chain_scale, v.norm());
        }
        return v;
    }

    // <psi_{n-r}^l(v)| = <Omega-bar^{l-n}| Cbar_{l-n,l+n}(v_1) ... Cbar_{l-r-1,l+r+1}(v_m).
    DualVector pre_bethe_dual(long l, std::span<const cplx> vs, int r,
                              double* chain_scale = nullptr) {
        check_cardinality(vs.size(), r, "pre_bethe_dual");
        DualVector d = dual_vacuum(l - mp_.n, gp_, mp_);
        if (chain_scale) *chain_scale = std::max(*chain_scale, d.norm());
        for (std::size_t j = 1; j <= vs.size(); ++j) {
            const long lo = l - mp_.n + static_cast<long>(j) - 1;
            const long hi = l + mp_.n - static_cast<long>(j) + 1;
            const cplx v = vs[j - 1];
            d = d * gauge_block_cbar(monodromy(v), lo, hi, v, gp_, mp_);
            if (chain_scale) *chain_scale = std::max(*chain_scale, d.norm());
        }
        return d;
    }

    // Fourier transform over the gauge index, eta = 1/2 phases are exact
    // powers of i.
    BetheState bethe(int nu, std::span<const cplx> us, int r, bool on_shell = false) {
        mp_.eta.require_half("bethe");
        CVec sum = CVec::Zero(mp_.dim());
        double scale = 0.0;
        for (long l = 0; l <= 3; ++l)
            sum += unit_i_pow(-static_cast<long>(nu) * l) * pre_bethe(l, us, r, &scale).amp;
        return {nu, {us.begin(), us.end()}, r, Side::right, on_shell, std::move(sum), scale};
    }

    BetheState bethe_dual(int nu, std::span<const cplx> vs, int r, bool on_shell = false) {
        mp_.eta.require_half("bethe_dual");
        CVec sum = CVec::Zero(mp_.dim());
        double scale = 0.0;
        for (long l = 0; l <= 3; ++l)
            sum += unit_i_pow(static_cast<long>(nu) * l) *
                   pre_bethe_dual(l, vs, r, &scale).amp;
        return {nu, {vs.begin(), vs.end()}, r, Side::left, on_shell, std::move(sum), scale};
    }

  private:
    void check_cardinality(std::size_t m, int r, const char* who) const {
        if (static_cast<int>(m) != mp_.n - r)
            throw Error(std::string(who) + ": cardinality must equal n - r");
    }

    const ModelParams& mp_;
    GaugeParams gp_;
    std::map<std::pair<double, double>, Monodromy> cache_;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Bethe roots: all N zeros of chi_nu in the fundamental cell, their twin
// pairing z -> z +- 1/2, and a twin-free transversal.
// ---------------------------------------------------------------------------

struct LatticeCoord {
    double alpha;  // coefficient of 1
    double beta;   // coefficient of tau
};

inline LatticeCoord to_lattice(cplx z, cplx tau) {
    double beta = z.imag() / tau.imag();
    double alpha = z.real() - beta * tau.real();
    alpha -= std::floor(alpha);
    beta -= std::floor(beta);
    if (alpha >= 1.0) alpha = 0.0;
    if (beta >= 1.0) beta = 0.0;
    return {alpha, beta};
}

inline cplx from_lattice(LatticeCoord c, cplx tau) {
    return cplx(c.alpha, 0.0) + c.beta * tau;
}

inline double lattice_dist(LatticeCoord a, LatticeCoord b) {
    double da = std::abs(a.alpha - b.alpha);
    da = std::min(da, 1.0 - da);
    double db = std::abs(a.beta - b.beta);
    db = std::min(db, 1.0 - db);
    return std::hypot(da, db);
}

struct RootSolveOptions {
    int grid = 80;
    int newton_max = 60;
    double dedupe_tol = 1e-8;
    double residual_tol = 1e-9;
    double pairing_tol = 1e-7;
    int contour_points = 800;
};

struct BetheRootSet {
    int nu = 0;
    std::vector<cplx> roots;               // all N roots, reduced to the cell
    std::vector<std::pair<int, int>> twin_pairs;
    std::vector<cplx> selected;            // one root per pair, alpha in [0, 1/2)
};

namespace bethe_detail {

inline std::optional<cplx> newton(int nu, cplx z, const ModelParams& mp,
                                  const RootSolveOptions& opt) {
    for (int it = 0; it < opt.newton_max; ++it) {
        const cplx val = chi(nu, z, mp);
        if (std::abs(val) < opt.residual_tol * std::max(1e-30, chi_scale(nu, z, mp))) {
            // one polishing step when the derivative allows
            const cplx dp = chi_derivative(nu, z, mp);
            if (std::abs(dp) > 1e-14) z -= val / dp;
            return z;
        }
        const cplx d = chi_derivative(nu, z, mp);
        if (std::abs(d) < 1e-14) return std::nullopt;
        const cplx step = val / d;
        if (std::abs(step) > 0.75) return std::nullopt;  // running away
        z -= step;
    }
    return std::nullopt;
}

// (1/2 pi i) contour integral of chi'/chi around the cell with corner z0;
// counts zeros inside.
inline double winding_number(int nu, cplx z0, cplx tau, const ModelParams& mp, int pts) {
    auto logd = [&](cplx z) { return chi_derivative(nu, z, mp) / chi(nu, z, mp); };
    cplx total = 0.0;
    const cplx legs[4][2] = {{z0, cplx(1.0)},
                             {z0 + 1.0, tau},
                             {z0 + 1.0 + tau, cplx(-1.0)},
                             {z0 + tau, -tau}};
    for (const auto& leg : legs) {
        cplx acc = 0.5 * (logd(leg[0]) + logd(leg[0] + leg[1]));
        for (int i = 1; i < pts; ++i)
            acc += logd(leg[0] + (static_cast<double>(i) / pts) * leg[1]);
        total += acc * leg[1] / static_cast<double>(pts);
    }
    return (total / (2.0 * pi * imag_unit)).real();
}

}  // namespace bethe_detail

inline BetheRootSet solve_bethe_roots(int nu, const ModelParams& mp,
                                      const RootSolveOptions& opt = {}) {
    mp.eta.require_half("solve_bethe_roots");
    const cplx tau = mp.tau;
    const int G = opt.grid;

    // coarse |chi| landscape on the cell
    std::vector<double> magn(static_cast<std::size_t>(G) * G);
    auto at = [&](int i, int j) -> double& {
        return magn[static_cast<std::size_t>(((i % G) + G) % G) * G + (((j % G) + G) % G)];
    };
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            cplx z = from_lattice({(i + 0.5) / G, (j + 0.5) / G}, tau);
            at(i, j) = std::abs(chi(nu, z, mp));
        }

    // Newton from every local minimum of the landscape (torus neighbours)
    std::vector<cplx> found;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            const double v = at(i, j);
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (at(i + di, j + dj) < v) {
                        is_min = false;
                        break;
                    }
                }
            if (!is_min) continue;
            cplx z0 = from_lattice({(i + 0.5) / G, (j + 0.5) / G}, tau);
            if (auto z = bethe_detail::newton(nu, z0, mp, opt)) {
                LatticeCoord lc = to_lattice(*z, tau);
                bool dup = false;
                for (cplx w : found)
                    if (lattice_dist(lc, to_lattice(w, tau)) < opt.dedupe_tol) {
                        dup = true;
                        break;
                    }
                if (!dup) found.push_back(from_lattice(lc, tau));
            }
        }

    if (static_cast<int>(found.size()) != mp.N)
        throw RootCountMismatch("solve_bethe_roots: found " + std::to_string(found.size()) +
                                " roots, expected " + std::to_string(mp.N) +
                                "; try a finer grid");

    // validate the count by the argument principle on a shifted cell kept
    // away from every root
    {
        double best_margin = -1.0;
        cplx best_z0 = 0.0;
        for (int ti = 0; ti < 7; ++ti)
            for (int tj = 0; tj < 7; ++tj) {
                double a0 = (ti + 0.5) / 7.0, b0 = (tj + 0.5) / 7.0;
                double margin = 2.0;
                for (cplx w : found) {
                    LatticeCoord lc = to_lattice(w, tau);
                    double da = std::abs(lc.alpha - a0);
                    da = std::min(da, 1.0 - da);
                    double db = std::abs(lc.beta - b0);
                    db = std::min(db, 1.0 - db);
                    margin = std::min(margin, std::min(da, db));
                }
                if (margin > best_margin) {
                    best_margin = margin;
                    best_z0 = from_lattice({a0, b0}, tau);
                }
            }
        double w = bethe_detail::winding_number(nu, best_z0, tau, mp, opt.contour_points);
        if (std::abs(w - mp.N) > 1e-3)
            throw RootCountMismatch("solve_bethe_roots: winding number " + std::to_string(w) +
                                    " does not certify " + std::to_string(mp.N) + " roots");
    }

    // deterministic ordering
    std::sort(found.begin(), found.end(), [&](cplx a, cplx b) {
        LatticeCoord la = to_lattice(a, tau), lb = to_lattice(b, tau);
        return std::tie(la.beta, la.alpha) < std::tie(lb.beta, lb.alpha);
    });

    BetheRootSet out;
    out.nu = nu;
    out.roots = found;

    // pair z with z* = z + (-1)^eps / 2
    std::vector<int> partner(found.size(), -1);
    for (std::size_t i = 0; i < found.size(); ++i) {
        if (partner[i] >= 0) continue;
        LatticeCoord lc = to_lattice(found[i], tau);
        LatticeCoord twin{lc.alpha < 0.5 ? lc.alpha + 0.5 : lc.alpha - 0.5, lc.beta};
        int match = -1;
        for (std::size_t j = 0; j < found.size(); ++j) {
            if (j == i || partner[j] >= 0) continue;
            if (lattice_dist(to_lattice(found[j], tau), twin) < opt.pairing_tol) {
                match = static_cast<int>(j);
                break;
            }
        }
        if (match < 0)
            throw TwinPairingFailure("solve_bethe_roots: root without a twin partner");
        partner[i] = match;
        partner[match] = static_cast<int>(i);
        out.twin_pairs.emplace_back(static_cast<int>(i), match);
    }

    for (auto [a, b] : out.twin_pairs) {
        LatticeCoord la = to_lattice(found[a], tau);
        out.selected.push_back(la.alpha < 0.5 ? found[a] : found[b]);
    }
    if (static_cast<int>(out.selected.size()) != mp.n)
        throw TwinPairingFailure("solve_bethe_roots: transversal has wrong size");
    return out;
}

// ---------------------------------------------------------------------------
// Sector resolution. chi_nu and chi_{nu+2} share one root set, and for a
// twin-free transversal exactly one of the two Fourier indices gives a
// nonzero on-shell vector; which one is a property of the model draw, not of
// the transversal. Request a sector and get back the live one.
// ---------------------------------------------------------------------------

inline int resolve_live_sector(StateBuilder& sb, const BetheRootSet& rs, int requested_nu,
                               double rel_cut = 1e-6) {
    const ModelParams& mp = sb.model();
    double pre_scale = 0.0;
    std::vector<CVec> pre;
    for (long l = 0; l <= 3; ++l) {
        pre.push_back(sb.pre_bethe(l, rs.selected, 0).amp);
        pre_scale = std::max(pre_scale, pre.back().norm());
    }
    for (int cand : {requested_nu, requested_nu + 2}) {
        CVec sum = CVec::Zero(mp.dim());
        for (long l = 0; l <= 3; ++l)
            sum += unit_i_pow(-static_cast<long>(cand) * l) * pre[l];
        if (sum.norm() > rel_cut * pre_scale) return ((cand % 4) + 4) % 4;
    }
    throw Error("resolve_live_sector: no twin-free state in either Fourier sector");
}

// Left/right on-shell pair in the live sector derived from nu_pref.
struct OnShellPair {
    int nu = 0;
    BetheRootSet roots;
    BetheState right;
    BetheState left;
};

inline OnShellPair make_on_shell_pair(StateBuilder& sb, int nu_pref,
                                      const RootSolveOptions& opt = {}) {
    BetheRootSet rs = solve_bethe_roots(nu_pref, sb.model(), opt);
    const int nu = resolve_live_sector(sb, rs, nu_pref);
    rs.nu = nu;
    BetheState right = sb.bethe(nu, rs.selected, 0, true);
    BetheState left = sb.bethe_dual(nu, rs.selected, 0, true);
    if (left.norm() < 1e-10 * right.norm())
        throw Error("make_on_shell_pair: dual state vanished in the live sector");
    return {nu, std::move(rs), std::move(right), std::move(left)};
}

// ---------------------------------------------------------------------------
// On-shell eigenvalue data. Omega_a is defined by the limit
// theta2(0) * Omega_a = lim_{z->v_a} T_nu(z), evaluated through chi'.
// ---------------------------------------------------------------------------

struct EigenvalueData {
    int nu = 0;
    std::vector<cplx> roots;   // selected twin-free set
    std::vector<cplx> omega;   // eigenvalue residues at the roots
    std::vector<cplx> v_log;   // d/dz (a/d) at the roots

    cplx transfer_value(cplx z, const ModelParams& mp) const {
        return transfer_eigenvalue(nu, z, roots, mp);
    }
};

// d/dz (a/d) at z; DerivativeSingularity where d vanishes.
inline cplx ad_log_ratio_derivative(cplx z, const ModelParams& mp) {
    const cplx d = d_func(z, mp);
    if (std::abs(d) < 1e-12)
        throw DerivativeSingularity("ad_log_ratio_derivative: d(z) vanishes");
    return (a_func_derivative(z, mp) * d - a_func(z, mp) * d_func_derivative(z, mp)) / (d * d);
}

// Omega_a via chi': the defining limit of T_nu at the root.
inline cplx omega_from_limit(int nu, cplx root, std::span<const cplx> others,
                             const ModelParams& mp) {
    return chi_derivative(nu, root, mp) * f_prod(root, others, mp) /
           eval_theta1_derivative(0.0, mp.ctx);
}

// The same quantity written through a(v_a) resp. d(v_a) and the logarithmic
// derivative V_a; the two must agree on shell.
inline cplx omega_via_a(int nu, cplx root, std::span<const cplx> others, cplx v_log,
                        const ModelParams& mp) {
    return -unit_i_pow(-nu) * a_func(root, mp) * f_prod(root, others, mp) * v_log /
           eval_theta1_derivative(0.0, mp.ctx);
}

inline cplx omega_via_d(int nu, cplx root, std::span<const cplx> others, cplx v_log,
                        const ModelParams& mp) {
    return static_cast<double>(parity_sign(mp.n)) * unit_i_pow(nu) * d_func(root, mp) *
           f_prod(root, others, mp) * v_log / eval_theta1_derivative(0.0, mp.ctx);
}

inline EigenvalueData omega_and_v(const BetheRootSet& rs, const ModelParams& mp,
                                  double cross_tol = 1e-9) {
    EigenvalueData out;
    out.nu = rs.nu;
    out.roots = rs.selected;
    for (std::size_t a = 0; a < rs.selected.size(); ++a) {
        const cplx va = rs.selected[a];
        auto others = drop(rs.selected, a);
        const cplx vl = ad_log_ratio_derivative(va, mp);
        const cplx om = omega_from_limit(rs.nu, va, others, mp);
        const cplx om_a = omega_via_a(rs.nu, va, others, vl, mp);
        const cplx om_d = omega_via_d(rs.nu, va, others, vl, mp);
        if (std::abs(om_a - om_d) > cross_tol * std::max(1.0, std::abs(om)))
            throw Error("omega_and_v: a- and d-route eigenvalue residues disagree");
        if (std::abs(om - om_a) > cross_tol * std::max(1.0, std::abs(om)))
            throw Error("omega_and_v: closed form disagrees with the chi' limit");
        out.omega.push_back(om);
        out.v_log.push_back(vl);
    }
    return out;
}

// Relative residual of the eigenrelation T(z)|Psi> = T_nu(z)|Psi> (or the
// dual one) for a materialized on-shell state.
inline double eigen_check(const BetheState& st, cplx z, StateBuilder& sb) {
    const ModelParams& mp = sb.model();
    const Monodromy& mono = sb.monodromy(z);
    const CMat t = mono.A() + mono.D();
    const cplx eig = transfer_eigenvalue(st.nu, z, st.params, mp);
    const double scale = st.norm() * std::max(1.0, std::abs(eig));
    if (st.side == Side::right) {
        return (t * st.amp - eig * st.amp).norm() / scale;
    }
    return (t.transpose() * st.amp - eig * st.amp).norm() / scale;
}

}  // namespace xyzff
