#include "warpscatter/cusp.hpp"

#include <algorithm>
#include <cmath>

namespace ws::cusp {

using manifold::ProfileEval;
using manifold::RadialProfile;

Real CuspChange::r_of_t(Real t) const {
    Real target = t / std::sqrt(B);
    Real x = r_of_s.value(target);
    for (int it = 0; it < 3; ++it) {
        Real ds = s_of_r.deriv(x);
        if (!(ds > 0)) break;
        x -= (s_of_r.value(x) - target) / ds;
        x = std::clamp(x, r.front(), r.back());
    }
    return x;
}

CuspChange cusp_change(const RadialProfile& profile, Real B, Real r_lo, Real r_hi,
                       std::size_t npts) {
    if (!(B > 0)) throw DomainError("cusp_change: B must be positive");
    CuspChange c;
    c.B = B;
    c.r = num::linspace(r_lo, r_hi, npts);
    c.s.resize(npts);
    c.s[0] = 0;
    for (std::size_t i = 1; i < npts; ++i) {
        Real piece = num::adaptive_simpson(
            [&](Real x) { return 1.0 / profile.rho(x); }, c.r[i - 1], c.r[i], 1e-13);
        c.s[i] = c.s[i - 1] + piece;
        if (!(c.s[i] > c.s[i - 1])) throw SpecError("cusp_change: s must increase");
    }
    // offset so s is measured from r = 0 when the grid starts above zero
    if (r_lo > 0) {
        Real head = num::adaptive_simpson([&](Real x) { return 1.0 / profile.rho(x); }, 0.0,
                                          r_lo, 1e-13);
        for (auto& v : c.s) v += head;
    }
    c.s_of_r = num::Pchip(c.r, c.s);
    c.r_of_s = num::Pchip(c.s, c.r);
    return c;
}

Real cusp_V(const RadialProfile& profile, Real B, Real lambda, int n, Real r) {
    ProfileEval e = profile.eval(r);
    Real lr = e.drho / e.rho;
    Real dlr = e.ddrho / e.rho - lr * lr;
    Real inner = -lambda + (n * n - 2.0 * n) / 4.0 * lr * lr + (n - 2) / 2.0 * dlr;
    return e.rho * e.rho / B * inner;
}

CuspPotential cusp_potential(const RadialProfile& profile, Real B, Real lambda, int n,
                             Real r_lo, Real r_hi, std::size_t npts) {
    CuspPotential cp;
    cp.change = cusp_change(profile, B, r_lo, r_hi, npts);
    cp.t.resize(npts);
    cp.V.resize(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        cp.t[i] = std::sqrt(B) * cp.change.s[i];
        cp.V[i] = cusp_V(profile, B, lambda, n, cp.change.r[i]);
    }
    // minimal grid point with |V| <= 1/2 from there on
    std::size_t i0 = npts;
    for (std::size_t i = npts; i-- > 0;) {
        if (std::abs(cp.V[i]) <= 0.5)
            i0 = i;
        else
            break;
    }
    if (i0 == npts)
        throw GridError("cusp_potential: |V| <= 1/2 never holds on the grid; extend it");
    cp.t0 = cp.t[i0];
    cp.r0 = cp.change.r[i0];
    return cp;
}

namespace {

Real psi_integrand_sq(const RadialProfile& profile, Real B, Real lambda, int n, Real r) {
    ProfileEval e = profile.eval(r);
    Real lr = e.drho / e.rho;
    Real dlr = e.ddrho / e.rho - lr * lr;
    return B / (e.rho * e.rho) - lambda + (n * n - 2.0 * n) / 4.0 * lr * lr +
           (n - 2) / 2.0 * dlr;
}

}  // namespace

Real psi_onset(const RadialProfile& profile, Real B, Real lambda, int n, Real r_hint) {
    // the t0 rule: smallest scan point with |V| <= 1/2 and the psi integrand
    // positive from there on
    auto grid = num::linspace(std::max(profile.rmin() + 1e-9, 0.0),
                              std::min(profile.rmax(), r_hint), 2001);
    std::size_t i0 = grid.size();
    for (std::size_t i = grid.size(); i-- > 0;) {
        bool ok = std::abs(cusp_V(profile, B, lambda, n, grid[i])) <= 0.5 &&
                  psi_integrand_sq(profile, B, lambda, n, grid[i]) > 0;
        if (ok)
            i0 = i;
        else
            break;
    }
    if (i0 == grid.size()) throw GridError("psi_onset: no admissible onset radius in range");
    return grid[i0];
}

Real psi_eval(const RadialProfile& profile, Real B, Real lambda, int n, Real r, Real r0) {
    if (!(B > 0)) throw DomainError("psi_eval: B must be positive");
    if (r0 < 0) r0 = psi_onset(profile, B, lambda, n, std::max(r, Real(10.0)));
    if (r == r0) return 0.0;
    if (r < r0) return -psi_eval(profile, B, lambda, n, r0, r);
    // raise r0 past any negative stretch of the integrand
    for (int tries = 0; tries < 60; ++tries) {
        bool ok = true;
        for (Real x : num::linspace(r0, r, 257))
            if (psi_integrand_sq(profile, B, lambda, n, x) < 0) {
                ok = false;
                break;
            }
        if (ok) break;
        r0 = r0 + 0.1 * std::max(Real(1.0), std::abs(r0));
        if (r0 >= r) return 0.0;
    }
    return num::adaptive_simpson(
        [&](Real x) {
            return std::sqrt(std::max(psi_integrand_sq(profile, B, lambda, n, x), Real(0)));
        },
        r0, r, 1e-13);
}

// ---------------------------------------------------------------------------

CuspSolutionPair cusp_solve(const RadialProfile& profile, Real B, Real lambda, int n,
                            Real Rmax, Real r_lo, std::size_t npts) {
    if (!(B > 0))
        throw DomainError("cusp_solve: B must be positive (ell = 0 goes through the radial module)");
    if (npts == 0)
        npts = std::clamp<std::size_t>(static_cast<std::size_t>((Rmax - r_lo) * 200), 800,
                                       40000);
    CuspSolutionPair out;
    out.r = num::linspace(r_lo, Rmax, npts);
    out.r0 = psi_onset(profile, B, lambda, n, Rmax);

    CuspChange chg =
        cusp_change(profile, B, r_lo, std::min(profile.rmax(), Rmax + 6.0), npts);
    out.t.resize(npts);
    for (std::size_t i = 0; i < npts; ++i) out.t[i] = chg.t_of_r(out.r[i]);

    out.psi.resize(npts);
    out.psi[0] = psi_eval(profile, B, lambda, n, out.r[0], out.r0);
    for (std::size_t i = 1; i < npts; ++i)
        out.psi[i] =
            out.psi[i - 1] +
            num::adaptive_simpson(
                [&](Real x) {
                    return std::sqrt(
                        std::max(psi_integrand_sq(profile, B, lambda, n, x), Real(0)));
                },
                out.r[i - 1], out.r[i], 1e-14);

    // WKB amplitude in the Liouville variable: a_w = (1+V)^{-1/4}
    auto a_w = [&](Real r) {
        return std::pow(1.0 + cusp_V(profile, B, lambda, n, r), -0.25);
    };
    auto da_w = [&](Real r) {
        Real h = 1e-5 * std::max(Real(1.0), std::abs(r));
        return (a_w(r + h) - a_w(r - h)) / (2 * h);
    };
    auto dpsi = [&](Real r) {
        return std::sqrt(std::max(psi_integrand_sq(profile, B, lambda, n, r), Real(1e-14)));
    };

    auto rhs = [&](Real r, const std::vector<Cplx>& y, std::vector<Cplx>& dy) {
        ProfileEval e = profile.eval(r);
        dy[0] = y[1];
        dy[1] = -(n - 1) * (e.drho / e.rho) * y[1] + (B / (e.rho * e.rho) - lambda) * y[0];
    };
    num::OdeOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 0;
    opt.h0 = out.r[1] - out.r[0];

    // ---- decaying solution: backward from beyond the grid (stable) --------
    Real Rt = Rmax;
    {
        Real target = out.psi.back() + 30.0;
        Real cap = std::min(profile.rmax() - 1e-9, Rmax + 6.0);
        while (Rt < cap && psi_eval(profile, B, lambda, n, Rt, out.r0) < target)
            Rt = std::min(cap, Rt + 0.25);
    }
    Real psi_Rt = psi_eval(profile, B, lambda, n, Rt, out.r0);
    // start data: u = rho^{-(n-2)/2} a_w e^{-psi}; e^{-psi} lives in log scale
    auto decay_data = [&](Real R) {
        ProfileEval e = profile.eval(R);
        Real p = -(n - 2) / 2.0;
        Real rho_f = std::pow(e.rho, p);
        Real u = rho_f * a_w(R);
        Real du = rho_f * (da_w(R) + a_w(R) * (p * e.drho / e.rho - dpsi(R)));
        return std::pair<Real, Real>(u, du);
    };
    out.um.resize(npts);
    out.dum.resize(npts);
    out.um_log.resize(npts);
    {
        auto [u0, du0] = decay_data(Rt);
        std::vector<Cplx> y = {u0, du0};
        Real cur = Rt, scale = -psi_Rt;
        for (std::size_t i = npts; i-- > 0;) {
            y = num::integrate_to(rhs, cur, y, out.r[i], opt);
            cur = out.r[i];
            Real mag = std::max(std::abs(y[0]), std::abs(y[1]));
            if (mag > 1e120 || (mag > 0 && mag < 1e-120)) {
                Real s = std::log(mag);
                y[0] *= std::exp(-s);
                y[1] *= std::exp(-s);
                scale += s;
            }
            out.um[i] = y[0].real();
            out.dum[i] = y[1].real();
            out.um_log[i] = scale;
        }
    }

    // ---- growing solution: forward (stable), normalized at the top --------
    out.up.resize(npts);
    out.dup.resize(npts);
    out.up_log.resize(npts);
    {
        ProfileEval e0 = profile.eval(out.r[0]);
        Real slope = dpsi(out.r[0]) - (n - 2) / 2.0 * e0.drho / e0.rho;
        std::vector<Cplx> y = {Cplx(1.0), Cplx(slope)};
        Real scale = 0;
        out.up[0] = 1.0;
        out.dup[0] = slope;
        out.up_log[0] = 0;
        for (std::size_t i = 1; i < npts; ++i) {
            y = num::integrate_to(rhs, out.r[i - 1], y, out.r[i], opt);
            Real mag = std::max(std::abs(y[0]), std::abs(y[1]));
            if (mag > 1e120) {
                Real s = std::log(mag);
                y[0] *= std::exp(-s);
                y[1] *= std::exp(-s);
                scale += s;
            }
            out.up[i] = y[0].real();
            out.dup[i] = y[1].real();
            out.up_log[i] = scale;
        }
        // normalize so u rho^{(n-2)/2} e^{-psi} -> 1 at the top of the grid
        ProfileEval et = profile.eval(out.r.back());
        Real target_log = out.psi.back() + std::log(a_w(out.r.back())) -
                          (n - 2) / 2.0 * std::log(et.rho);
        Real cur_log = std::log(std::abs(out.up.back())) + out.up_log.back();
        Real shift = target_log - cur_log;
        Real sgn = out.up.back() > 0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < npts; ++i) {
            out.up_log[i] += shift;
            out.up[i] *= sgn;
            out.dup[i] *= sgn;
        }
    }

    // ---- Wronskian constancy ----------------------------------------------
    {
        Real w_ref = 0, drift = 0;
        for (std::size_t i = 0; i < npts; ++i) {
            Real lw = (n - 1) * std::log(profile.rho(out.r[i]));
            Real w = out.up[i] * out.dum[i] - out.dup[i] * out.um[i];
            Real logw = std::log(std::abs(w)) + out.up_log[i] + out.um_log[i] + lw;
            if (i == 0) {
                w_ref = logw;
                out.logW = logw;
                out.signW = w < 0 ? -1 : 1;
            }
            drift = std::max(drift, std::abs(std::exp(logw - w_ref) - 1.0));
        }
        out.wronskian_drift = drift;
    }

    // ---- decaying solution again, via the quadrature formula ---------------
    // u_-(r) = sqrt(B) u_+(r) int_r^inf u_+^{-2} rho^{1-n}; pinned to the
    // backward route at the top, deviation across the grid = route mismatch
    {
        std::vector<Real> Ilog(npts, 0.0);
        std::vector<Real> loggrand(npts);
        for (std::size_t i = 0; i < npts; ++i)
            loggrand[i] = -2 * (std::log(std::abs(out.up[i])) + out.up_log[i]) -
                          (n - 1) * std::log(profile.rho(out.r[i]));
        // analytic tail beyond the grid: integrand ~ e^{-2 psi}, width 1/(2 psi')
        Real ref = loggrand[npts - 1];
        Real run = 1.0 / std::max(2 * dpsi(out.r.back()), Real(1e-8));
        Ilog[npts - 1] = std::log(run) + ref;
        for (std::size_t i = npts - 1; i-- > 0;) {
            Real h = out.r[i + 1] - out.r[i];
            Real m = std::max(loggrand[i], loggrand[i + 1]);
            Real dL = loggrand[i] - loggrand[i + 1];
            // exact for log-linear integrands; falls back to trapezoid
            Real piece;
            if (std::abs(dL) > 1e-8) {
                piece = h * (std::exp(loggrand[i] - m) - std::exp(loggrand[i + 1] - m)) / dL;
            } else {
                piece = 0.5 * h * (std::exp(loggrand[i] - m) + std::exp(loggrand[i + 1] - m));
            }
            if (m > ref) {
                run = run * std::exp(ref - m) + piece;
                ref = m;
            } else {
                run += piece * std::exp(m - ref);
            }
            Ilog[i] = std::log(run) + ref;
        }

        // pin where the quadrature dominates the analytic tail estimate
        std::size_t i_pin = 3 * npts / 4;
        for (std::size_t i = npts; i-- > 0;) {
            if (out.psi.back() - out.psi[i] > 10.0) {
                i_pin = i;
                break;
            }
        }
        Real lq_pin = 0.5 * std::log(B) + std::log(std::abs(out.up[i_pin])) +
                      out.up_log[i_pin] + Ilog[i_pin];
        Real lb_pin = std::log(std::abs(out.um[i_pin])) + out.um_log[i_pin];
        Real pin = lb_pin - lq_pin;
        Real mismatch = 0;
        for (std::size_t i = 0; i <= i_pin; ++i) {
            Real lq = 0.5 * std::log(B) + std::log(std::abs(out.up[i])) + out.up_log[i] +
                      Ilog[i] + pin;
            Real lb = std::log(std::abs(out.um[i])) + out.um_log[i];
            mismatch = std::max(mismatch, std::abs(std::exp(lq - lb) - 1.0));
        }
        out.two_route_mismatch = mismatch;
    }
    return out;
}

}  // namespace ws::cusp
