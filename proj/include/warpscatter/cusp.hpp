#pragma once

#include <span>
#include <vector>

#include "warpscatter/common.hpp"
#include "warpscatter/manifold.hpp"
#include "warpscatter/numerics.hpp"

namespace ws::cusp {

// change of variable s(r) = int_0^r rho^{-1}, t = sqrt(B) s, with the inverse
// map r(t) by monotone interpolation
struct CuspChange {
    Real B = 1;
    std::vector<Real> r, s;
    num::Pchip s_of_r;   // forward map
    num::Pchip r_of_s;   // inverse map (Newton-polished against the forward)
    Real t_of_r(Real rr) const { return std::sqrt(B) * s_of_r.value(rr); }
    Real r_of_t(Real t) const;
};

CuspChange cusp_change(const manifold::RadialProfile& profile, Real B, Real r_lo = 0.0,
                       Real r_hi = 10.0, std::size_t npts = 4001);

// V(t) = rho^2/B ( -lambda + (n^2-2n)/4 (rho'/rho)^2 + (n-2)/2 (rho'/rho)' )
Real cusp_V(const manifold::RadialProfile& profile, Real B, Real lambda, int n, Real r);

struct CuspPotential {
    CuspChange change;
    std::vector<Real> t, V;
    Real t0 = 0;  // |V| <= 1/2 for t >= t0
    Real r0 = 0;  // r(t0)
};

CuspPotential cusp_potential(const manifold::RadialProfile& profile, Real B, Real lambda,
                             int n, Real r_lo = 0.0, Real r_hi = 10.0,
                             std::size_t npts = 4001);

// psi(r) = int_{r0}^{r} sqrt( B/rho^2 - lambda + (n^2-2n)/4 (rho'/rho)^2
//                             + (n-2)/2 (rho'/rho)' )
// r0 defaults to the t0-rule onset; it is raised automatically if the
// integrand turns negative inside the requested range.
Real psi_eval(const manifold::RadialProfile& profile, Real B, Real lambda, int n, Real r,
              Real r0 = -1.0);
Real psi_onset(const manifold::RadialProfile& profile, Real B, Real lambda, int n,
               Real r_hint = 10.0);

// Growing/decaying solution pair on a cusp end, in the r variable, normalized
// by u rho^{(n-2)/2} e^{-+psi} -> 1.  Values are stored log-scaled:
// u_true = u[i] * exp(log_scale[i]).
struct CuspSolutionPair {
    std::vector<Real> r, t;
    std::vector<Real> up, dup, up_log;   // growing
    std::vector<Real> um, dum, um_log;   // decaying (backward integration)
    std::vector<Real> psi;               // phase anchored at r0
    Real r0 = 0;
    Real two_route_mismatch = 0;  // decaying solution: quadrature formula vs
                                  // backward integration, shape deviation
    Real wronskian_drift = 0;     // relative drift of W rho^{n-1}
    // log of |W rho^{n-1}| and its sign
    Real logW = 0;
    int signW = 1;
};

CuspSolutionPair cusp_solve(const manifold::RadialProfile& profile, Real B, Real lambda,
                            int n, Real Rmax, Real r_lo = 0.0, std::size_t npts = 0);

}  // namespace ws::cusp
