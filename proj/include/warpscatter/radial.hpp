#pragma once

#include <span>
#include <vector>

#include "warpscatter/common.hpp"
#include "warpscatter/manifold.hpp"
#include "warpscatter/numerics.hpp"

namespace ws::radial {

// One cross-section mode of the Laplacian, reduced to the half-line ODE
//   -u'' - (n-1)(rho'/rho) u' + (E/rho^2) u = lambda u
// on [r_lo, r_hi].  The profile is already oriented outward.
struct ModeProblem {
    int n = 2;
    manifold::RadialProfile profile;
    Real E = 0;         // cross-section eigenvalue
    Cplx lambda = 1.0;  // spectral parameter, Im >= 0
    Real r_lo = 0;
    Real r_hi = 40;

    Real E0() const;          // channel bottom of this profile's end
    Real c0() const;          // fitted asymptotic log-derivative
    // coefficient helpers
    void ode_rhs(Real r, const std::vector<Cplx>& y, std::vector<Cplx>& dy) const;
};

// WKB data: onset radius, local wavenumber alpha, phase integral, amplitude
// corrections a_pm.
class WKBData {
  public:
    WKBData(const ModeProblem& mp);

    Real r0() const { return r0_; }
    Real eps() const { return eps_; }
    Real C() const { return C_; }
    Real k() const { return k_; }

    Real alpha(Real r) const;
    Real alpha_sq(Real r) const;                  // may be <= 0 below the onset
    Real dalpha(Real r) const;
    Real phi(Real r) const;                       // int_{r0}^{r} alpha
    // phase at the grid points; NaN where alpha is not defined
    std::vector<Real> phi_grid(std::span<const Real> r) const;
    Cplx a(int dir, Real r) const;                // a_{+} (dir=+1) or a_{-}
    Cplx da(int dir, Real r) const;

    const ModeProblem& problem() const { return mp_; }

  private:
    ModeProblem mp_;
    Real E0_ = 0, k_ = 0, eps_ = 0, C_ = 0, r0_ = 1, a_ref_ = 0;
    Real tail_int(Real r) const;  // int_r^inf (rho'/rho)' / alpha
};

struct JostSolution {
    int direction = +1;         // +1 outgoing, -1 incoming
    std::vector<Real> r;
    std::vector<Cplx> u, du;
    std::vector<Real> phi;      // phase integral at the grid points
    Real r0 = 0;
    Real k = 0;
    Real tail_error = 0;        // self-check of the asymptotic start data
    // |u rho^{(n-1)/2} e^{-i dir phi} - a_dir| at grid index i
    Real normalization_error(const ModeProblem& mp, const WKBData& wkb,
                             std::size_t i) const;
};

// Exact mode solution with prescribed oscillatory asymptotics, built by the
// tail fixed point (slowly varying remainder) and extended down to r_lo by
// integrating the equation itself.
JostSolution jost_solve(const ModeProblem& mp, int direction, Real Rmax,
                        std::size_t npts = 0);
JostSolution jost_solve_on(const ModeProblem& mp, int direction,
                           std::span<const Real> grid);

struct RegularSolution {
    std::vector<Real> r;
    std::vector<Cplx> u, du;
    std::vector<Real> log_scale;  // true value = u * exp(log_scale)
    bool rescaled = false;
};

// Solution with u(wall)=0, u'(wall)=1; closed channels grow exponentially and
// switch to the rescaled-logarithmic representation automatically.
RegularSolution regular_solve(const ModeProblem& mp, Real Rmax, std::size_t npts = 0);

struct GreenKernel {
    ModeProblem mp;
    int sign = +1;                 // +: outgoing kernel, -: incoming
    std::vector<Real> r;           // uniform grid [wall, Rmax]
    std::vector<Cplx> psi0, dpsi0; // regular solution
    std::vector<Cplx> psi, dpsi;   // Jost solution of the chosen sign
    std::vector<Real> weight;      // rho^{n-1} at grid
    Cplx What = 0;                 // rho^{n-1} (psi0' psi - psi0 psi'), constant
    Real wronskian_drift = 0;      // max relative drift across the grid
};

GreenKernel make_green(const ModeProblem& mp, int sign, Real Rmax, std::size_t npts);

// u = G^{(sign)} f for f sampled on the kernel grid, compactly supported.
std::vector<Cplx> green_apply(const GreenKernel& gk, std::span<const Cplx> f);

struct FarField {
    Cplx ftilde = 0;  // int psi0 f rho^{n-1} / What
    Cplx Ffree = 0;   // (k/pi)^{1/2} ftilde
};
FarField far_field_coeff(const GreenKernel& gk, std::span<const Cplx> f);

// ---------------------------------------------------------------------------
// Radiation condition machinery
// ---------------------------------------------------------------------------

struct PhaseFamily {
    int depth = 0;
    int direction = +1;
    Cplx k = 0;
    std::vector<Real> r;
    std::vector<std::vector<Cplx>> psi;   // levels 0..depth
    std::vector<std::vector<Cplx>> dpsi;
    std::vector<Real> Rm;                 // onset radii per level
    std::vector<Cplx> residual(int level) const;  // -i psi' + psi^2 + Q - k^2
    std::vector<Cplx> Q;                  // cached potential samples
};

PhaseFamily phase_recursion(const ModeProblem& mp, Cplx k, int depth,
                            int direction = +1, std::size_t npts = 4001);

struct DefectReport {
    std::vector<Real> R;     // dyadic radii
    std::vector<Real> avg;   // (1/R) int_0^R |D(k)u|^2 rho^{n-1} dr
    Real slope = 0;          // log-log decay rate of the sequence
    bool decays_to_zero = false;
};

DefectReport radiation_defect(const ModeProblem& mp, std::span<const Real> r,
                              std::span<const Cplx> u, std::span<const Cplx> du,
                              const PhaseFamily& pf);

// ---------------------------------------------------------------------------
// Evanescent (closed-channel) solutions on a tail where the Liouville
// potential q = E/rho^2 + ((n-1)rho'/2rho)^2 + ((n-1)/2)(rho'/rho)' - lambda
// stays positive.  Used for closed channels on regular tails and for cusp
// modes inside scattering assembly; normalization is not the cusp module's.
// ---------------------------------------------------------------------------

struct EvanescentSolution {
    std::vector<Real> r;
    std::vector<Cplx> u, du;
    std::vector<Real> log_scale;  // true value = u * exp(log_scale)
    Real r_star = 0;              // onset of positivity used for the start data
};

EvanescentSolution evanescent_solve(const ModeProblem& mp, Real Rmax,
                                    std::size_t npts = 0);
EvanescentSolution evanescent_solve_on(const ModeProblem& mp, std::span<const Real> grid);

Real liouville_q(const ModeProblem& mp, Real r);

}  // namespace ws::radial
