#pragma once

#include <functional>
#include <span>
#include <vector>

#include "warpscatter/common.hpp"

namespace ws::num {

// ---------------------------------------------------------------------------
// ODE integration: Dormand-Prince 5(4) with adaptive step control.
// State is a flat complex vector; rhs(t, y, dy).
// ---------------------------------------------------------------------------

using OdeRhs = std::function<void(Real, const std::vector<Cplx>&, std::vector<Cplx>&)>;

struct OdeOptions {
    Real rtol = 1e-10;
    Real atol = 1e-13;
    Real hmax = 0.0;   // 0 = no cap
    Real hmin = 1e-14;
    Real h0 = 0.0;     // initial step hint (magnitude); 0 = automatic
    std::size_t max_steps = 50'000'000;
};

// Integrates from t0 to each point of ts (monotone, ts.front() may equal t0).
// Returns the state at every requested point.
std::vector<std::vector<Cplx>> integrate_to_points(const OdeRhs& rhs, Real t0,
                                                   const std::vector<Cplx>& y0,
                                                   std::span<const Real> ts,
                                                   const OdeOptions& opt = {});

std::vector<Cplx> integrate_to(const OdeRhs& rhs, Real t0, const std::vector<Cplx>& y0,
                               Real t1, const OdeOptions& opt = {});

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

Real adaptive_simpson(const std::function<Real(Real)>& f, Real a, Real b,
                      Real tol = 1e-12, int max_depth = 40);
Cplx adaptive_simpson_c(const std::function<Cplx(Real)>& f, Real a, Real b,
                        Real tol = 1e-12, int max_depth = 40);

Real trapz(std::span<const Real> x, std::span<const Real> y);
Cplx trapz(std::span<const Real> x, std::span<const Cplx> y);

// cumulative trapezoid from x.front(); out[0] = 0
std::vector<Cplx> cumtrapz(std::span<const Real> x, std::span<const Cplx> y);
std::vector<Real> cumtrapz(std::span<const Real> x, std::span<const Real> y);

// ---------------------------------------------------------------------------
// Monotone (shape-preserving) cubic Hermite interpolation.  Derivatives come
// from the interpolant itself; second derivative is that of the local cubic.
// ---------------------------------------------------------------------------

class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<Real> x, std::vector<Real> y);
    Real operator()(Real x) const { return value(x); }
    Real value(Real x) const;
    Real deriv(Real x) const;
    Real deriv2(Real x) const;
    Real xmin() const { return x_.front(); }
    Real xmax() const { return x_.back(); }

  private:
    std::size_t interval(Real x) const;
    std::vector<Real> x_, y_, d_;
};

// ---------------------------------------------------------------------------
// Fits and misc
// ---------------------------------------------------------------------------

struct LineFit {
    Real slope = 0, intercept = 0, residual = 0;  // residual: rms of misfit
};
LineFit fit_line(std::span<const Real> x, std::span<const Real> y);

// C^2 smoothstep: 0 for x<=1, 1 for x>=2, quintic polynomial between
Real smoothstep(Real x);
Real smoothstep_deriv(Real x);

// bisection for f continuous with sign change on [a,b]
Real bisect(const std::function<Real(Real)>& f, Real a, Real b, Real tol = 1e-12);

// sqrt with the branch cut on [0,inf): z = r e^{i t}, t in [0,2pi), gives
// sqrt(r) e^{i t/2} (so Im >= 0 always)
Cplx sqrt_upper(Cplx z);

std::vector<Real> linspace(Real a, Real b, std::size_t n);
std::vector<Real> geomspace(Real a, Real b, std::size_t n);

}  // namespace ws::num
