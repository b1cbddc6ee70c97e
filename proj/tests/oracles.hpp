#pragma once

// Independent reference implementations used only by tests.  These never call
// into the library paths they validate.

#include <complex>
#include <functional>
#include <vector>

#include "warpscatter/common.hpp"

namespace oracle {

using ws::Cplx;
using ws::Real;

// Bessel functions of integer order via their integral representations
Real bessel_j(int n, Real z);
Real bessel_y(int n, Real z);
Cplx hankel1(int n, Real z);

// modified Bessel K: real order nu, or purely imaginary order i*kappa
Real bessel_k(Real nu, Real z);
Real bessel_k_imag(Real kappa, Real z);

// distance and geodesics on a surface of revolution dr^2 + rho(r)^2 dtheta^2,
// by direct integration of the geodesic equations (no Clairaut integral)
struct GeoPoint {
    Real r, theta;
};
std::vector<GeoPoint> geodesic_direct(const std::function<Real(Real)>& rho,
                                      const std::function<Real(Real)>& drho, GeoPoint start,
                                      Real angle, Real length, std::size_t steps = 4000);

}  // namespace oracle
