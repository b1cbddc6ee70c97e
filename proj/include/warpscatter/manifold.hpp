#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpscatter/common.hpp"
#include "warpscatter/modes.hpp"
#include "warpscatter/numerics.hpp"

namespace ws::manifold {

enum class ProfileKind { Exponential, Subexponential, Polynomial, Tabulated, Cosh };

struct ProfileEval {
    Real rho, drho, ddrho;
};

// The radial warp rho(r).  Analytic kinds evaluate closed forms; tabulated
// profiles go through a monotone cubic interpolant (derivatives from the
// interpolant, never finite differences of the samples).
class RadialProfile {
  public:
    static RadialProfile exponential(Real c0);
    static RadialProfile subexponential(Real c1, Real alpha);
    static RadialProfile polynomial(Real beta, Real shift = 0.0);
    static RadialProfile tabulated(std::vector<Real> r, std::vector<Real> rho);
    // smooth two-ended funnel, rho = cosh(c0 r)
    static RadialProfile cosh_profile(Real c0);
    // the same warp seen from the other end: eval(r) = p.eval(-r), chain rule
    static RadialProfile mirrored(const RadialProfile& p);

    // asymptotic log-derivative limit rho'/rho -> c0 (kind-aware; fitted for
    // tabulated profiles)
    Real asymptotic_c0() const;
    bool is_mirrored() const { return mirrored_; }

    ProfileEval eval(Real r) const;
    Real rho(Real r) const { return eval(r).rho; }

    ProfileKind kind() const { return kind_; }
    Real rmin() const { return rmin_; }
    Real rmax() const { return rmax_; }
    std::string kind_name() const;
    Real param(int i) const { return i == 0 ? p0_ : p1_; }

  private:
    ProfileKind kind_ = ProfileKind::Exponential;
    Real p0_ = 0, p1_ = 0;
    Real rmin_ = -1e300, rmax_ = 1e300;
    bool mirrored_ = false;
    std::shared_ptr<num::Pchip> table_;
};

enum class EndClass { Regular, Cusp };
enum class Topology { HalfLine, FullLine };

struct EndSpec {
    EndClass classification = EndClass::Regular;
    Real c0 = 0;
    Real alpha0 = 0;   // decay order of rho'/rho - c0
    Real beta0 = 0;    // growth order: r rho'/rho >= beta0 (regular) or
                       // rho <= C (1+r)^{beta0} (cusp)
    Real gamma0 = 1e9; // warped products carry no cross-term perturbation
    Real E0 = 0;       // ((n-1) c0 / 2)^2
};

struct ManifoldSpec {
    int n = 2;
    Topology topology = Topology::HalfLine;
    RadialProfile profile;          // global warp on the whole coordinate range
    std::vector<EndSpec> ends;      // half_line: 1 end; full_line: end 0 at +inf, end 1 at -inf
    modes::CrossSection cross_section;
    Real wall = 0.0;                // Dirichlet wall position (half_line)

    // profile evaluated in the outward coordinate of end j (r~ = r or -r)
    ProfileEval eval_outward(std::size_t end, Real rt) const;
};

struct EndFit {
    std::size_t end = 0;
    EndClass classification = EndClass::Regular;
    Real c0 = 0, alpha0 = 0, beta0 = 0, E0 = 0;
    Real residual = 0;  // worst relative misfit against the declared constants
};

// Tail-fits each end of the spec and checks the result against the declared
// EndSpec constants.  Throws SpecError when a fit lands outside tolerance.
std::vector<EndFit> classify_ends(const ManifoldSpec& spec, Real fit_tol = 0.05,
                                  Real tail_rmax = 40.0);

Real essential_spectrum_bottom(const ManifoldSpec& spec);

struct DecayFit {
    Real kappa_hat = 0;
    Real residual = 0;
    bool faster_than_power = false;
    bool floored = false;  // some |f| samples were at/below machine tiny
};

// Fitted power of |f| ~ r^kappa over the sample tail (log-log slope).
DecayFit symbol_decay_fit(std::span<const Real> r, std::span<const Real> f,
                          Real expected_kappa);

inline Real channel_bottom(int n, Real c0) {
    Real v = (n - 1) * c0 / 2;
    return v * v;
}

}  // namespace ws::manifold
