#pragma once

#include <optional>
#include <span>
#include <vector>

#include "warpscatter/common.hpp"

namespace ws::modes {

enum class SectionKind { Circle, Sphere, Custom };

struct Channel {
    int ell = 0;        // eigenvalue index
    Real eigenvalue = 0;
    int slot = 0;       // multiplicity slot within the eigenvalue
    int mult = 1;       // total multiplicity of the eigenvalue
};

struct ModeSpectrum {
    std::vector<Channel> channels;  // flattened, sorted by eigenvalue then slot
    Real lambda_max = 0;
};

// Cross-section spectral data {lambda_ell, e_ell}.  Circle sections carry a
// full sampled eigenbasis; spheres are eigenvalue-only bookkeeping; custom
// sections take a user eigenvalue list (and optionally a sampled basis).
class CrossSection {
  public:
    CrossSection() = default;
    static CrossSection circle(Real length);
    static CrossSection sphere(int m);  // dim m, eigenvalues l(l+m-1)
    static CrossSection custom(std::vector<std::pair<Real, int>> eigs, Real vol);

    SectionKind kind() const { return kind_; }
    Real vol() const { return vol_; }
    Real circle_length() const { return length_; }

    // eigenvalue of index ell (not flattened)
    Real eigenvalue(int ell) const;
    int multiplicity(int ell) const;

    friend ModeSpectrum eigen_list(const CrossSection& cs, Real lambda_max);

  private:
    SectionKind kind_ = SectionKind::Circle;
    Real vol_ = 2 * kPi;
    Real length_ = 2 * kPi;  // circle
    int m_ = 2;              // sphere dim
    std::vector<std::pair<Real, int>> eigs_;  // custom
};

ModeSpectrum eigen_list(const CrossSection& cs, Real lambda_max);

// Quadrature realization of the eigenprojections on the circle: expand f
// sampled at N uniform points into flattened-channel coefficients, and back.
// Requires N >= 2*ell_max + 1 (aliasing guard).
std::vector<Cplx> expand(const CrossSection& cs, std::span<const Cplx> samples,
                         const ModeSpectrum& ms);
std::vector<Cplx> synthesize(const CrossSection& cs, std::span<const Cplx> coeffs,
                             const ModeSpectrum& ms, std::size_t nsamples);

// value of the (ell, slot) basis function at angle theta (circle only)
Real basis_value(const CrossSection& cs, const Channel& ch, Real theta);

}  // namespace ws::modes
