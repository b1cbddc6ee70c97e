#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "warpscatter/common.hpp"
#include "warpscatter/cusp.hpp"
#include "warpscatter/manifold.hpp"
#include "warpscatter/modes.hpp"
#include "warpscatter/radial.hpp"

namespace ws::scattering {

using manifold::ManifoldSpec;

// one scattering channel: a cross-section mode seen from one end
struct ChannelRef {
    std::size_t end = 0;
    int ell = 0;
    Real eigenvalue = 0;
    int slot = 0;
    bool generalized = false;  // cusp channel with ell >= 1 (generalized mode)
    Real weight = 1;           // Gram weight: 1 on regular ends, vol(M) on cusp
};

struct ChannelSpace {
    Real lambda = 0;
    std::vector<ChannelRef> channels;      // open physical channels
    std::vector<ChannelRef> gen_channels;  // generalized cusp channels
};

ChannelSpace make_channels(const ManifoldSpec& spec, Real lambda, Real lambda_max,
                           bool generalized = false, int cusp_trunc = 0);

struct SolveOptions {
    Real r_max = 30.0;       // base extraction radius per end
    std::size_t npts = 4001; // global grid size
    Real lambda_max = 10.0;  // cross-section truncation
};

// numeric value with a separate exponent, for quantities that overflow
struct LogCplx {
    Cplx m = 0;   // mantissa
    Real lg = 0;  // log scale; value = m * exp(lg)
    Cplx value() const;
};

// -- per-mode Helmholtz boundary value problem ------------------------------

struct HelmholtzSolution {
    std::vector<Real> grid;       // global radial coordinate
    std::vector<Cplx> field;      // mode coefficient function
    std::vector<Cplx> incoming;   // per end (0 where closed)
    std::vector<Cplx> outgoing;
    std::vector<bool> open;       // per end
};

HelmholtzSolution helmholtz_bvp(const ManifoldSpec& spec, Real lambda, int ell,
                                std::span<const Cplx> incoming, const SolveOptions& opt = {});

// -- scattering matrix -------------------------------------------------------

struct ScatteringMatrix {
    Real lambda = 0;
    ChannelSpace space;
    Eigen::MatrixXcd S;            // physical block, value convention
    Real unitarity_residual = 0;   // || S^H W S - W || / || W ||
    // generalized part: columns indexed by gen_channels, entries log-scaled
    std::vector<std::vector<LogCplx>> gen_columns;  // [gen col][row over channels+gen]
    bool generalized = false;
};

struct SMatrixOptions : SolveOptions {
    bool generalized = false;
    int cusp_trunc = 2;   // generalized-channel truncation L
    bool parallel = true; // columns dispatch through the worker pool
};

ScatteringMatrix s_matrix(const ManifoldSpec& spec, Real lambda, Real lambda_max,
                          const SMatrixOptions& opt = {});

// -- resolvent and generalized Fourier coefficients --------------------------

struct ModeField {
    std::vector<Real> grid;
    std::vector<modes::Channel> channels;
    std::vector<std::vector<Cplx>> values;  // [channel][grid point]
};

struct ResolventField {
    Real lambda = 0;
    int sign = +1;
    ModeField field;
    // far-field coefficient per (end, channel), coefficient convention
    std::vector<std::vector<Cplx>> fourier;  // [end][channel]
    Real defect_slope = 0;                   // radiation defect fit of the field
};

ResolventField resolvent_apply(const ManifoldSpec& spec, Real lambda, int sign,
                               const ModeField& f, const SolveOptions& opt = {});

// two-radius consistency data for one far-field coefficient
struct TwoRadiusCoeff {
    Cplx at_R = 0, at_2R = 0;
};

struct FourierData {
    std::vector<std::vector<Cplx>> coeff;  // [end][channel]
    std::vector<std::vector<TwoRadiusCoeff>> radii;  // extraction consistency
};

FourierData fourier_coeff(const ManifoldSpec& spec, Real lambda, int sign,
                          const ModeField& f, const SolveOptions& opt = {});

struct ParsevalReport {
    Cplx lhs = 0;  // (1/2 pi i)([R+ - R-]f, g)
    Cplx rhs = 0;  // (F f, F g)
    Real diff = 0;
};

ParsevalReport parseval_check(const ManifoldSpec& spec, Real lambda, const ModeField& f,
                              const ModeField& g, const SolveOptions& opt = {});

// -- stationary source-to-solution kernel ------------------------------------

struct StationaryKernel {
    Real lambda = 0;
    int sign = +1;
    std::vector<Real> region;                 // radial grid of O
    std::vector<modes::Channel> channels;
    std::vector<Eigen::MatrixXcd> K;          // per channel, kernel w.r.t. the
                                              // measure rho^{n-1} dr
    Real symmetry_error = 0;
};

StationaryKernel source_to_solution_stationary(const ManifoldSpec& spec, Real lambda,
                                               int sign, Real region_lo, Real region_hi,
                                               std::size_t region_npts,
                                               const SolveOptions& opt = {});

std::vector<std::vector<Cplx>> kernel_apply(const StationaryKernel& sk,
                                            const ManifoldSpec& spec,
                                            const std::vector<std::vector<Cplx>>& f);

// -- embedded-eigenvalue probe ------------------------------------------------

struct ProbeReport {
    std::vector<Real> lambdas;
    std::vector<std::vector<Cplx>> det;  // [mode][lambda], scale-normalized
    int crossings = 0;                   // zero crossings detected
    Real min_abs = 0;
    Real max_jump = 0;                   // continuity modulus of |det|
};

ProbeReport embedded_eigenvalue_probe(const ManifoldSpec& spec, Real lambda_lo,
                                      Real lambda_hi, std::size_t nlambda,
                                      Real lambda_max, const SolveOptions& opt = {});

// helper shared with the wave module: weighted L2 product of mode fields
Cplx mode_inner(const ManifoldSpec& spec, const ModeField& a, const ModeField& b);

}  // namespace ws::scattering
