#include "warpscatter/scattering.hpp"

#include <algorithm>
#include <cmath>

#include "warpscatter/parallel.hpp"

namespace ws::scattering {

using manifold::EndClass;
using manifold::ProfileEval;
using manifold::RadialProfile;
using manifold::Topology;

Cplx LogCplx::value() const { return m * std::exp(lg); }

namespace {

constexpr Real kOpenMargin = 1e-9;

// ---------------------------------------------------------------------------
// end bookkeeping
// ---------------------------------------------------------------------------

bool end_is_fast(const ManifoldSpec& spec, std::size_t end) {
    const auto& es = spec.ends[end];
    if (es.c0 != 0) return true;
    return es.beta0 > 0.5;
}

// channel open at end j: above the bottom, and not a positive cusp mode
bool channel_open(const ManifoldSpec& spec, std::size_t end, Real lambda, Real E) {
    const auto& es = spec.ends[end];
    if (lambda <= es.E0 + kOpenMargin) return false;
    if (es.classification == EndClass::Cusp && E > 0) return false;
    return true;
}

RadialProfile outward_profile(const ManifoldSpec& spec, std::size_t end) {
    if (spec.topology == Topology::HalfLine || end == 0) return spec.profile;
    return RadialProfile::mirrored(spec.profile);
}

// phase function of fast ends: Phi_j(r,lambda) = int_0^r sqrt(lambda -
// ((n-1)/2)^2 (rho'/rho)^2), in the outward coordinate
Real phi_fast_integrand(const ManifoldSpec& spec, std::size_t end, Real lambda, Real rt) {
    ProfileEval e = outward_profile(spec, end).eval(rt);
    Real w = (spec.n - 1) * e.drho / (2 * e.rho);
    Real arg = lambda - w * w;
    if (arg < 0)
        throw NumericError("Phi_j: phase integrand negative (lambda too close to the bottom)");
    return std::sqrt(arg);
}

Real phi_fast(const ManifoldSpec& spec, std::size_t end, Real lambda, Real rt) {
    return num::adaptive_simpson(
        [&](Real t) { return phi_fast_integrand(spec, end, lambda, t); }, 0.0, rt, 1e-12);
}

// limit of the jost phase minus Phi_j; finite on fast ends
Real phase_offset(const ManifoldSpec& spec, std::size_t end, Real lambda, Real E,
                  const radial::WKBData& wkb, Real r_ref) {
    (void)E;
    Real base = wkb.phi(r_ref) - phi_fast(spec, end, lambda, r_ref);
    auto diff = [&](Real t) {
        return wkb.alpha(t) - phi_fast_integrand(spec, end, lambda, t);
    };
    auto prof = outward_profile(spec, end);
    Real far = std::min(prof.rmax(), std::max(4 * r_ref, Real(200.0)));
    Real tail = (far > r_ref) ? num::adaptive_simpson(diff, r_ref, far, 1e-12) : 0.0;
    // remainder beyond `far`: exponential ends decay at rate 2 c0, power ends
    // like r^{-2 beta}
    Real rem = 0;
    const auto& es = spec.ends[end];
    Real d_far = diff(far);
    if (es.c0 != 0)
        rem = d_far / (2 * std::abs(es.c0));
    else if (es.beta0 > 0.5)
        rem = d_far * far / (2 * es.beta0 - 1);
    return base + tail + rem;
}

// one basis solution on the global grid, with log scales
struct ScaledFn {
    std::vector<Cplx> u, du;
    std::vector<Real> lg;
};

struct EndBasis {
    bool open = false;
    bool fast = true;
    Real E0 = 0, k = 0, Cj = 1, delta = 0;
    std::size_t match = 0;     // grid index used for coefficient extraction
    ScaledFn plus, minus;      // open: jost pair
    ScaledFn dec;              // closed: decaying solution
    Cplx Wpm = 0;              // rho^{n-1} W(plus, minus) at match (mantissa)
    Real Wpm_lg = 0;
};

// map an outward-solved function onto the global grid
template <class Sol>
ScaledFn map_outward(const ManifoldSpec& spec, std::size_t end, const Sol& sol,
                     std::size_t npts) {
    ScaledFn f;
    f.u.resize(npts);
    f.du.resize(npts);
    f.lg.assign(npts, 0.0);
    const bool flip = (spec.topology == Topology::FullLine && end == 1);
    for (std::size_t i = 0; i < npts; ++i) {
        std::size_t src = flip ? npts - 1 - i : i;
        f.u[i] = Cplx(sol.u[src]);
        f.du[i] = flip ? -Cplx(sol.du[src]) : Cplx(sol.du[src]);
        if constexpr (requires { sol.log_scale; }) f.lg[i] = sol.log_scale[src];
    }
    return f;
}

struct ModeContext {
    std::vector<Real> grid;
    std::vector<Real> weight;  // rho^{n-1} on the grid
    std::vector<EndBasis> ends;
};

std::vector<Real> mode_grid(const ManifoldSpec& spec, Real lambda, Real E,
                            const SolveOptions& opt) {
    // per-end extraction radii: at least 2.2 x the onset radius on slow ends
    std::vector<Real> R(std::max<std::size_t>(spec.ends.size(), 2), opt.r_max);
    for (std::size_t j = 0; j < spec.ends.size(); ++j) {
        if (!channel_open(spec, j, lambda, E)) continue;
        radial::ModeProblem mp;
        mp.n = spec.n;
        mp.profile = outward_profile(spec, j);
        mp.E = E;
        mp.lambda = lambda;
        mp.r_lo = 0;
        mp.r_hi = opt.r_max;
        radial::WKBData wkb(mp);
        R[j] = std::max(R[j], 2.2 * wkb.r0() + 2.0);
    }
    Real lo = (spec.topology == Topology::HalfLine) ? spec.wall : -R[1];
    Real hi = R[0];
    std::size_t npts = opt.npts;
    Real k = std::sqrt(std::max(lambda, Real(1.0)));
    std::size_t needed = static_cast<std::size_t>((hi - lo) * 18 * k);
    npts = std::max(npts, needed) | 1;  // odd count keeps a midpoint node
    return num::linspace(lo, hi, npts);
}

EndBasis build_end_basis(const ManifoldSpec& spec, std::size_t end, Real lambda, Real E,
                         std::span<const Real> grid) {
    EndBasis eb;
    const auto& es = spec.ends[end];
    eb.open = channel_open(spec, end, lambda, E);
    eb.fast = end_is_fast(spec, end);
    eb.E0 = es.E0;
    const std::size_t npts = grid.size();
    eb.match = (spec.topology == Topology::FullLine && end == 1) ? 0 : npts - 1;

    radial::ModeProblem mp;
    mp.n = spec.n;
    mp.profile = outward_profile(spec, end);
    mp.E = E;
    mp.lambda = lambda;

    // outward grid: ascending in the end's own coordinate
    std::vector<Real> og(npts);
    const bool flip = (spec.topology == Topology::FullLine && end == 1);
    for (std::size_t i = 0; i < npts; ++i)
        og[i] = flip ? -grid[npts - 1 - i] : grid[i];
    mp.r_lo = og.front();
    mp.r_hi = og.back();

    if (eb.open) {
        eb.k = std::sqrt(lambda - es.E0);
        eb.Cj = std::sqrt(kPi / eb.k);
        radial::WKBData wkb(mp);
        eb.delta = eb.fast ? phase_offset(spec, end, lambda, E, wkb, og.back()) : 0.0;
        auto plus = radial::jost_solve_on(mp, +1, og);
        auto minus = radial::jost_solve_on(mp, -1, og);
        eb.plus = map_outward(spec, end, plus, npts);
        eb.minus = map_outward(spec, end, minus, npts);
        std::size_t m = eb.match;
        Real w = std::pow(spec.profile.eval(grid[m]).rho, spec.n - 1);
        eb.Wpm = w * (eb.plus.u[m] * eb.minus.du[m] - eb.plus.du[m] * eb.minus.u[m]);
        eb.Wpm_lg = 0;
    } else {
        auto dec = radial::evanescent_solve_on(mp, og);
        eb.dec = map_outward(spec, end, dec, npts);
    }
    return eb;
}

ModeContext build_mode_context(const ManifoldSpec& spec, Real lambda, Real E,
                               const SolveOptions& opt) {
    ModeContext ctx;
    ctx.grid = mode_grid(spec, lambda, E, opt);
    ctx.weight.resize(ctx.grid.size());
    for (std::size_t i = 0; i < ctx.grid.size(); ++i)
        ctx.weight[i] = std::pow(spec.profile.eval(ctx.grid[i]).rho, spec.n - 1);
    for (std::size_t j = 0; j < spec.ends.size(); ++j)
        ctx.ends.push_back(build_end_basis(spec, j, lambda, E, ctx.grid));
    return ctx;
}

// Wronskian of two scaled functions at index i
LogCplx wronskian_at(const ScaledFn& a, const ScaledFn& b, Real weight, std::size_t i) {
    LogCplx w;
    w.m = weight * (a.u[i] * b.du[i] - a.du[i] * b.u[i]);
    w.lg = a.lg[i] + b.lg[i];
    return w;
}

// coefficients of u in the (plus, minus) jost basis of an open end
struct PMCoeff {
    LogCplx bplus, bminus;
};

PMCoeff pm_coefficients(const ModeContext& ctx, std::size_t end, const ScaledFn& u) {
    const EndBasis& eb = ctx.ends[end];
    std::size_t m = eb.match;
    Real w = ctx.weight[m];
    LogCplx num_p = wronskian_at(u, eb.minus, w, m);
    LogCplx num_m = wronskian_at(u, eb.plus, w, m);
    PMCoeff c;
    c.bplus = {num_p.m / eb.Wpm, num_p.lg - eb.Wpm_lg};
    c.bminus = {num_m.m / (-eb.Wpm), num_m.lg - eb.Wpm_lg};
    return c;
}

// regular solution as a scaled function on the grid (half-line only)
ScaledFn regular_on(const ManifoldSpec& spec, Real lambda, Real E,
                    std::span<const Real> grid) {
    radial::ModeProblem mp;
    mp.n = spec.n;
    mp.profile = spec.profile;
    mp.E = E;
    mp.lambda = lambda;
    mp.r_lo = grid.front();
    mp.r_hi = grid.back();
    auto rs = radial::regular_solve(mp, grid.back(), grid.size());
    ScaledFn f;
    f.u.assign(rs.u.begin(), rs.u.end());
    f.du.assign(rs.du.begin(), rs.du.end());
    f.lg = rs.log_scale;
    return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// channel bookkeeping
// ---------------------------------------------------------------------------

ChannelSpace make_channels(const ManifoldSpec& spec, Real lambda, Real lambda_max,
                           bool generalized, int cusp_trunc) {
    ChannelSpace cs;
    cs.lambda = lambda;
    auto ms = modes::eigen_list(spec.cross_section, lambda_max);
    for (std::size_t j = 0; j < spec.ends.size(); ++j) {
        const auto& es = spec.ends[j];
        for (const auto& ch : ms.channels) {
            if (channel_open(spec, j, lambda, ch.eigenvalue)) {
                Real w = (es.classification == EndClass::Cusp) ? spec.cross_section.vol()
                                                               : 1.0;
                cs.channels.push_back({j, ch.ell, ch.eigenvalue, ch.slot, false, w});
            } else if (generalized && es.classification == EndClass::Cusp &&
                       ch.eigenvalue > 0 && ch.ell <= cusp_trunc &&
                       lambda > es.E0 + kOpenMargin) {
                cs.gen_channels.push_back(
                    {j, ch.ell, ch.eigenvalue, ch.slot, true, spec.cross_section.vol()});
            }
        }
    }
    return cs;
}

// ---------------------------------------------------------------------------
// helmholtz boundary value problem per mode
// ---------------------------------------------------------------------------

namespace {

HelmholtzSolution solve_mode_bvp(const ManifoldSpec& spec, Real lambda, Real E,
                                 std::span<const Cplx> incoming, const ModeContext& ctx) {
    const std::size_t nends = spec.ends.size();
    HelmholtzSolution sol;
    sol.grid = ctx.grid;
    sol.incoming.assign(nends, Cplx(0));
    sol.outgoing.assign(nends, Cplx(0));
    sol.open.resize(nends);
    for (std::size_t j = 0; j < nends; ++j) sol.open[j] = ctx.ends[j].open;

    bool any_open = false;
    for (std::size_t j = 0; j < nends; ++j) any_open |= ctx.ends[j].open;
    if (!any_open) throw DomainError("helmholtz_bvp: mode closed on every end");

    if (spec.topology == Topology::HalfLine) {
        const EndBasis& eb = ctx.ends[0];
        if (!eb.open) throw DomainError("helmholtz_bvp: the single end is closed");
        ScaledFn reg = regular_on(spec, lambda, E, ctx.grid);
        auto pc = pm_coefficients(ctx, 0, reg);
        // u = c reg with beta_minus(u) = Cj a e^{i delta}
        Cplx target = eb.Cj * incoming[0] * std::exp(Cplx(0, eb.delta));
        if (std::abs(pc.bminus.m) < 1e-13)
            throw ExceptionalError("helmholtz_bvp: matching system singular");
        LogCplx c{target / pc.bminus.m, -pc.bminus.lg};
        LogCplx bplus{c.m * pc.bplus.m, c.lg + pc.bplus.lg};
        sol.incoming[0] = incoming[0];
        sol.outgoing[0] = -bplus.value() * std::exp(Cplx(0, eb.delta)) / eb.Cj;
        sol.field.resize(ctx.grid.size());
        for (std::size_t i = 0; i < ctx.grid.size(); ++i)
            sol.field[i] = c.m * reg.u[i] * std::exp(c.lg + reg.lg[i]);
        return sol;
    }

    // full line: u = A phi_a + B phi_b
    const EndBasis& e0 = ctx.ends[0];
    const EndBasis& e1 = ctx.ends[1];
    const ScaledFn* phi_a = e0.open ? &e0.plus : &e0.dec;
    const ScaledFn* phi_b = e0.open ? &e0.minus : (e1.open ? &e1.plus : &e1.dec);
    if (!e0.open && !e1.open)
        throw DomainError("helmholtz_bvp: mode closed at both ends");

    // row for an end: open -> beta_minus(u) = Cj a e^{i delta};
    //                 closed -> W(u, dec) = 0
    auto row = [&](std::size_t j, const ScaledFn& f) -> LogCplx {
        const EndBasis& eb = ctx.ends[j];
        std::size_t m = eb.match;
        if (eb.open) {
            LogCplx num_m = wronskian_at(f, eb.plus, ctx.weight[m], m);
            return {num_m.m / (-eb.Wpm), num_m.lg - eb.Wpm_lg};
        }
        return wronskian_at(f, eb.dec, ctx.weight[m], m);
    };

    LogCplx M[2][2] = {{row(0, *phi_a), row(0, *phi_b)},
                       {row(1, *phi_a), row(1, *phi_b)}};
    Cplx rhs[2];
    for (std::size_t j = 0; j < 2; ++j) {
        const EndBasis& eb = ctx.ends[j];
        rhs[j] = eb.open ? eb.Cj * incoming[j] * std::exp(Cplx(0, eb.delta)) : Cplx(0);
    }
    // normalize each row by its largest exponent
    for (int j = 0; j < 2; ++j) {
        Real mx = std::max(M[j][0].lg, M[j][1].lg);
        M[j][0].m *= std::exp(M[j][0].lg - mx);
        M[j][1].m *= std::exp(M[j][1].lg - mx);
        M[j][0].lg = M[j][1].lg = 0;
        rhs[j] *= std::exp(-mx);
        if (!std::isfinite(std::abs(rhs[j])))
            throw NumericError("helmholtz_bvp: row scaling overflow");
    }
    Cplx det = M[0][0].m * M[1][1].m - M[0][1].m * M[1][0].m;
    Real scale = std::max({std::abs(M[0][0].m) * std::abs(M[1][1].m),
                           std::abs(M[0][1].m) * std::abs(M[1][0].m), Real(1e-300)});
    if (std::abs(det) < 1e-10 * scale)
        throw ExceptionalError("helmholtz_bvp: matching system singular (exceptional point)");
    Cplx A = (rhs[0] * M[1][1].m - M[0][1].m * rhs[1]) / det;
    Cplx B = (M[0][0].m * rhs[1] - rhs[0] * M[1][0].m) / det;

    for (std::size_t j = 0; j < 2; ++j) {
        const EndBasis& eb = ctx.ends[j];
        if (!eb.open) continue;
        auto ca = pm_coefficients(ctx, j, *phi_a);
        auto cb = pm_coefficients(ctx, j, *phi_b);
        Cplx bp = A * ca.bplus.value() + B * cb.bplus.value();
        sol.incoming[j] = incoming[j];
        sol.outgoing[j] = -bp * std::exp(Cplx(0, eb.delta)) / eb.Cj;
    }
    sol.field.resize(ctx.grid.size());
    for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
        Cplx va = phi_a->u[i] * std::exp(phi_a->lg[i]);
        Cplx vb = phi_b->u[i] * std::exp(phi_b->lg[i]);
        sol.field[i] = A * va + B * vb;
    }
    return sol;
}

}  // namespace

HelmholtzSolution helmholtz_bvp(const ManifoldSpec& spec, Real lambda, int ell,
                                std::span<const Cplx> incoming, const SolveOptions& opt) {
    Real E = spec.cross_section.eigenvalue(ell);
    if (incoming.size() != spec.ends.size())
        throw SpecError("helmholtz_bvp: one incoming amplitude per end required");
    auto ctx = build_mode_context(spec, lambda, E, opt);
    return solve_mode_bvp(spec, lambda, E, incoming, ctx);
}

// ---------------------------------------------------------------------------
// scattering matrix
// ---------------------------------------------------------------------------

ScatteringMatrix s_matrix(const ManifoldSpec& spec, Real lambda, Real lambda_max,
                          const SMatrixOptions& opt) {
    ScatteringMatrix out;
    out.lambda = lambda;
    out.generalized = opt.generalized;
    out.space = make_channels(spec, lambda, lambda_max, opt.generalized, opt.cusp_trunc);
    const auto& chans = out.space.channels;
    const std::size_t N = chans.size();
    out.S = Eigen::MatrixXcd::Zero(N, N);

    // distinct mode eigenvalues among the channels
    std::vector<Real> evs;
    for (const auto& c : chans)
        if (std::find_if(evs.begin(), evs.end(), [&](Real v) {
                return std::abs(v - c.eigenvalue) < 1e-14;
            }) == evs.end())
            evs.push_back(c.eigenvalue);

    std::vector<Eigen::MatrixXcd> blocks(evs.size());
    std::vector<std::vector<std::size_t>> open_ends(evs.size());
    auto solve_block = [&](std::size_t b) {
        Real E = evs[b];
        auto ctx = build_mode_context(spec, lambda, E, opt);
        std::vector<std::size_t> ends;
        for (std::size_t j = 0; j < spec.ends.size(); ++j)
            if (ctx.ends[j].open) ends.push_back(j);
        Eigen::MatrixXcd S(ends.size(), ends.size());
        for (std::size_t col = 0; col < ends.size(); ++col) {
            std::vector<Cplx> inc(spec.ends.size(), Cplx(0));
            inc[ends[col]] = 1.0;
            auto sol = solve_mode_bvp(spec, lambda, E, inc, ctx);
            for (std::size_t rw = 0; rw < ends.size(); ++rw)
                S(rw, col) = sol.outgoing[ends[rw]];
        }
        blocks[b] = S;
        open_ends[b] = ends;
    };
    if (opt.parallel)
        par::parallel_for(evs.size(), solve_block);
    else
        par::serial_for(evs.size(), solve_block);

    // scatter the little blocks into the channel matrix; modes decouple, so
    // cross-(ell, slot) entries stay exactly zero
    for (std::size_t b = 0; b < evs.size(); ++b) {
        for (std::size_t i = 0; i < N; ++i) {
            if (std::abs(chans[i].eigenvalue - evs[b]) > 1e-14) continue;
            for (std::size_t j = 0; j < N; ++j) {
                if (std::abs(chans[j].eigenvalue - evs[b]) > 1e-14) continue;
                if (chans[i].slot != chans[j].slot || chans[i].ell != chans[j].ell)
                    continue;
                auto& oe = open_ends[b];
                auto ri = std::find(oe.begin(), oe.end(), chans[i].end) - oe.begin();
                auto rj = std::find(oe.begin(), oe.end(), chans[j].end) - oe.begin();
                out.S(i, j) = blocks[b](ri, rj);
            }
        }
    }

    // value convention on cusp channels: S_v = D^{-1} S_c D, D = sqrt(weight)
    Eigen::VectorXd D(N);
    for (std::size_t i = 0; i < N; ++i) D(i) = std::sqrt(chans[i].weight);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out.S(i, j) *= D(j) / D(i);

    Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(N, N);
    for (std::size_t i = 0; i < N; ++i) W(i, i) = chans[i].weight;
    out.unitarity_residual =
        N ? Real((out.S.adjoint() * W * out.S - W).norm() / W.norm()) : Real(0);

    // generalized cusp columns
    if (opt.generalized && !out.space.gen_channels.empty()) {
        if (spec.topology == Topology::HalfLine)
            throw SpecError("generalized columns need a second end");
        for (const auto& gc : out.space.gen_channels) {
            std::vector<LogCplx> col(N + out.space.gen_channels.size(), LogCplx{});
            Real E = gc.eigenvalue;
            auto ctx = build_mode_context(spec, lambda, E, opt);
            const auto& grid = ctx.grid;
            const bool flip = (gc.end == 1);
            std::vector<Real> og(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i)
                og[i] = flip ? -grid[grid.size() - 1 - i] : grid[i];
            auto prof = outward_profile(spec, gc.end);
            auto pair = cusp::cusp_solve(prof, E, lambda, spec.n, og.back(), og.front(),
                                         og.size());
            ScaledFn up, um;
            up.u.resize(grid.size());
            up.du.resize(grid.size());
            up.lg.resize(grid.size());
            um = up;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                std::size_t src = flip ? grid.size() - 1 - i : i;
                Real sgn = flip ? -1.0 : 1.0;
                up.u[i] = pair.up[src];
                up.du[i] = sgn * pair.dup[src];
                up.lg[i] = pair.up_log[src];
                um.u[i] = pair.um[src];
                um.du[i] = sgn * pair.dum[src];
                um.lg[i] = pair.um_log[src];
            }
            // u = up + b um, radiating (or decaying) at the other end
            std::size_t other = 1 - gc.end;
            const EndBasis& eo = ctx.ends[other];
            LogCplx b;
            if (eo.open) {
                auto cu = pm_coefficients(ctx, other, up);
                auto cm = pm_coefficients(ctx, other, um);
                if (std::abs(cm.bminus.m) == 0)
                    throw ExceptionalError("generalized column: singular matching");
                b = {-cu.bminus.m / cm.bminus.m, cu.bminus.lg - cm.bminus.lg};
                Cplx bp = cu.bplus.m * std::exp(cu.bplus.lg) +
                          b.m * cm.bplus.m * std::exp(b.lg + cm.bplus.lg);
                Cplx out_amp = -bp * std::exp(Cplx(0, eo.delta)) / eo.Cj;
                for (std::size_t i = 0; i < N; ++i)
                    if (chans[i].end == other && chans[i].ell == gc.ell &&
                        chans[i].slot == gc.slot)
                        col[i] = {out_amp, 0.0};
            } else {
                std::size_t m = eo.match;
                LogCplx wu = wronskian_at(up, eo.dec, ctx.weight[m], m);
                LogCplx wm = wronskian_at(um, eo.dec, ctx.weight[m], m);
                b = {-wu.m / wm.m, wu.lg - wm.lg};
            }
            for (std::size_t g = 0; g < out.space.gen_channels.size(); ++g) {
                const auto& gr = out.space.gen_channels[g];
                if (gr.end == gc.end && gr.ell == gc.ell && gr.slot == gc.slot)
                    col[N + g] = b;
            }
            out.gen_columns.push_back(std::move(col));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// resolvent, Fourier coefficients, Parseval
// ---------------------------------------------------------------------------

namespace {

struct ScaledCum {
    std::vector<Cplx> m;
    std::vector<Real> lg;
};

ScaledCum scaled_cum_forward(std::span<const Real> x, const ScaledFn& a,
                             std::span<const Cplx> f, std::span<const Real> w) {
    const std::size_t N = x.size();
    ScaledCum c;
    c.m.assign(N, Cplx(0));
    c.lg.assign(N, -1e300);
    Cplx run = 0;
    Real ref = -1e300;
    for (std::size_t i = 1; i < N; ++i) {
        Real h = 0.5 * (x[i] - x[i - 1]);
        for (std::size_t j : {i - 1, i}) {
            Cplx t = a.u[j] * f[j] * w[j] * h;
            Real lg = a.lg[j];
            if (t == Cplx(0)) continue;
            if (lg > ref) {
                run = run * std::exp(ref - lg) + t;
                ref = lg;
            } else {
                run += t * std::exp(lg - ref);
            }
        }
        c.m[i] = run;
        c.lg[i] = ref;
    }
    return c;
}

ScaledCum scaled_cum_backward(std::span<const Real> x, const ScaledFn& a,
                              std::span<const Cplx> f, std::span<const Real> w) {
    const std::size_t N = x.size();
    ScaledCum c;
    c.m.assign(N, Cplx(0));
    c.lg.assign(N, -1e300);
    Cplx run = 0;
    Real ref = -1e300;
    for (std::size_t i = N - 1; i-- > 0;) {
        Real h = 0.5 * (x[i + 1] - x[i]);
        for (std::size_t j : {i, i + 1}) {
            Cplx t = a.u[j] * f[j] * w[j] * h;
            Real lg = a.lg[j];
            if (t == Cplx(0)) continue;
            if (lg > ref) {
                run = run * std::exp(ref - lg) + t;
                ref = lg;
            } else {
                run += t * std::exp(lg - ref);
            }
        }
        c.m[i] = run;
        c.lg[i] = ref;
    }
    return c;
}

struct TwoSidedKernel {
    ScaledFn uL, uR;
    LogCplx What;
};

TwoSidedKernel two_sided_kernel(const ManifoldSpec& spec, Real lambda, int sign, Real E,
                                const ModeContext& ctx) {
    TwoSidedKernel k;
    if (spec.topology == Topology::HalfLine) {
        k.uL = regular_on(spec, lambda, E, ctx.grid);
    } else {
        const EndBasis& e1 = ctx.ends[1];
        k.uL = e1.open ? (sign > 0 ? e1.plus : e1.minus) : e1.dec;
    }
    const EndBasis& e0 = ctx.ends[0];
    k.uR = e0.open ? (sign > 0 ? e0.plus : e0.minus) : e0.dec;

    std::size_t m = ctx.grid.size() / 2;
    Real w = ctx.weight[m];
    Cplx mant = w * (k.uL.u[m] * k.uR.du[m] - k.uL.du[m] * k.uR.u[m]);
    k.What = {mant, k.uL.lg[m] + k.uR.lg[m]};
    Real scale = std::max({std::abs(k.uL.u[m]) * std::abs(k.uR.du[m]),
                           std::abs(k.uL.du[m]) * std::abs(k.uR.u[m]), Real(1e-300)}) *
                 w;
    if (std::abs(mant) < 1e-10 * scale)
        throw ExceptionalError("resolvent: vanishing Wronskian (near exceptional set)");
    return k;
}

std::vector<Cplx> apply_two_sided(const TwoSidedKernel& k, std::span<const Real> grid,
                                  std::span<const Real> weight, std::span<const Cplx> f) {
    const std::size_t N = grid.size();
    auto A = scaled_cum_forward(grid, k.uL, f, weight);
    auto B = scaled_cum_backward(grid, k.uR, f, weight);
    std::vector<Cplx> u(N);
    for (std::size_t i = 0; i < N; ++i) {
        Cplx acc = 0;
        if (A.m[i] != Cplx(0)) {
            Real ex = k.uR.lg[i] + A.lg[i] - k.What.lg;
            if (ex > 300) throw NumericError("resolvent: kernel exponent overflow");
            acc += k.uR.u[i] * A.m[i] * std::exp(ex);
        }
        if (B.m[i] != Cplx(0)) {
            Real ex = k.uL.lg[i] + B.lg[i] - k.What.lg;
            if (ex > 300) throw NumericError("resolvent: kernel exponent overflow");
            acc += k.uL.u[i] * B.m[i] * std::exp(ex);
        }
        u[i] = acc / k.What.m;
    }
    return u;
}

}  // namespace

ResolventField resolvent_apply(const ManifoldSpec& spec, Real lambda, int sign,
                               const ModeField& f, const SolveOptions& opt) {
    (void)opt;
    ResolventField out;
    out.lambda = lambda;
    out.sign = sign;
    out.field.grid = f.grid;
    out.field.channels = f.channels;
    out.field.values.resize(f.channels.size());
    out.fourier.assign(spec.ends.size(), std::vector<Cplx>(f.channels.size(), Cplx(0)));

    for (std::size_t c = 0; c < f.channels.size(); ++c) {
        Real E = f.channels[c].eigenvalue;
        ModeContext ctx;
        ctx.grid = f.grid;
        ctx.weight.resize(f.grid.size());
        for (std::size_t i = 0; i < f.grid.size(); ++i)
            ctx.weight[i] = std::pow(spec.profile.eval(f.grid[i]).rho, spec.n - 1);
        for (std::size_t j = 0; j < spec.ends.size(); ++j)
            ctx.ends.push_back(build_end_basis(spec, j, lambda, E, f.grid));

        auto kern = two_sided_kernel(spec, lambda, sign, E, ctx);
        out.field.values[c] = apply_two_sided(kern, f.grid, ctx.weight, f.values[c]);

        auto A = scaled_cum_forward(f.grid, kern.uL, f.values[c], ctx.weight);
        auto B = scaled_cum_backward(f.grid, kern.uR, f.values[c], ctx.weight);
        for (std::size_t j = 0; j < spec.ends.size(); ++j) {
            const EndBasis& eb = ctx.ends[j];
            if (!eb.open) continue;
            const ScaledCum& cum = (j == 0) ? A : B;
            std::size_t last = (j == 0) ? f.grid.size() - 1 : 0;
            LogCplx gamma{cum.m[last] / kern.What.m, cum.lg[last] - kern.What.lg};
            Cplx F = gamma.value() * std::exp(Cplx(0, sign * eb.delta)) / eb.Cj;
            out.fourier[j][c] = F;
        }
    }
    return out;
}

FourierData fourier_coeff(const ManifoldSpec& spec, Real lambda, int sign,
                          const ModeField& f, const SolveOptions& opt) {
    auto rf = resolvent_apply(spec, lambda, sign, f, opt);
    FourierData out;
    out.coeff = rf.fourier;
    out.radii.assign(spec.ends.size(),
                     std::vector<TwoRadiusCoeff>(f.channels.size(), TwoRadiusCoeff{}));
    for (std::size_t c = 0; c < f.channels.size(); ++c) {
        Real E = f.channels[c].eigenvalue;
        for (std::size_t j = 0; j < spec.ends.size(); ++j) {
            const auto& es = spec.ends[j];
            bool open = lambda > es.E0 + 1e-9 &&
                        !(es.classification == EndClass::Cusp && E > 0);
            if (!open) continue;
            const bool at_end1 = (spec.topology == Topology::FullLine && j == 1);
            std::size_t iR, i2R;
            if (at_end1) {
                i2R = 0;
                iR = f.grid.size() / 4;
            } else {
                i2R = f.grid.size() - 1;
                iR = f.grid.size() / 2;
            }
            Real k = std::sqrt(lambda - es.E0);
            Real Cj = std::sqrt(kPi / k);
            for (int which : {0, 1}) {
                std::size_t idx = which ? i2R : iR;
                Real rt = at_end1 ? -f.grid[idx] : f.grid[idx];
                if (rt <= 0) continue;
                Real Phi = phi_fast(spec, j, lambda, rt);
                Real rho = spec.profile.eval(f.grid[idx]).rho;
                Cplx val = rf.field.values[c][idx] * std::pow(rho, (spec.n - 1) / 2.0) *
                           std::exp(Cplx(0, -sign * Phi)) / Cj;
                if (which)
                    out.radii[j][c].at_2R = val;
                else
                    out.radii[j][c].at_R = val;
            }
        }
    }
    return out;
}

Cplx mode_inner(const ManifoldSpec& spec, const ModeField& a, const ModeField& b) {
    if (a.grid.size() != b.grid.size() || a.channels.size() != b.channels.size())
        throw SpecError("mode_inner: field layouts differ");
    Cplx acc = 0;
    for (std::size_t c = 0; c < a.channels.size(); ++c) {
        std::vector<Cplx> dens(a.grid.size());
        for (std::size_t i = 0; i < a.grid.size(); ++i) {
            Real w = std::pow(spec.profile.eval(a.grid[i]).rho, spec.n - 1);
            dens[i] = a.values[c][i] * std::conj(b.values[c][i]) * w;
        }
        acc += num::trapz(a.grid, std::span<const Cplx>(dens));
    }
    return acc;
}

ParsevalReport parseval_check(const ManifoldSpec& spec, Real lambda, const ModeField& f,
                              const ModeField& g, const SolveOptions& opt) {
    auto rp = resolvent_apply(spec, lambda, +1, f, opt);
    auto rm = resolvent_apply(spec, lambda, -1, f, opt);
    ModeField diff = rp.field;
    for (std::size_t c = 0; c < diff.channels.size(); ++c)
        for (std::size_t i = 0; i < diff.grid.size(); ++i)
            diff.values[c][i] -= rm.field.values[c][i];
    ParsevalReport rep;
    rep.lhs = mode_inner(spec, diff, g) / Cplx(0, 2 * kPi);
    auto Fg = resolvent_apply(spec, lambda, +1, g, opt);
    Cplx rhs = 0;
    for (std::size_t j = 0; j < spec.ends.size(); ++j)
        for (std::size_t c = 0; c < f.channels.size(); ++c)
            rhs += rp.fourier[j][c] * std::conj(Fg.fourier[j][c]);
    rep.rhs = rhs;
    rep.diff = std::abs(rep.lhs - rep.rhs);
    return rep;
}

// ---------------------------------------------------------------------------
// stationary source-to-solution kernel
// ---------------------------------------------------------------------------

StationaryKernel source_to_solution_stationary(const ManifoldSpec& spec, Real lambda,
                                               int sign, Real region_lo, Real region_hi,
                                               std::size_t region_npts,
                                               const SolveOptions& opt) {
    StationaryKernel sk;
    sk.lambda = lambda;
    sk.sign = sign;
    auto ms = modes::eigen_list(spec.cross_section, opt.lambda_max);
    sk.channels = ms.channels;
    sk.region = num::linspace(region_lo, region_hi, region_npts);

    auto grid = mode_grid(spec, lambda, 0.0, opt);
    if (region_lo < grid.front() || region_hi > grid.back())
        throw SpecError("source_to_solution_stationary: region outside the validated grid");

    Real sym_err = 0;
    for (const auto& ch : sk.channels) {
        Real E = ch.eigenvalue;
        ModeContext ctx;
        ctx.grid = grid;
        ctx.weight.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            ctx.weight[i] = std::pow(spec.profile.eval(grid[i]).rho, spec.n - 1);
        for (std::size_t j = 0; j < spec.ends.size(); ++j)
            ctx.ends.push_back(build_end_basis(spec, j, lambda, E, grid));
        auto kern = two_sided_kernel(spec, lambda, sign, E, ctx);

        auto interp = [&](const ScaledFn& fn, Real r) -> LogCplx {
            auto it = std::upper_bound(grid.begin(), grid.end(), r);
            std::size_t i1 = std::clamp<std::size_t>(it - grid.begin(), 1, grid.size() - 1);
            std::size_t i0 = i1 - 1;
            Real t = (r - grid[i0]) / (grid[i1] - grid[i0]);
            Real lg = std::max(fn.lg[i0], fn.lg[i1]);
            Cplx v = fn.u[i0] * std::exp(fn.lg[i0] - lg) * (1 - t) +
                     fn.u[i1] * std::exp(fn.lg[i1] - lg) * t;
            return {v, lg};
        };
        Eigen::MatrixXcd K(region_npts, region_npts);
        for (std::size_t a = 0; a < region_npts; ++a) {
            for (std::size_t b = 0; b < region_npts; ++b) {
                Real rlo = std::min(sk.region[a], sk.region[b]);
                Real rhi = std::max(sk.region[a], sk.region[b]);
                LogCplx vl = interp(kern.uL, rlo);
                LogCplx vr = interp(kern.uR, rhi);
                Real ex = vl.lg + vr.lg - kern.What.lg;
                K(a, b) =
                    (ex < -600) ? Cplx(0) : vl.m * vr.m / kern.What.m * std::exp(ex);
            }
        }
        sym_err =
            std::max(sym_err, Real((K - K.transpose()).norm() /
                                   std::max(K.norm(), Real(1e-300))));
        sk.K.push_back(std::move(K));
    }
    sk.symmetry_error = sym_err;
    return sk;
}

std::vector<std::vector<Cplx>> kernel_apply(const StationaryKernel& sk,
                                            const ManifoldSpec& spec,
                                            const std::vector<std::vector<Cplx>>& f) {
    std::vector<std::vector<Cplx>> out(sk.channels.size(),
                                       std::vector<Cplx>(sk.region.size(), Cplx(0)));
    for (std::size_t c = 0; c < sk.channels.size(); ++c) {
        for (std::size_t a = 0; a < sk.region.size(); ++a) {
            Cplx acc = 0;
            for (std::size_t b = 0; b < sk.region.size(); ++b) {
                Real w = std::pow(spec.profile.eval(sk.region[b]).rho, spec.n - 1);
                Real h;
                if (b == 0)
                    h = 0.5 * (sk.region[1] - sk.region[0]);
                else if (b + 1 == sk.region.size())
                    h = 0.5 * (sk.region[b] - sk.region[b - 1]);
                else
                    h = 0.5 * (sk.region[b + 1] - sk.region[b - 1]);
                acc += sk.K[c](a, b) * f[c][b] * w * h;
            }
            out[c][a] = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// embedded-eigenvalue probe
// ---------------------------------------------------------------------------

ProbeReport embedded_eigenvalue_probe(const ManifoldSpec& spec, Real lambda_lo,
                                      Real lambda_hi, std::size_t nlambda,
                                      Real lambda_max, const SolveOptions& opt) {
    ProbeReport rep;
    rep.lambdas = num::linspace(lambda_lo, lambda_hi, nlambda);
    auto ms = modes::eigen_list(spec.cross_section, lambda_max);
    std::vector<Real> evs;
    for (const auto& ch : ms.channels)
        if (ch.slot == 0) evs.push_back(ch.eigenvalue);

    rep.det.assign(evs.size(), std::vector<Cplx>(nlambda, Cplx(0)));
    rep.min_abs = 1e300;
    par::parallel_for(nlambda, [&](std::size_t li) {
        Real lambda = rep.lambdas[li];
        for (std::size_t mi = 0; mi < evs.size(); ++mi) {
            Real E = evs[mi];
            auto ctx = build_mode_context(spec, lambda, E, opt);
            TwoSidedKernel k;
            try {
                k = two_sided_kernel(spec, lambda, +1, E, ctx);
            } catch (const ExceptionalError&) {
                rep.det[mi][li] = 0;
                continue;
            }
            std::size_t m = ctx.grid.size() / 2;
            Real scale = (std::abs(k.uL.u[m]) * std::abs(k.uR.du[m]) +
                          std::abs(k.uL.du[m]) * std::abs(k.uR.u[m])) *
                         ctx.weight[m];
            rep.det[mi][li] =
                k.What.m * ctx.weight[m] / std::max(scale, Real(1e-300)) / ctx.weight[m];
        }
    });
    for (std::size_t mi = 0; mi < evs.size(); ++mi) {
        Real med = 0;
        {
            std::vector<Real> mags;
            for (auto& d : rep.det[mi]) mags.push_back(std::abs(d));
            std::sort(mags.begin(), mags.end());
            med = mags[mags.size() / 2];
        }
        for (std::size_t li = 0; li < nlambda; ++li) {
            Real a = std::abs(rep.det[mi][li]);
            rep.min_abs = std::min(rep.min_abs, a / std::max(med, Real(1e-300)));
            if (li) {
                Real jump = std::abs(rep.det[mi][li] - rep.det[mi][li - 1]);
                rep.max_jump = std::max(rep.max_jump, jump / std::max(med, Real(1e-300)));
                bool re_flip = rep.det[mi][li].real() * rep.det[mi][li - 1].real() < 0;
                bool im_flip = rep.det[mi][li].imag() * rep.det[mi][li - 1].imag() < 0;
                bool dip = a < 1e-3 * med;
                if ((re_flip && im_flip) || dip) ++rep.crossings;
            }
        }
    }
    return rep;
}

}  // namespace ws::scattering
