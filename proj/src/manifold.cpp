#include "warpscatter/manifold.hpp"

#include <algorithm>
#include <cmath>

namespace ws::manifold {

RadialProfile RadialProfile::exponential(Real c0) {
    RadialProfile p;
    p.kind_ = ProfileKind::Exponential;
    p.p0_ = c0;
    return p;
}

RadialProfile RadialProfile::subexponential(Real c1, Real alpha) {
    if (!(alpha > 0 && alpha < 1)) throw SpecError("subexponential: need 0 < alpha < 1");
    RadialProfile p;
    p.kind_ = ProfileKind::Subexponential;
    p.p0_ = c1;
    p.p1_ = alpha;
    p.rmin_ = 0.0;
    return p;
}

RadialProfile RadialProfile::polynomial(Real beta, Real shift) {
    RadialProfile p;
    p.kind_ = ProfileKind::Polynomial;
    p.p0_ = beta;
    p.p1_ = shift;
    p.rmin_ = -shift;  // rho = (shift + r)^beta > 0 needs r > -shift
    return p;
}

RadialProfile RadialProfile::tabulated(std::vector<Real> r, std::vector<Real> rho) {
    for (Real v : rho)
        if (!(v > 0)) throw SpecError("tabulated profile: rho must be positive");
    RadialProfile p;
    p.kind_ = ProfileKind::Tabulated;
    p.rmin_ = r.front();
    p.rmax_ = r.back();
    p.table_ = std::make_shared<num::Pchip>(std::move(r), std::move(rho));
    return p;
}

RadialProfile RadialProfile::cosh_profile(Real c0) {
    if (!(c0 > 0)) throw SpecError("cosh profile: need c0 > 0");
    RadialProfile p;
    p.kind_ = ProfileKind::Cosh;
    p.p0_ = c0;
    return p;
}

RadialProfile RadialProfile::mirrored(const RadialProfile& p) {
    RadialProfile q = p;
    q.mirrored_ = !p.mirrored_;
    std::swap(q.rmin_, q.rmax_);
    q.rmin_ = -q.rmin_;
    q.rmax_ = -q.rmax_;
    return q;
}

Real RadialProfile::asymptotic_c0() const {
    Real sign = mirrored_ ? -1.0 : 1.0;
    switch (kind_) {
        case ProfileKind::Exponential: return sign * p0_;
        case ProfileKind::Cosh: return p0_;  // even warp: both tails grow alike
        case ProfileKind::Subexponential:
        case ProfileKind::Polynomial: return 0.0;
        case ProfileKind::Tabulated: {
            Real hi = rmax_ - 0.02 * (rmax_ - rmin_);
            ProfileEval a = eval(hi), b = eval(rmax_ - 0.15 * (rmax_ - rmin_));
            Real ca = a.drho / a.rho, cb = b.drho / b.rho;
            if (std::abs(ca) < 0.02 || std::abs(ca - cb) > 0.2 * std::abs(ca)) return 0.0;
            return ca;
        }
    }
    return 0.0;
}

ProfileEval RadialProfile::eval(Real r) const {
    if (r < rmin_ || r > rmax_) throw DomainError("profile: r outside domain");
    const Real x = mirrored_ ? -r : r;
    ProfileEval out;
    switch (kind_) {
        case ProfileKind::Exponential: {
            Real e = std::exp(p0_ * x);
            out = {e, p0_ * e, p0_ * p0_ * e};
            break;
        }
        case ProfileKind::Subexponential: {
            // rho = exp(c1 r^{1-alpha})
            Real q = 1 - p1_;
            Real rp = std::pow(x, q);
            Real e = std::exp(p0_ * rp);
            Real d1 = p0_ * q * std::pow(x, q - 1);            // (log rho)'
            Real d2 = p0_ * q * (q - 1) * std::pow(x, q - 2);  // (log rho)''
            out = {e, d1 * e, (d2 + d1 * d1) * e};
            break;
        }
        case ProfileKind::Polynomial: {
            Real z = p1_ + x;
            if (!(z > 0)) throw DomainError("polynomial profile: shift + r must be > 0");
            Real v = std::pow(z, p0_);
            out = {v, p0_ * v / z, p0_ * (p0_ - 1) * v / (z * z)};
            break;
        }
        case ProfileKind::Tabulated:
            out = {table_->value(x), table_->deriv(x), table_->deriv2(x)};
            break;
        case ProfileKind::Cosh: {
            Real c = std::cosh(p0_ * x), s = std::sinh(p0_ * x);
            out = {c, p0_ * s, p0_ * p0_ * c};
            break;
        }
    }
    if (mirrored_) out.drho = -out.drho;
    return out;
}

std::string RadialProfile::kind_name() const {
    switch (kind_) {
        case ProfileKind::Exponential: return "exponential";
        case ProfileKind::Subexponential: return "subexponential";
        case ProfileKind::Polynomial: return "polynomial";
        case ProfileKind::Tabulated: return "tabulated";
        case ProfileKind::Cosh: return "cosh";
    }
    return "?";
}

ProfileEval ManifoldSpec::eval_outward(std::size_t end, Real rt) const {
    if (topology == Topology::HalfLine || end == 0) return profile.eval(rt);
    ProfileEval e = profile.eval(-rt);
    return {e.rho, -e.drho, e.ddrho};  // chain rule for r~ = -r
}

// ---------------------------------------------------------------------------

namespace {

struct TailSamples {
    std::vector<Real> r, rho, lrr;  // lrr = rho'/rho
};

TailSamples sample_tail(const ManifoldSpec& spec, std::size_t end, Real rmax) {
    // last 25% of the sampled range, minimum 20 points
    Real hi = rmax;
    if (spec.profile.kind() == ProfileKind::Tabulated) {
        Real lim = (spec.topology == Topology::FullLine && end == 1) ? -spec.profile.rmin()
                                                                     : spec.profile.rmax();
        hi = std::min(hi, 0.98 * lim);
    }
    Real lo = 0.75 * hi;
    std::size_t npts = std::max<std::size_t>(40, 20);
    TailSamples t;
    for (std::size_t i = 0; i < npts; ++i) {
        Real r = lo + (hi - lo) * static_cast<Real>(i) / (npts - 1);
        ProfileEval e = spec.eval_outward(end, r);
        t.r.push_back(r);
        t.rho.push_back(e.rho);
        t.lrr.push_back(e.drho / e.rho);
    }
    return t;
}

}  // namespace

std::vector<EndFit> classify_ends(const ManifoldSpec& spec, Real fit_tol, Real tail_rmax) {
    std::vector<EndFit> out;
    for (std::size_t j = 0; j < spec.ends.size(); ++j) {
        const EndSpec& es = spec.ends[j];
        TailSamples t = sample_tail(spec, j, tail_rmax);
        EndFit f;
        f.end = j;

        // c0 = limit of rho'/rho; treat it as zero when the log-derivative is
        // still visibly decaying across the tail window
        Real lrr_out = t.lrr.back();
        Real lrr_mid = t.lrr[t.lrr.size() / 2];
        f.c0 = lrr_out;
        if (std::abs(lrr_out) < 1e-6 || std::abs(lrr_out - lrr_mid) > 0.1 * std::abs(lrr_out))
            f.c0 = 0;
        f.E0 = channel_bottom(spec.n, f.c0);

        // alpha0: slope of log|rho'/rho - c0| vs log r
        {
            std::vector<Real> lx, ly;
            for (std::size_t i = 0; i < t.r.size(); ++i) {
                Real dev = std::abs(t.lrr[i] - f.c0);
                if (dev > 1e-14) {
                    lx.push_back(std::log(t.r[i]));
                    ly.push_back(std::log(dev));
                }
            }
            f.alpha0 = (lx.size() >= 5) ? -num::fit_line(lx, ly).slope : 1e9;
        }

        // beta0: slope of log rho vs log(1+r); for exponential tails this
        // diverges and only the sign of c0 matters
        if (f.c0 == 0) {
            std::vector<Real> lx, ly;
            for (std::size_t i = 0; i < t.r.size(); ++i) {
                lx.push_back(std::log(1 + t.r[i]));
                ly.push_back(std::log(t.rho[i]));
            }
            f.beta0 = num::fit_line(lx, ly).slope;
        } else {
            f.beta0 = (f.c0 > 0) ? 1e9 : -1e9;
        }

        bool growing = (f.c0 > 0) || (f.c0 == 0 && f.beta0 > 0);
        f.classification = growing ? EndClass::Regular : EndClass::Cusp;

        // compare against declared constants
        auto rel = [](Real a, Real b) {
            Real s = std::max({std::abs(a), std::abs(b), Real(1e-12)});
            return std::abs(a - b) / s;
        };
        Real resid = rel(f.c0, es.c0);
        resid = std::max(resid, rel(f.E0, es.E0));
        if (std::abs(es.beta0) < 1e8 && es.c0 == 0) resid = std::max(resid, rel(f.beta0, es.beta0));
        f.residual = resid;
        if (f.classification != es.classification)
            throw SpecError("classify_ends: end " + std::to_string(j) +
                            " classification disagrees with spec");
        if (resid > fit_tol)
            throw SpecError("classify_ends: end " + std::to_string(j) +
                            " constants outside fit tolerance (residual " +
                            std::to_string(resid) + ")");
        out.push_back(f);
    }
    return out;
}

Real essential_spectrum_bottom(const ManifoldSpec& spec) {
    Real e = 1e300;
    for (const auto& es : spec.ends) e = std::min(e, es.E0);
    return e;
}

DecayFit symbol_decay_fit(std::span<const Real> r, std::span<const Real> f,
                          Real expected_kappa) {
    (void)expected_kappa;
    if (r.size() < 20) throw SpecError("symbol_decay_fit: need >= 20 tail samples");
    if (r.back() < 10 * r.front())
        throw SpecError("symbol_decay_fit: samples must span at least one decade");
    DecayFit out;
    std::vector<Real> lx(r.size()), ly(r.size());
    const Real tiny = 1e-290;
    for (std::size_t i = 0; i < r.size(); ++i) {
        Real a = std::abs(f[i]);
        if (a < tiny) {
            a = tiny;
            out.floored = true;
        }
        lx[i] = std::log(r[i]);
        ly[i] = std::log(a);
    }
    auto fit = num::fit_line(lx, ly);
    out.kappa_hat = fit.slope;
    out.residual = fit.residual;

    // detect super-polynomial decay: the local slope keeps steepening
    std::size_t half = r.size() / 2;
    auto f1 = num::fit_line(std::span(lx).first(half), std::span(ly).first(half));
    auto f2 = num::fit_line(std::span(lx).subspan(half), std::span(ly).subspan(half));
    if (f2.slope < f1.slope - std::max(1.0, 0.25 * std::abs(f1.slope)) && f2.slope < -4)
        out.faster_than_power = true;
    return out;
}

}  // namespace ws::manifold
