#include "warpscatter/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace ws::num {

namespace {

// Dormand-Prince coefficients
constexpr Real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr Real a21 = 1.0 / 5;
constexpr Real a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr Real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr Real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
               a54 = -212.0 / 729;
constexpr Real a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
               a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr Real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
               b6 = 11.0 / 84;
constexpr Real e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
               e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Dopri {
    const OdeRhs& rhs;
    std::size_t n;
    std::vector<Cplx> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;

    explicit Dopri(const OdeRhs& f, std::size_t dim) : rhs(f), n(dim) {
        for (auto* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &ynew}) v->resize(n);
    }

    // one attempted step; returns scaled error estimate
    Real step(Real t, const std::vector<Cplx>& y, Real h, Real rtol, Real atol) {
        auto stage = [&](const std::vector<Cplx>& k_prev_unused) { (void)k_prev_unused; };
        (void)stage;
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] +
                      h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, ynew, k7);
        Real err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
            Real sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            Real q = std::abs(e) / sc;
            err = std::max(err, q);
        }
        return err;
    }
};

}  // namespace

std::vector<std::vector<Cplx>> integrate_to_points(const OdeRhs& rhs, Real t0,
                                                   const std::vector<Cplx>& y0,
                                                   std::span<const Real> ts,
                                                   const OdeOptions& opt) {
    std::vector<std::vector<Cplx>> out;
    out.reserve(ts.size());
    if (ts.empty()) return out;

    const Real dir = (ts.back() >= t0) ? 1.0 : -1.0;
    Dopri w(rhs, y0.size());
    std::vector<Cplx> y = y0;
    Real t = t0;
    rhs(t, y, w.k1);  // FSAL seed

    Real span_total = std::abs(ts.back() - t0);
    Real h = dir * std::min(span_total > 0 ? span_total / 100 : 1.0, 0.1);
    if (opt.h0 > 0) h = dir * opt.h0;
    if (opt.hmax > 0) h = dir * std::min(std::abs(h), opt.hmax);
    std::size_t steps = 0;

    for (Real target : ts) {
        if (std::abs(target - t) < 1e-300) {
            out.push_back(y);
            continue;
        }
        while (dir * (target - t) > 0) {
            if (++steps > opt.max_steps) throw NumericError("ode: step limit exceeded");
            Real hstep = h;
            if (dir * (t + hstep - target) > 0) hstep = target - t;
            Real err = w.step(t, y, hstep, opt.rtol, opt.atol);
            if (err <= 1.0) {
                t += hstep;
                y = w.ynew;
                std::swap(w.k1, w.k7);  // FSAL
                Real fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                fac = std::clamp(fac, 0.2, 5.0);
                h = hstep * fac;
            } else {
                Real fac = std::max(0.1, 0.9 * std::pow(err, -0.2));
                h = hstep * fac;
                if (std::abs(h) < opt.hmin)
                    throw NumericError("ode: step size underflow");
                continue;
            }
            if (opt.hmax > 0 && std::abs(h) > opt.hmax) h = dir * opt.hmax;
            if (std::abs(h) < opt.hmin) h = dir * opt.hmin;
        }
        out.push_back(y);
    }
    return out;
}

std::vector<Cplx> integrate_to(const OdeRhs& rhs, Real t0, const std::vector<Cplx>& y0, Real t1,
                               const OdeOptions& opt) {
    std::vector<Real> ts{t1};
    return integrate_to_points(rhs, t0, y0, ts, opt).front();
}

// ---------------------------------------------------------------------------

namespace {
template <class T>
T simpson_rec(const std::function<T(Real)>& f, Real a, Real b, T fa, T fm, T fb, T whole,
              Real tol, int depth) {
    Real m = 0.5 * (a + b);
    Real lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    T flm = f(lm), frm = f(rm);
    T left = (m - a) / 6 * (fa + 4.0 * flm + fm);
    T right = (b - m) / 6 * (fm + 4.0 * frm + fb);
    T delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15.0;
    return simpson_rec<T>(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec<T>(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace

Real adaptive_simpson(const std::function<Real(Real)>& f, Real a, Real b, Real tol,
                      int max_depth) {
    if (a == b) return 0;
    Real fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    Real whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_rec<Real>(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

Cplx adaptive_simpson_c(const std::function<Cplx(Real)>& f, Real a, Real b, Real tol,
                        int max_depth) {
    if (a == b) return 0;
    Cplx fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    Cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec<Cplx>(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

Real trapz(std::span<const Real> x, std::span<const Real> y) {
    Real s = 0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

Cplx trapz(std::span<const Real> x, std::span<const Cplx> y) {
    Cplx s = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

std::vector<Cplx> cumtrapz(std::span<const Real> x, std::span<const Cplx> y) {
    std::vector<Cplx> out(x.size(), Cplx(0));
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return out;
}

std::vector<Real> cumtrapz(std::span<const Real> x, std::span<const Real> y) {
    std::vector<Real> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return out;
}

// ---------------------------------------------------------------------------

Pchip::Pchip(std::vector<Real> x, std::vector<Real> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw SpecError("pchip: need >= 2 samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw SpecError("pchip: abscissae must increase");
    d_.resize(n);
    std::vector<Real> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        del[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
        d_[0] = d_[1] = del[0];
        return;
    }
    // monotonized central slopes: second-order accurate wherever the limiter
    // stays inactive, zero at data extrema
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0) {
            d_[i] = 0;
        } else {
            Real central = (h[i] * del[i - 1] + h[i - 1] * del[i]) / (h[i - 1] + h[i]);
            Real lim = 3 * std::min(std::abs(del[i - 1]), std::abs(del[i]));
            d_[i] = std::copysign(std::min(std::abs(central), lim), central);
        }
    }
    auto edge = [&](Real h0, Real h1, Real d0, Real d1) {
        Real d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0)
            d = 0;
        else if (d0 * d1 <= 0 && std::abs(d) > 3 * std::abs(d0))
            d = 3 * d0;
        return d;
    };
    d_[0] = edge(h[0], h[1], del[0], del[1]);
    d_[n - 1] = edge(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

std::size_t Pchip::interval(Real x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

Real Pchip::value(Real x) const {
    std::size_t i = interval(x);
    Real h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    Real h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    Real h10 = t * (1 - t) * (1 - t);
    Real h01 = t * t * (3 - 2 * t);
    Real h11 = t * t * (t - 1);
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

Real Pchip::deriv(Real x) const {
    std::size_t i = interval(x);
    Real h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    Real dh00 = 6 * t * t - 6 * t;
    Real dh10 = 3 * t * t - 4 * t + 1;
    Real dh01 = -6 * t * t + 6 * t;
    Real dh11 = 3 * t * t - 2 * t;
    return (dh00 * y_[i] + dh01 * y_[i + 1]) / h + dh10 * d_[i] + dh11 * d_[i + 1];
}

Real Pchip::deriv2(Real x) const {
    std::size_t i = interval(x);
    Real h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    Real d2h00 = 12 * t - 6;
    Real d2h10 = 6 * t - 4;
    Real d2h01 = -12 * t + 6;
    Real d2h11 = 6 * t - 2;
    return (d2h00 * y_[i] + d2h01 * y_[i + 1]) / (h * h) + (d2h10 * d_[i] + d2h11 * d_[i + 1]) / h;
}

// ---------------------------------------------------------------------------

LineFit fit_line(std::span<const Real> x, std::span<const Real> y) {
    const std::size_t n = x.size();
    if (n < 2) throw SpecError("fit_line: need >= 2 points");
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    Real denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    Real ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Real r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

Real smoothstep(Real x) {
    if (x <= 1) return 0;
    if (x >= 2) return 1;
    Real u = x - 1;
    return u * u * u * (10 - 15 * u + 6 * u * u);
}

Real smoothstep_deriv(Real x) {
    if (x <= 1 || x >= 2) return 0;
    Real u = x - 1;
    return 30 * u * u * (1 - u) * (1 - u);
}

Real bisect(const std::function<Real(Real)>& f, Real a, Real b, Real tol) {
    Real fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if (fa * fb > 0) throw NumericError("bisect: no sign change on bracket");
    while (b - a > tol) {
        Real m = 0.5 * (a + b), fm = f(m);
        if (fm == 0) return m;
        if (fa * fm < 0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

Cplx sqrt_upper(Cplx z) {
    Cplx s = std::sqrt(z);  // principal: cut on negative reals, Re >= 0
    if (s.imag() < 0) s = -s;
    return s;
}

std::vector<Real> linspace(Real a, Real b, std::size_t n) {
    std::vector<Real> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<Real>(i) / (n - 1);
    v.back() = b;
    return v;
}

std::vector<Real> geomspace(Real a, Real b, std::size_t n) {
    if (a <= 0 || b <= 0) throw SpecError("geomspace: endpoints must be positive");
    std::vector<Real> v(n);
    Real la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::exp(la + (lb - la) * static_cast<Real>(i) / (n - 1));
    v.front() = a;
    v.back() = b;
    return v;
}

}  // namespace ws::num
