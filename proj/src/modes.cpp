#include "warpscatter/modes.hpp"

#include <algorithm>
#include <cmath>

namespace ws::modes {

CrossSection CrossSection::circle(Real length) {
    if (!(length > 0)) throw SpecError("circle: length must be positive");
    CrossSection cs;
    cs.kind_ = SectionKind::Circle;
    cs.length_ = length;
    cs.vol_ = length;
    return cs;
}

CrossSection CrossSection::sphere(int m) {
    if (m < 1) throw SpecError("sphere: dimension must be >= 1");
    CrossSection cs;
    cs.kind_ = SectionKind::Sphere;
    cs.m_ = m;
    // vol(S^m), unit radius
    Real v = 2 * std::pow(kPi, (m + 1) / 2.0) / std::tgamma((m + 1) / 2.0);
    cs.vol_ = v;
    return cs;
}

CrossSection CrossSection::custom(std::vector<std::pair<Real, int>> eigs, Real vol) {
    if (eigs.empty() || eigs.front().first != 0 || eigs.front().second != 1)
        throw SpecError("custom section: lambda_0 = 0 with multiplicity 1 required");
    for (std::size_t i = 1; i < eigs.size(); ++i)
        if (eigs[i].first < eigs[i - 1].first)
            throw SpecError("custom section: eigenvalue list must be sorted");
    if (!(vol > 0)) throw SpecError("custom section: vol must be positive");
    CrossSection cs;
    cs.kind_ = SectionKind::Custom;
    cs.eigs_ = std::move(eigs);
    cs.vol_ = vol;
    return cs;
}

Real CrossSection::eigenvalue(int ell) const {
    switch (kind_) {
        case SectionKind::Circle: {
            Real w = 2 * kPi * ell / length_;
            return w * w;
        }
        case SectionKind::Sphere:
            return static_cast<Real>(ell) * (ell + m_ - 1);
        case SectionKind::Custom:
            if (ell < 0 || ell >= static_cast<int>(eigs_.size()))
                throw DomainError("custom section: eigenvalue index out of range");
            return eigs_[ell].first;
    }
    throw NumericError("cross-section: unknown kind");
}

int CrossSection::multiplicity(int ell) const {
    switch (kind_) {
        case SectionKind::Circle:
            return ell == 0 ? 1 : 2;
        case SectionKind::Sphere: {
            if (ell == 0) return 1;
            // dim of degree-ell harmonics on S^m
            auto binom = [](int a, int b) {
                if (b < 0 || b > a) return 0.0;
                Real v = 1;
                for (int i = 0; i < b; ++i) v = v * (a - i) / (i + 1);
                return v;
            };
            Real d = binom(ell + m_, m_) - binom(ell + m_ - 2, m_);
            return static_cast<int>(std::lround(d));
        }
        case SectionKind::Custom:
            return eigs_[ell].second;
    }
    throw NumericError("cross-section: unknown kind");
}

ModeSpectrum eigen_list(const CrossSection& cs, Real lambda_max) {
    if (lambda_max < 0) throw DomainError("eigen_list: lambda_max must be >= 0");
    ModeSpectrum ms;
    ms.lambda_max = lambda_max;
    int ell = 0;
    while (true) {
        if (cs.kind_ == SectionKind::Custom && ell >= static_cast<int>(cs.eigs_.size())) break;
        Real ev = cs.eigenvalue(ell);
        if (ev > lambda_max) {
            if (cs.kind_ == SectionKind::Custom) {
                ++ell;
                continue;  // custom lists may hold duplicates; scan them all
            }
            break;
        }
        int mult = cs.multiplicity(ell);
        for (int s = 0; s < mult; ++s) ms.channels.push_back({ell, ev, s, mult});
        ++ell;
    }
    return ms;
}

Real basis_value(const CrossSection& cs, const Channel& ch, Real theta) {
    if (cs.kind() != SectionKind::Circle)
        throw SpecError("sampled eigenfunctions are only available on circle sections");
    Real L = cs.circle_length();
    if (ch.ell == 0) return 1.0 / std::sqrt(L);
    Real w = 2 * kPi * ch.ell / L;
    Real amp = std::sqrt(2.0 / L);
    return ch.slot == 0 ? amp * std::cos(w * theta) : amp * std::sin(w * theta);
}

std::vector<Cplx> expand(const CrossSection& cs, std::span<const Cplx> samples,
                         const ModeSpectrum& ms) {
    if (cs.kind() != SectionKind::Circle)
        throw SpecError("expand: only circle sections carry a sampled basis");
    int ell_max = 0;
    for (const auto& ch : ms.channels) ell_max = std::max(ell_max, ch.ell);
    if (samples.size() < static_cast<std::size_t>(2 * ell_max + 1))
        throw AliasError("expand: need at least 2*ell_max+1 samples");
    const std::size_t N = samples.size();
    const Real L = cs.circle_length();
    const Real w = L / static_cast<Real>(N);  // uniform trapezoid (periodic)
    std::vector<Cplx> coeffs(ms.channels.size(), Cplx(0));
    for (std::size_t c = 0; c < ms.channels.size(); ++c) {
        Cplx acc = 0;
        for (std::size_t i = 0; i < N; ++i) {
            Real theta = L * static_cast<Real>(i) / N;
            acc += samples[i] * basis_value(cs, ms.channels[c], theta);
        }
        coeffs[c] = acc * w;
    }
    return coeffs;
}

std::vector<Cplx> synthesize(const CrossSection& cs, std::span<const Cplx> coeffs,
                             const ModeSpectrum& ms, std::size_t nsamples) {
    if (coeffs.size() != ms.channels.size())
        throw SpecError("synthesize: coefficient count mismatch");
    const Real L = cs.circle_length();
    std::vector<Cplx> out(nsamples, Cplx(0));
    for (std::size_t i = 0; i < nsamples; ++i) {
        Real theta = L * static_cast<Real>(i) / nsamples;
        Cplx acc = 0;
        for (std::size_t c = 0; c < ms.channels.size(); ++c)
            acc += coeffs[c] * basis_value(cs, ms.channels[c], theta);
        out[i] = acc;
    }
    return out;
}

}  // namespace ws::modes
