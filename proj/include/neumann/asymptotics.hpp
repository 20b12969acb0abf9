#pragma once

// Closed-form Neumann domain counts, nodal counts and the constants
// limsup mu(u_k)/k for rectangles and the Dirichlet disk.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigenmodel.hpp"
#include "parallel.hpp"
#include "specfun.hpp"

namespace neumann {

struct DomainCounts {
    int total = 0;
    int inner = 0;
    int boundary = 0;

    bool operator==(const DomainCounts&) const = default;
};

inline bool has_closed_form(const ModeSpec& mode)
{
    if (mode.superposition_angle) return false;
    return mode.domain.is_rectangle() || mode.domain.bc() == BoundaryCondition::dirichlet;
}

inline DomainCounts closed_form_count(const Domain& domain, int n, int m)
{
    if (m < 1) throw std::invalid_argument("closed_form_count: m must be positive");
    if (domain.is_rectangle()) {
        if (n < 1) throw std::invalid_argument("closed_form_count: n must be positive");
        return {2 * n * m + n + m, n * (m - 1) + (n - 1) * m, 2 * n + 2 * m};
    }
    if (domain.bc() != BoundaryCondition::dirichlet) throw std::domain_error("no closed form for the Neumann disk");
    if (n < 0) throw std::invalid_argument("closed_form_count: n must be non-negative");
    switch (n) {
    case 0: return {m, m - 1, 1};
    case 1: return {4 * m - 1, 4 * (m - 1) + 1, 2};
    case 2: return {8 * m, 4 * (2 * m - 1), 4};
    default: return {4 * n * m, 2 * n * (2 * m - 1), 2 * n};
    }
}

inline DomainCounts closed_form_count(const ModeSpec& mode)
{
    if (mode.superposition_angle) throw std::domain_error("no closed form for superposed modes");
    return closed_form_count(mode.domain, mode.n, mode.m);
}

/// Number of nodal domains.
inline int nodal_count(const Domain& domain, int n, int m)
{
    if (m < 1 || n < 0 || (domain.is_rectangle() && n < 1)) throw std::invalid_argument("nodal_count: bad mode index");
    if (domain.is_rectangle()) return n * m;
    if (domain.bc() != BoundaryCondition::dirichlet) throw std::domain_error("no closed form for the Neumann disk");
    return n == 0 ? m : 2 * n * m;
}

/// Morse families: every rectangle mode, disk modes with n = 1 or 2.
inline bool is_morse_family(const Domain& domain, int n)
{
    return domain.is_rectangle() || (domain.bc() == BoundaryCondition::dirichlet && (n == 1 || n == 2));
}

// ---------------------------------------------------------------------------
// tan(theta) - theta = pi s

struct ThetaSolution {
    double s = 0.0;
    double theta = 0.0;
    double residual = 0.0;  // tan(theta) - theta - pi s
};

namespace detail {

// tan(t) - t without cancellation for small t.
inline double tan_minus_identity(double t)
{
    if (t < 0.1) {
        const double t2 = t * t;
        return t * t2 * (1.0 / 3 + t2 * (2.0 / 15 + t2 * (17.0 / 315 + t2 * (62.0 / 2835 + t2 * (1382.0 / 155925)))));
    }
    return std::tan(t) - t;
}

} // namespace detail

inline ThetaSolution theta_of_s(double s)
{
    if (!(s > 0.0) || !std::isfinite(s)) throw std::domain_error("theta_of_s: s must be positive");
    const double target = pi * s;
    // Work in phi = pi/2 - theta, which stays well resolved as theta -> pi/2.
    auto g = [&](double phi) {
        const double theta = pi / 2 - phi;
        if (theta < 0.1) return detail::tan_minus_identity(theta) - target;
        return std::cos(phi) / std::sin(phi) - theta - target;
    };
    double lo = 0.0, hi = pi / 2;  // g decreases in phi: g(lo+) > 0 > g(hi)
    for (int it = 0; it < 200 && hi - lo > 1e-17 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    double phi = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        // g'(phi) = -1/sin^2 + 1 = -cot^2
        const double c = std::cos(phi) / std::sin(phi);
        if (c == 0.0) break;
        const double next = phi + g(phi) / (c * c);
        if (!(next > lo && next < hi)) break;
        phi = next;
    }
    ThetaSolution out;
    out.s = s;
    out.theta = pi / 2 - phi;
    out.residual = detail::tan_minus_identity(out.theta) - target;
    return out;
}

/// 16 s cos^2(theta(s)); its supremum over s > 0 is the disk constant.
inline double disk_profile(double s)
{
    const double c = std::cos(theta_of_s(s).theta);
    return 16.0 * s * c * c;
}

struct ConstantReport {
    Domain::Kind domain_kind = Domain::Kind::rectangle;
    double value = 0.0;
    std::string method;           // "analytic" or "optimized"
    double reference_value = 0.0;
    double tolerance = 0.0;
    double argmax = 0.0;          // maximizing s for the disk

    bool within_tolerance() const { return std::abs(value - reference_value) <= tolerance; }
};

inline constexpr double disk_constant_reference = 0.9226;

inline ConstantReport neumann_constant(Domain::Kind kind)
{
    ConstantReport r;
    r.domain_kind = kind;
    if (kind == Domain::Kind::rectangle) {
        r.value = 4.0 / pi;
        r.method = "analytic";
        r.reference_value = 4.0 / pi;
        r.tolerance = 1e-12;
        return r;
    }
    // Golden-section search; f vanishes at both ends of the bracket.
    double a = 1e-4, b = 50.0;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = disk_profile(c), fd = disk_profile(d);
    if (!(fc > disk_profile(a) && fc > disk_profile(b))) throw std::runtime_error("neumann_constant: bad bracket");
    while (b - a > 1e-10) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = disk_profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = disk_profile(d);
        }
    }
    r.argmax = 0.5 * (a + b);
    r.value = disk_profile(r.argmax);
    r.method = "optimized";
    r.reference_value = disk_constant_reference;
    r.tolerance = 5e-4;
    return r;
}

/// The nodal analogue: half the Neumann constant for both model families.
inline double pleijel_constant(Domain::Kind kind) { return 0.5 * neumann_constant(kind).value; }

// ---------------------------------------------------------------------------
// j_{n, ns} / n against 1 / cos(theta(s))

struct ElbertLaforgiaRow {
    int n = 0;
    int m = 0;
    double scaled_zero = 0.0;  // j_{n,m} / n
    double limit = 0.0;        // 1 / cos(theta(s))
    double error = 0.0;
};

inline std::vector<ElbertLaforgiaRow> elbert_laforgia_check(const std::vector<int>& n_list, double s)
{
    const double limit = 1.0 / std::cos(theta_of_s(s).theta);
    std::vector<ElbertLaforgiaRow> rows;
    for (int n : n_list) {
        const double ms = n * s;
        const int m = int(std::lround(ms));
        if (n < 1 || m < 1 || std::abs(ms - m) > 1e-9) throw std::invalid_argument("elbert_laforgia_check: n*s must be a positive integer");
        ElbertLaforgiaRow row{n, m, bessel_zero(n, m).value / n, limit, 0.0};
        row.error = std::abs(row.scaled_zero - row.limit);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// mu(u_k) / k along the spectrum

struct RatioEntry {
    int k = 0;
    ModeSpec mode;
    int mu = 0;
    double ratio = 0.0;
    double running_max = 0.0;  // max of mu/k over ranks <= k
};

struct RatioSeries {
    std::vector<RatioEntry> entries;

    /// max of mu/k over the upper half K/2 <= k <= K of the series.
    double tail_max() const
    {
        double r = 0.0;
        const int K = int(entries.size());
        for (const auto& e : entries)
            if (2 * e.k >= K) r = std::max(r, e.ratio);
        return r;
    }
};

inline RatioSeries ratio_series(const Domain& domain, int K)
{
    if (K < 1 || K > 5000) throw std::out_of_range("ratio_series: K outside [1, 5000]");
    RatioSeries out;
    const auto modes = enumerate_modes(domain, K);
    out.entries.resize(modes.size());
    parallel_for(modes.size(), [&](std::size_t i) {
        RatioEntry& e = out.entries[i];
        e.k = modes[i].rank;
        e.mode = modes[i].mode;
        e.mu = closed_form_count(e.mode).total;
        e.ratio = double(e.mu) / e.k;
    });
    double run = 0.0;
    for (auto& e : out.entries) e.running_max = run = std::max(run, e.ratio);
    return out;
}

} // namespace neumann
