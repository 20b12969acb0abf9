#pragma once

// Critical points of planar fields: grid seeding, Newton polishing,
// classification (non-degenerate, semi-degenerate, fully degenerate) and
// circles of critical points for radial disk modes.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigenmodel.hpp"
#include "parallel.hpp"

namespace neumann {

/// Anything exposing value/gradient/Hessian jets on a domain.
template <class F>
concept ScalarField = requires(const F& f, const Point& p) {
    { f.jet(p) } -> std::convertible_to<Jet>;
    { f.frequency() } -> std::convertible_to<double>;
    { f.amplitude() } -> std::convertible_to<double>;
    { f.domain() } -> std::convertible_to<const Domain&>;
};

enum class CriticalTag {
    max,
    min,
    saddle,
    semi_degenerate_extremum,
    semi_degenerate_saddle,
    saddle_node,
    curve_point,
    fully_degenerate,
    unresolved,
};

struct CriticalKind {
    CriticalTag tag = CriticalTag::unresolved;
    int order = 0;         // k for semi-degenerate points, M for fully degenerate ones
    bool maximum = false;  // semi-degenerate extremum: max (true) or min

    friend bool operator==(const CriticalKind&, const CriticalKind&) = default;

    bool is_extremum() const
    {
        return tag == CriticalTag::max || tag == CriticalTag::min || tag == CriticalTag::semi_degenerate_extremum;
    }
    bool is_local_max() const
    {
        return tag == CriticalTag::max || (tag == CriticalTag::semi_degenerate_extremum && maximum);
    }
    bool is_local_min() const
    {
        return tag == CriticalTag::min || (tag == CriticalTag::semi_degenerate_extremum && !maximum);
    }
    /// Points whose stable or unstable sets are curves.
    bool is_saddle_type() const
    {
        return tag == CriticalTag::saddle || tag == CriticalTag::semi_degenerate_saddle ||
               tag == CriticalTag::saddle_node || tag == CriticalTag::fully_degenerate;
    }

    std::string name() const
    {
        switch (tag) {
        case CriticalTag::max: return "max";
        case CriticalTag::min: return "min";
        case CriticalTag::saddle: return "saddle";
        case CriticalTag::semi_degenerate_extremum: return maximum ? "semi-degenerate-max" : "semi-degenerate-min";
        case CriticalTag::semi_degenerate_saddle: return "semi-degenerate-saddle";
        case CriticalTag::saddle_node: return "saddle-node";
        case CriticalTag::curve_point: return "curve-point";
        case CriticalTag::fully_degenerate: return "fully-degenerate";
        case CriticalTag::unresolved: return "unresolved";
        }
        return "?";
    }
};

struct CriticalPoint {
    Point location;
    double value = 0.0;
    CriticalKind kind;
    std::array<double, 2> hessian_eigvals{};
    std::array<Vec2, 2> hessian_vectors{};
    BoundaryPart on_boundary = BoundaryPart::interior;
    double gradient_norm = 0.0;
};

/// Circle of critical points centred at `center`.
struct CriticalCurve {
    Point center;
    double radius = 0.0;
    bool maximum = false;  // curve of local maxima (true) or minima
    double value = 0.0;
    double numeric_radius = 0.0;  // independent Newton estimate
    int numeric_hits = 0;         // grid seeds that converged onto the curve
};

/// Thresholds scaled by the frequency and amplitude of a field.
struct Tolerances {
    double crit_grad = 0.0;       // |grad u| below this counts as critical
    double degenerate_eig = 0.0;  // Hessian eigenvalues below this vanish
    double value = 0.0;           // |u| below this counts as zero
};

template <ScalarField F>
Tolerances tolerances_for(const F& f)
{
    const double k = f.frequency();
    const double s = f.amplitude();
    return {1e-9 * k * s, 1e-6 * k * k * s, 1e-8 * s};
}

struct SearchConfig {
    int cells_per_unit = 64;            // grid cells per length 1/sqrt(lambda)
    double dedupe = 1e-3;               // merge radius in wavelengths
    double probe_radius = 0.2;          // kernel probe, in units of 1/sqrt(lambda)
    double circle_probe_radius = 0.25;  // angular sign pattern, same units
    int circle_samples = 720;
    int newton_iterations = 200;
};

struct CriticalInventory {
    std::vector<CriticalPoint> points;
    std::vector<CriticalCurve> curves;
    std::vector<Point> unconverged;  // seeds whose Newton iteration failed
    int absorbed_seeds = 0;          // slow seeds ending next to a known critical point
    Tolerances tol;

    int count(CriticalTag tag) const
    {
        return int(std::count_if(points.begin(), points.end(), [&](const CriticalPoint& c) { return c.kind.tag == tag; }));
    }
    int count_unresolved() const { return count(CriticalTag::unresolved); }
};

// ---------------------------------------------------------------------------
// Local probes

/// Samples of u(z + R e(phi)) - u(z) at equally spaced angles.
template <ScalarField F>
std::vector<double> circle_profile(const F& f, const Point& z, double R, int samples)
{
    const double u0 = f.jet(z).value;
    std::vector<double> v(samples);
    for (int i = 0; i < samples; ++i) v[i] = f.jet(z + R * unit_vector(2.0 * pi * i / samples)).value - u0;
    return v;
}

inline int cyclic_sign_changes(const std::vector<double>& v)
{
    int changes = 0;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = v[i], b = v[(i + 1) % n];
        if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) ++changes;
    }
    return changes;
}

struct AngularExtremum {
    double angle = 0.0;
    double value = 0.0;  // u - u(z)
    bool maximum = false;
};

/// Local angular maxima with positive value and minima with negative value of
/// u - u(z) on a small circle, refined by parabolic interpolation.
template <ScalarField F>
std::vector<AngularExtremum> angular_extrema(const F& f, const Point& z, double R, int samples = 720)
{
    const auto v = circle_profile(f, z, R, samples);
    std::vector<AngularExtremum> out;
    const double dphi = 2.0 * pi / samples;
    for (int i = 0; i < samples; ++i) {
        const double a = v[(i + samples - 1) % samples], b = v[i], c = v[(i + 1) % samples];
        const bool is_max = b > a && b >= c && b > 0.0;
        const bool is_min = b < a && b <= c && b < 0.0;
        if (!is_max && !is_min) continue;
        const double denom = a - 2.0 * b + c;
        const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
        out.push_back({(i + shift) * dphi, b, is_max});
    }
    return out;
}

namespace detail {

// Moves from z + s e along the strong direction f until d/df u = 0 and
// returns u there minus u(z).
template <ScalarField F>
double valley_offset(const F& field, const Point& z, const Vec2& e, const Vec2& fdir, double s, double u0)
{
    Point p = z + s * e;
    const double k = field.frequency();
    for (int it = 0; it < 50; ++it) {
        const Jet J = field.jet(p);
        const double d = dot(J.grad, fdir);
        const double c = dot(fdir, J.hess * fdir);
        if (c == 0.0) break;
        const double t = -d / c;
        p += t * fdir;
        if (std::abs(t) * k < 1e-15) break;
    }
    return field.jet(p).value - u0;
}

} // namespace detail

/// Classifies a critical point from its Hessian and, for degenerate
/// Hessians, from probes of u around the point.
template <ScalarField F>
CriticalKind classify_critical_point(const F& field, const Point& z, const SearchConfig& cfg = {})
{
    const Tolerances tol = tolerances_for(field);
    const Jet J = field.jet(z);
    const SymEigen E = eigen(J.hess);
    const double l1 = E.values[0], l2 = E.values[1];
    const double k = field.frequency();

    if (std::abs(l2) >= tol.degenerate_eig) {
        if (l1 < 0.0 && l2 < 0.0) return {CriticalTag::max};
        if (l1 > 0.0 && l2 > 0.0) return {CriticalTag::min};
        return {CriticalTag::saddle};
    }

    if (std::abs(l1) >= tol.degenerate_eig) {
        // Rank one: leading Taylor order along the kernel direction.
        const Vec2 e = E.vectors[1], fdir = E.vectors[0];
        const double r = cfg.probe_radius / k;
        const double noise = 1e-12 * field.amplitude();
        double g[2][3];
        bool all_flat = true;
        for (int side = 0; side < 2; ++side)
            for (int i = 0; i < 3; ++i) {
                const double s = (side == 0 ? 1.0 : -1.0) * r / double(1 << i);
                g[side][i] = detail::valley_offset(field, z, e, fdir, s, J.value);
                if (std::abs(g[side][i]) > noise) all_flat = false;
            }
        if (all_flat) return {CriticalTag::curve_point};

        int order[2] = {0, 0};
        for (int side = 0; side < 2; ++side) {
            const double a = std::abs(g[side][0]), b = std::abs(g[side][1]), c = std::abs(g[side][2]);
            if (b <= noise || c <= noise) return {CriticalTag::unresolved};
            const double fine = std::log(b / c) / std::log(2.0);
            const double coarse = std::log(a / b) / std::log(2.0);
            const int kk = int(std::lround(fine));
            if (std::abs(fine - kk) > 0.3 || std::abs(coarse - kk) > 0.6) return {CriticalTag::unresolved};
            order[side] = kk;
        }
        if (order[0] != order[1] || order[0] < 3 || order[0] > 7) return {CriticalTag::unresolved};
        const int kk = order[0];
        const bool same_sign = (g[0][2] > 0.0) == (g[1][2] > 0.0);
        if (kk % 2 == 1) {
            if (same_sign) return {CriticalTag::unresolved};
            return {CriticalTag::saddle_node, kk};
        }
        if (!same_sign) return {CriticalTag::unresolved};
        const bool along_up = g[0][2] > 0.0;
        if (l1 < 0.0 && !along_up) return {CriticalTag::semi_degenerate_extremum, kk, true};
        if (l1 > 0.0 && along_up) return {CriticalTag::semi_degenerate_extremum, kk, false};
        return {CriticalTag::semi_degenerate_saddle, kk};
    }

    // Vanishing Hessian: the leading term is a harmonic polynomial of degree M.
    if (std::abs(J.value) > tol.value) return {CriticalTag::unresolved};
    const auto prof = circle_profile(field, z, cfg.circle_probe_radius / k, cfg.circle_samples);
    const int changes = cyclic_sign_changes(prof);
    if (changes % 2 != 0 || changes < 6) return {CriticalTag::unresolved};
    return {CriticalTag::fully_degenerate, changes / 2};
}

template <ScalarField F>
CriticalPoint make_critical_point(const F& field, const Point& z, const SearchConfig& cfg = {})
{
    CriticalPoint c;
    c.location = z;
    const Jet J = field.jet(z);
    c.value = J.value;
    c.gradient_norm = norm(J.grad);
    const SymEigen E = eigen(J.hess);
    c.hessian_eigvals = E.values;
    c.hessian_vectors = E.vectors;
    c.kind = classify_critical_point(field, z, cfg);
    c.on_boundary = field.domain().boundary_part(z, 1e-9);
    return c;
}

/// Critical points with zero value. These must all be of saddle type; a
/// curve point or extremum with zero value is a hard error.
inline std::vector<CriticalPoint> singular_set(const std::vector<CriticalPoint>& points, double amplitude = 1.0)
{
    std::vector<CriticalPoint> out;
    for (const auto& c : points) {
        if (std::abs(c.value) >= 1e-8 * amplitude) continue;
        if (c.kind.tag == CriticalTag::curve_point || c.kind.is_extremum())
            throw std::logic_error("critical point of kind " + c.kind.name() + " with zero value");
        out.push_back(c);
    }
    return out;
}

template <ScalarField F>
std::vector<CriticalPoint> singular_set(const F& field, const CriticalInventory& inv)
{
    return singular_set(inv.points, field.amplitude());
}

// ---------------------------------------------------------------------------
// Search

namespace detail {

struct NewtonResult {
    Point z;
    bool converged = false;
};

template <ScalarField F>
NewtonResult newton_critical(const F& field, Point z, double eps, double max_travel, int iterations)
{
    const Point start = z;
    for (int it = 0; it < iterations; ++it) {
        const Jet J = field.jet(z);
        if (norm(J.grad) < eps) {
            // Keep polishing while the gradient still decreases: Newton is
            // only linear at degenerate points and stops far from them otherwise.
            double g = norm(J.grad);
            for (int extra = 0; extra < 400 && g > 0.0; ++extra) {
                const Jet K = field.jet(z);
                Vec2 step;
                if (!solve(K.hess, K.grad, step) || !(norm(step) < max_travel)) break;
                const Point next = z - step;
                const double gn = norm(field.jet(next).grad);
                if (!(gn < g)) break;
                z = next;
                g = gn;
            }
            return {z, true};
        }
        Vec2 step;
        if (!solve(J.hess, J.grad, step)) {
            // Levenberg-Marquardt step on the normal equations H^2 d = H g.
            const Sym2& H = J.hess;
            const Sym2 H2{H.xx * H.xx + H.xy * H.xy, H.xy * (H.xx + H.yy), H.yy * H.yy + H.xy * H.xy};
            const double mu = 1e-10 * (H2.trace() + 1e-300);
            if (!solve(H2 + Sym2{mu, 0.0, mu}, H * J.grad, step)) return {z, false};
        }
        const double len = norm(step);
        if (len > 0.5 * max_travel) step = step * (0.5 * max_travel / len);
        z -= step;
        if (distance(z, start) > max_travel) return {z, false};
    }
    return {z, norm(field.jet(z).grad) < eps};
}

// Radial Newton for u_rho = 0 along a ray from the origin.
template <ScalarField F>
double radial_critical(const F& field, double r, double angle)
{
    const Vec2 e = unit_vector(angle);
    for (int it = 0; it < 50; ++it) {
        const Jet J = field.jet(r * e);
        const double d1 = dot(J.grad, e);
        const double d2 = dot(e, J.hess * e);
        if (d2 == 0.0) break;
        const double step = d1 / d2;
        r -= step;
        if (std::abs(step) < 1e-16) break;
    }
    return r;
}

inline bool is_radial_disk_mode(const Eigenfunction& f) { return f.domain().is_disk() && f.mode().n == 0; }
template <class F>
bool is_radial_disk_mode(const F&) { return false; }

inline std::vector<CriticalCurve> analytic_circles(const Eigenfunction& f)
{
    std::vector<CriticalCurve> out;
    if (!is_radial_disk_mode(f)) return out;
    const double k = f.radial_wavenumber();
    // Zeros of J_0' = -J_1 inside the disk, the boundary included.
    for (int i = 1; i <= bessel_max_rank; ++i) {
        const double z = bessel_zero(1, i).value;
        if (z > k * (1.0 + 1e-12)) break;
        CriticalCurve c;
        c.radius = std::min(1.0, z / k);
        c.value = f.jet({c.radius, 0.0}).value;
        c.maximum = c.value > 0.0;
        out.push_back(c);
    }
    return out;
}
template <class F>
std::vector<CriticalCurve> analytic_circles(const F&) { return {}; }

// Algebraic (Kasa) circle fit; returns false when the points are collinear.
inline bool fit_circle(const std::vector<Point>& pts, Point& center, double& radius)
{
    if (pts.size() < 3) return false;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sz = 0, sxz = 0, syz = 0;
    for (const auto& p : pts) {
        const double zz = p.x * p.x + p.y * p.y;
        sx += p.x; sy += p.y; sxx += p.x * p.x; syy += p.y * p.y; sxy += p.x * p.y;
        sz += zz; sxz += p.x * zz; syz += p.y * zz;
    }
    const double n = double(pts.size());
    // Solve [sxx sxy sx; sxy syy sy; sx sy n] [A B C]^T = [sxz syz sz]^T.
    const double M[3][4] = {{sxx, sxy, sx, sxz}, {sxy, syy, sy, syz}, {sx, sy, n, sz}};
    double a[3][4];
    std::copy(&M[0][0], &M[0][0] + 12, &a[0][0]);
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-14) return false;
        for (int j = 0; j < 4; ++j) std::swap(a[c][j], a[piv][j]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double fct = a[r][c] / a[c][c];
            for (int j = 0; j < 4; ++j) a[r][j] -= fct * a[c][j];
        }
    }
    const double A = a[0][3] / a[0][0], B = a[1][3] / a[1][1], C = a[2][3] / a[2][2];
    center = {A / 2.0, B / 2.0};
    const double r2 = C + center.x * center.x + center.y * center.y;
    if (r2 <= 0.0) return false;
    radius = std::sqrt(r2);
    return true;
}

} // namespace detail

/// Locates and classifies all critical points of `field` in the closed domain.
template <ScalarField F>
CriticalInventory find_critical_points(const F& field, const SearchConfig& cfg = {})
{
    if (cfg.cells_per_unit < 64) throw std::invalid_argument("grid resolution below 64 cells per unit length");
    const Domain& dom = field.domain();
    const double k = field.frequency();
    const double h = 1.0 / (cfg.cells_per_unit * k);
    const double wavelength = 2.0 * pi / k;
    const double dedupe = cfg.dedupe * wavelength;

    CriticalInventory inv;
    inv.tol = tolerances_for(field);
    const double eps = inv.tol.crit_grad;

    // Gradient at the nodes of a padded grid; the small irrational offset
    // keeps nodes off symmetry lines.
    const Point lo = dom.lower_corner() - Vec2{2.0 * h, 2.0 * h} + Vec2{0.3819660112501051 * h, 0.2360679774997897 * h};
    const Point hi = dom.upper_corner() + Vec2{2.0 * h, 2.0 * h};
    const int nx = int(std::ceil((hi.x - lo.x) / h)) + 1;
    const int ny = int(std::ceil((hi.y - lo.y) / h)) + 1;
    std::vector<Vec2> grad(std::size_t(nx) * ny);
    parallel_for(std::size_t(ny), [&](std::size_t j) {
        for (int i = 0; i < nx; ++i) grad[j * nx + i] = field.jet(lo + Vec2{i * h, double(j) * h}).grad;
    });

    std::vector<Point> seeds;
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const Vec2 c[4] = {grad[j * nx + i], grad[j * nx + i + 1], grad[(j + 1) * nx + i], grad[(j + 1) * nx + i + 1]};
            double minx = c[0].x, maxx = c[0].x, miny = c[0].y, maxy = c[0].y;
            for (const auto& v : c) {
                minx = std::min(minx, v.x); maxx = std::max(maxx, v.x);
                miny = std::min(miny, v.y); maxy = std::max(maxy, v.y);
            }
            if (minx <= 0.0 && maxx >= 0.0 && miny <= 0.0 && maxy >= 0.0)
                seeds.push_back(lo + Vec2{(i + 0.5) * h, (j + 0.5) * h});
        }
    if (dom.is_disk()) {
        if (norm(field.jet({0.0, 0.0}).grad) < eps) seeds.push_back({0.0, 0.0});
        if (dom.has_neumann()) {
            // Tangential derivative sign changes along the Neumann circle.
            const int samples = int(std::ceil(2.0 * pi / h));
            auto tangential = [&](double t) { return dot(field.jet(unit_vector(t)).grad, perp(unit_vector(t))); };
            double prev = tangential(0.0);
            for (int i = 1; i <= samples; ++i) {
                const double t = 2.0 * pi * i / samples;
                const double cur = tangential(t);
                if ((prev <= 0.0) != (cur <= 0.0)) seeds.push_back(unit_vector(t - pi / samples));
                prev = cur;
            }
        }
    }

    std::vector<detail::NewtonResult> results(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) {
        results[i] = detail::newton_critical(field, seeds[i], eps, 12.0 * h, cfg.newton_iterations);
    });

    inv.curves = detail::analytic_circles(field);
    auto on_curve = [&](const Point& p, double tol) {
        for (auto& c : inv.curves)
            if (std::abs(distance(p, c.center) - c.radius) < tol) return &c;
        return static_cast<CriticalCurve*>(nullptr);
    };

    std::vector<Point> found;
    std::vector<Point> failed;
    for (const auto& r : results) {
        if (!r.converged) {
            failed.push_back(r.z);
            continue;
        }
        Point z = r.z;
        const double sd = dom.signed_distance(z);
        if (sd > 1e-9) continue;
        if (sd > -1e-9) z = dom.project_to_boundary(z);
        if (CriticalCurve* c = on_curve(z, 1e-6)) {
            ++c->numeric_hits;
            continue;
        }
        found.push_back(z);
    }

    std::sort(found.begin(), found.end(), [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<Point> unique;
    for (const auto& p : found) {
        bool dup = false;
        for (auto it = unique.rbegin(); it != unique.rend(); ++it) {
            if (p.x - it->x > dedupe) break;
            if (distance(p, *it) < dedupe) { dup = true; break; }
        }
        if (!dup) unique.push_back(p);
    }

    inv.points.resize(unique.size());
    parallel_for(unique.size(), [&](std::size_t i) { inv.points[i] = make_critical_point(field, unique[i], cfg); });

    for (const auto& z : failed) {
        bool absorbed = on_curve(z, 12.0 * h) != nullptr;
        for (const auto& c : inv.points)
            if (distance(z, c.location) < 12.0 * h) absorbed = true;
        if (dom.signed_distance(z) > 2.0 * h) absorbed = true;  // wandered off outside the domain
        if (absorbed) ++inv.absorbed_seeds;
        else inv.unconverged.push_back(z);
    }

    // Numerical cross-check of analytic circles.
    for (auto& c : inv.curves) {
        double acc = 0.0;
        const int rays = 8;
        for (int i = 0; i < rays; ++i) acc += detail::radial_critical(field, c.radius, 2.0 * pi * (i + 0.5) / rays);
        c.numeric_radius = acc / rays;
    }

    // Fallback: curve points that are not on a known circle are grouped by
    // value and fitted with a circle.
    std::vector<CriticalPoint> kept;
    std::vector<std::vector<CriticalPoint>> groups;
    for (const auto& c : inv.points) {
        if (c.kind.tag != CriticalTag::curve_point) {
            kept.push_back(c);
            continue;
        }
        bool placed = false;
        for (auto& g : groups)
            if (std::abs(g.front().value - c.value) < 1e-8 * field.amplitude()) { g.push_back(c); placed = true; break; }
        if (!placed) groups.push_back({c});
    }
    for (auto& g : groups) {
        std::vector<Point> pts;
        for (const auto& c : g) pts.push_back(c.location);
        CriticalCurve curve;
        if (detail::fit_circle(pts, curve.center, curve.radius)) {
            double resid = 0.0;
            for (const auto& p : pts) resid = std::max(resid, std::abs(distance(p, curve.center) - curve.radius));
            if (resid < 1e-6) {
                curve.value = g.front().value;
                curve.maximum = g.front().hessian_eigvals[0] < 0.0;
                curve.numeric_radius = curve.radius;
                curve.numeric_hits = int(pts.size());
                inv.curves.push_back(curve);
                continue;
            }
        }
        for (const auto& c : g) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return a.location.x < b.location.x || (a.location.x == b.location.x && a.location.y < b.location.y);
    });
    inv.points = std::move(kept);
    return inv;
}

} // namespace neumann
