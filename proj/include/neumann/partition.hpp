#pragma once

// Neumann line set (separatrices, critical circles, Gamma^N, critical points)
// and the Neumann domains it cuts out, labelled on a grid by the pair of
// flow limits of every sample point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "asymptotics.hpp"
#include "flow.hpp"

namespace neumann {

struct PartitionConfig {
    int resolution = 0;               // grid cells per unit length; 0 picks one from the frequency
    double line_margin = 1.5;         // cells closer than this (in cells) to the line set stay unlabelled
    double separatrix_offset = 1e-4;  // seed offset from the saddle, units of 1/sqrt(lambda)
    double separatrix_step = 0.01;    // spatial step cap along separatrices, same units
    double int_tol = 1e-3;
    int refine = 4;                   // sub-samples per axis on cells at domain borders, at least
    int refine_per_wavelength = 768;  // ... and enough for this many sub-cells per wavelength
    int spot_checks = 1000;
    std::uint64_t seed = 20240611;
    double max_unresolved = 1e-3;
    FlowConfig flow;
    SearchConfig search;
};

/// Smallest admissible resolution: 96 cells per wavelength.
inline int minimum_resolution(double frequency) { return int(std::ceil(96.0 * frequency / (2.0 * pi))); }

inline int effective_resolution(const PartitionConfig& cfg, double frequency)
{
    const int lo = minimum_resolution(frequency);
    if (cfg.resolution == 0) return std::max(lo, 128);
    if (cfg.resolution < lo)
        throw std::invalid_argument("resolution " + std::to_string(cfg.resolution) + " below the minimum " +
                                    std::to_string(lo) + " for this mode");
    return cfg.resolution;
}

struct Separatrix {
    int saddle = -1;
    bool stable = false;  // flows into the saddle (integrated backward from it)
    int ray_index = 0;
    double angle = 0.0;   // seed direction
    Trajectory line;

    std::vector<Point> polyline(const Point& saddle_location) const
    {
        std::vector<Point> p;
        p.reserve(line.samples.size() + 1);
        p.push_back(saddle_location);
        for (const auto& s : line.samples) p.push_back(s.z);
        return p;
    }
};

struct NeumannLineSet {
    std::vector<Separatrix> separatrices;
    std::vector<std::vector<Point>> polylines;  // one per separatrix, starting at its saddle
    std::vector<CriticalCurve> critical_curves;
    bool neumann_boundary = false;              // the whole of Gamma^N belongs to the set
    std::vector<Point> isolated_points;         // every isolated critical point
    std::vector<Point> feet;                    // closure points on Gamma^D, reported separately
    std::vector<std::string> problems;          // rays that did not leave their saddle, budget hits

    double total_length() const
    {
        double L = 0.0;
        for (const auto& pl : polylines)
            for (std::size_t i = 1; i < pl.size(); ++i) L += distance(pl[i - 1], pl[i]);
        for (const auto& c : critical_curves) L += 2.0 * pi * c.radius;
        if (neumann_boundary) L += 2.0 * pi;
        return L;
    }
};

// ---------------------------------------------------------------------------
// Separatrices

template <ScalarField F>
std::vector<Separatrix> separatrices(const F& field, const CriticalInventory& inv, const PartitionConfig& cfg = {},
                                     std::vector<std::string>* problems = nullptr)
{
    const Domain& dom = field.domain();
    const double k = field.frequency();
    const Tolerances tol = tolerances_for(field);
    FlowConfig fc = cfg.flow;
    fc.record = true;
    fc.max_step = cfg.separatrix_step;
    const GradientFlow<F> flow(field, inv, fc);
    const double eps = cfg.separatrix_offset / k;

    struct Ray {
        int saddle;
        bool stable;
        int index;
        double angle;
    };
    std::vector<Ray> rays;
    for (std::size_t i = 0; i < inv.points.size(); ++i) {
        const CriticalPoint& c = inv.points[i];
        if (!c.kind.is_saddle_type()) continue;
        std::vector<std::pair<double, bool>> dirs;  // (angle, stable)
        const bool nondegenerate = std::abs(c.hessian_eigvals[1]) >= tol.degenerate_eig &&
                                   c.kind.tag == CriticalTag::saddle;
        if (nondegenerate) {
            for (int e = 0; e < 2; ++e) {
                const Vec2 v = c.hessian_vectors[e];
                const bool stable = c.hessian_eigvals[e] > 0.0;  // u grows away from the saddle
                const double a = std::atan2(v.y, v.x);
                dirs.push_back({a, stable});
                dirs.push_back({a + pi, stable});
            }
        } else {
            for (const auto& ex : angular_extrema(field, c.location, cfg.search.circle_probe_radius / k,
                                                  cfg.search.circle_samples))
                dirs.push_back({ex.angle, ex.maximum});
        }
        std::sort(dirs.begin(), dirs.end(), [](auto& a, auto& b) {
            auto norm_angle = [](double t) { t = std::fmod(t, 2.0 * pi); return t < 0 ? t + 2.0 * pi : t; };
            return norm_angle(a.first) < norm_angle(b.first);
        });
        int idx = 0;
        for (const auto& [a, stable] : dirs) {
            const Point seed = c.location + eps * unit_vector(a);
            if (dom.signed_distance(seed) >= 0.0) continue;  // points out of the domain
            rays.push_back({int(i), stable, idx++, a});
        }
    }

    std::vector<Separatrix> out(rays.size());
    parallel_for(rays.size(), [&](std::size_t r) {
        const Ray& ray = rays[r];
        const Point seed = inv.points[ray.saddle].location + eps * unit_vector(ray.angle);
        Separatrix s;
        s.saddle = ray.saddle;
        s.stable = ray.stable;
        s.ray_index = ray.index;
        s.angle = ray.angle;
        s.line = flow.integrate(seed, ray.stable ? Direction::backward : Direction::forward, {}, ray.saddle);
        out[r] = std::move(s);
    });
    if (problems) {
        for (const auto& s : out) {
            const Point o = inv.points[s.saddle].location;
            std::ostringstream os;
            if (s.line.termination.tag == Termination::budget) {
                os << "separatrix from (" << o.x << ", " << o.y << ") ray " << s.ray_index << " exhausted its budget";
                problems->push_back(os.str());
            } else if (distance(s.line.termination.z, o) < fc.capture_radius / k) {
                os << "separatrix from (" << o.x << ", " << o.y << ") ray " << s.ray_index << " did not leave the saddle";
                problems->push_back(os.str());
            }
        }
    }
    return out;
}

template <ScalarField F>
NeumannLineSet neumann_line_set(const F& field, const CriticalInventory& inv, std::vector<Separatrix> seps)
{
    NeumannLineSet L;
    for (const auto& s : seps) {
        // Close each line at its limit: capture stops the flow a little short of it.
        auto pl = s.polyline(inv.points[s.saddle].location);
        const auto& end = s.line.termination;
        if (end.is_critical()) pl.push_back(inv.points[end.index].location);
        if (end.tag == Termination::converged_to_curve) {
            const auto& c = inv.curves[end.index];
            pl.push_back(c.center + c.radius * unit_vector(end.angle));
        }
        L.polylines.push_back(std::move(pl));
        if (s.line.termination.tag == Termination::hit_dirichlet) L.feet.push_back(s.line.termination.z);
    }
    L.separatrices = std::move(seps);
    L.critical_curves = inv.curves;
    L.neumann_boundary = field.domain().has_neumann();
    for (const auto& c : inv.points) {
        L.isolated_points.push_back(c.location);
        if (c.on_boundary == BoundaryPart::dirichlet) L.feet.push_back(c.location);
    }
    return L;
}

template <ScalarField F>
NeumannLineSet neumann_line_set(const F& field, const CriticalInventory& inv, const PartitionConfig& cfg = {})
{
    std::vector<std::string> problems;
    NeumannLineSet L = neumann_line_set(field, inv, separatrices(field, inv, cfg, &problems));
    L.problems = std::move(problems);
    return L;
}

// ---------------------------------------------------------------------------
// Geometry of the line set on a grid

namespace detail {

/// Segment buckets for proximity and crossing queries against the line set.
class LineIndex {
public:
    LineIndex(const NeumannLineSet& L, const Point& lo, double bucket, int nx, int ny)
        : lines_(L), lo_(lo), bucket_(bucket), nx_(nx), ny_(ny), buckets_(std::size_t(nx) * ny)
    {
        for (const auto& pl : L.polylines)
            for (std::size_t i = 1; i < pl.size(); ++i) {
                const std::size_t id = segs_.size();
                segs_.push_back({pl[i - 1], pl[i]});
                const Point a = pl[i - 1], b = pl[i];
                const int i0 = clampx(std::floor((std::min(a.x, b.x) - lo.x) / bucket) - 1);
                const int i1 = clampx(std::floor((std::max(a.x, b.x) - lo.x) / bucket) + 1);
                const int j0 = clampy(std::floor((std::min(a.y, b.y) - lo.y) / bucket) - 1);
                const int j1 = clampy(std::floor((std::max(a.y, b.y) - lo.y) / bucket) + 1);
                for (int j = j0; j <= j1; ++j)
                    for (int ii = i0; ii <= i1; ++ii) buckets_[std::size_t(j) * nx_ + ii].push_back(id);
            }
    }

    /// Distance to the line set, capped at `cap` (only nearby segments are searched).
    double distance_to(const Point& p, double cap) const
    {
        double d = cap;
        for (const auto& c : lines_.critical_curves) d = std::min(d, std::abs(distance(p, c.center) - c.radius));
        for (const auto& q : lines_.isolated_points) d = std::min(d, distance(p, q));
        if (lines_.neumann_boundary) d = std::min(d, std::abs(norm(p) - 1.0));
        const int i = clampx(std::floor((p.x - lo_.x) / bucket_));
        const int j = clampy(std::floor((p.y - lo_.y) / bucket_));
        for (std::size_t id : buckets_[std::size_t(j) * nx_ + i])
            d = std::min(d, segment_distance(p, segs_[id].first, segs_[id].second));
        return d;
    }

    /// True when the straight segment [p, q] meets a separatrix or a critical circle.
    bool crosses(const Point& p, const Point& q) const
    {
        for (const auto& c : lines_.critical_curves) {
            const double a = distance(p, c.center) - c.radius, b = distance(q, c.center) - c.radius;
            if ((a <= 0.0) != (b <= 0.0)) return true;
        }
        const int i0 = clampx(std::floor((std::min(p.x, q.x) - lo_.x) / bucket_));
        const int i1 = clampx(std::floor((std::max(p.x, q.x) - lo_.x) / bucket_));
        const int j0 = clampy(std::floor((std::min(p.y, q.y) - lo_.y) / bucket_));
        const int j1 = clampy(std::floor((std::max(p.y, q.y) - lo_.y) / bucket_));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                for (std::size_t id : buckets_[std::size_t(j) * nx_ + i])
                    if (segments_intersect(p, q, segs_[id].first, segs_[id].second)) return true;
        return false;
    }

private:
    int clampx(double v) const { return std::clamp(int(v), 0, nx_ - 1); }
    int clampy(double v) const { return std::clamp(int(v), 0, ny_ - 1); }

    const NeumannLineSet& lines_;
    Point lo_;
    double bucket_;
    int nx_, ny_;
    std::vector<std::pair<Point, Point>> segs_;
    std::vector<std::vector<std::size_t>> buckets_;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic offsets in [0, 1)^2 for sub-sample `sub` of cell `cell`.
inline std::pair<double, double> jitter(std::size_t cell, std::size_t sub, std::uint64_t seed)
{
    const std::uint64_t r = splitmix64(seed ^ splitmix64(cell * 1024 + sub));
    return {double(r >> 40) / double(1ULL << 24), double(r & 0xffffff) / double(1ULL << 24)};
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Labelling

enum class DomainClass { inner, boundary };

inline const char* to_string(DomainClass c) { return c == DomainClass::inner ? "inner" : "boundary"; }

/// Flow terminus identifiers used as labels.
namespace terminus {
inline constexpr std::int64_t unresolved = -1;
inline constexpr std::int64_t curve_base = 100000;
inline constexpr std::int64_t dirichlet_base = 200000;
inline bool is_dirichlet(std::int64_t key) { return key >= dirichlet_base; }
} // namespace terminus

struct NeumannDomain {
    int id = 0;
    DomainClass cls = DomainClass::inner;
    std::int64_t alpha = 0;  // terminus ids
    std::int64_t omega = 0;
    int cells = 0;           // flow-labelled cells
    double area = 0.0;
    double integral = 0.0;     // integral of u
    double abs_integral = 0.0; // integral of |u|
    int sign = 0;            // +1 / -1 when one-signed on its samples, 0 otherwise
    bool has_positive = false;
    bool has_negative = false;
    Point representative;
};

struct NeumannPartition {
    int resolution = 0;
    double h = 0.0;
    Point origin;  // lower-left corner of cell (0, 0)
    int nx = 0, ny = 0;
    std::vector<int> cell_domain;   // -1 outside the domain or unassigned
    std::vector<std::uint8_t> flow_labelled;
    std::vector<NeumannDomain> domains;
    std::vector<std::int64_t> dirichlet_feet_params;  // sorted boundary parameters of the feet
    int unresolved_cells = 0;
    int labelled_cells = 0;
    int unassigned_cells = 0;
    double unassigned_area = 0.0;  // quadrature area no domain could be found for

    Point center(int i, int j) const { return origin + Vec2{(i + 0.5) * h, (j + 0.5) * h}; }

    int total() const { return int(domains.size()); }
    int inner() const
    {
        return int(std::count_if(domains.begin(), domains.end(), [](auto& d) { return d.cls == DomainClass::inner; }));
    }
    int boundary() const { return total() - inner(); }
};

namespace detail {

inline int dirichlet_segment(const Domain& dom, const std::vector<double>& feet, const Point& z)
{
    if (feet.empty()) return 0;
    const double t = dom.boundary_param(z);
    const auto it = std::upper_bound(feet.begin(), feet.end(), t);
    const int idx = int(it - feet.begin());
    return idx == int(feet.size()) ? 0 : idx;  // wrap around to the first segment
}

inline std::vector<double> foot_params(const Domain& dom, const NeumannLineSet& L)
{
    std::vector<double> t;
    if (!dom.has_dirichlet()) return t;
    for (const auto& f : L.feet) t.push_back(dom.boundary_param(f));
    std::sort(t.begin(), t.end());
    std::vector<double> uniq;
    const double merge = 1e-9 * dom.perimeter();
    for (double v : t)
        if (uniq.empty() || v - uniq.back() > merge) uniq.push_back(v);
    if (uniq.size() > 1 && uniq.front() + dom.perimeter() - uniq.back() <= merge) uniq.pop_back();
    return uniq;
}

} // namespace detail

/// Terminus id of a trajectory end.
inline std::int64_t terminus_key(const Domain& dom, const std::vector<double>& feet, const TerminationReason& r)
{
    switch (r.tag) {
    case Termination::converged_to:
    case Termination::stalled_on_neumann: return r.index;
    case Termination::converged_to_curve: return terminus::curve_base + r.index;
    case Termination::hit_dirichlet: return terminus::dirichlet_base + detail::dirichlet_segment(dom, feet, r.z);
    default: return terminus::unresolved;
    }
}

template <ScalarField F>
class PartitionBuilder {
public:
    PartitionBuilder(const F& field, const CriticalInventory& inv, const NeumannLineSet& lines, PartitionConfig cfg)
        : f_(field), inv_(inv), L_(lines), cfg_(cfg)
    {
        FlowConfig fc = cfg_.flow;
        fc.record = false;
        flow_.emplace(field, inv, fc);
        feet_ = detail::foot_params(field.domain(), lines);
    }

    std::int64_t key(const TerminationReason& r) const { return terminus_key(f_.domain(), feet_, r); }

    LimitSignature full_signature(const Point& z) const { return flow_->signature(z); }

    NeumannPartition build(int resolution) const
    {
        const Domain& dom = f_.domain();
        NeumannPartition P;
        P.resolution = resolution;
        P.h = 1.0 / resolution;
        const double h = P.h;
        P.origin = dom.lower_corner();
        const Vec2 ext = dom.upper_corner() - dom.lower_corner();
        P.nx = int(std::ceil(ext.x / h - 1e-9));
        P.ny = int(std::ceil(ext.y / h - 1e-9));
        const int nx = P.nx, ny = P.ny;
        const std::size_t ncell = std::size_t(nx) * ny;
        for (double t : feet_) P.dirichlet_feet_params.push_back(std::int64_t(std::llround(t * 1e9)));

        const double bucket = 4.0 * h;
        const int bx = int(std::ceil(ext.x / bucket)) + 1, by = int(std::ceil(ext.y / bucket)) + 1;
        const detail::LineIndex index(L_, P.origin, bucket, bx, by);
        const double margin = cfg_.line_margin * h;

        // Cell state: inside the domain, within the margin of the line set, value.
        std::vector<std::uint8_t> inside(ncell, 0), near(ncell, 0);
        std::vector<double> value(ncell, 0.0);
        parallel_for(std::size_t(ny), [&](std::size_t j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = j * nx + i;
                const Point p = P.center(i, int(j));
                if (dom.signed_distance(p) >= 0.0) continue;
                inside[c] = 1;
                value[c] = f_.jet(p).value;
                near[c] = index.distance_to(p, margin) < margin;
            }
        });

        std::vector<std::size_t> order;
        for (std::size_t c = 0; c < ncell; ++c)
            if (inside[c] && !near[c]) order.push_back(c);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });

        constexpr std::int64_t unset = -2;
        std::vector<std::int64_t> omega(ncell, unset), alpha(ncell, unset);
        auto cell_of = [&](const Point& z) -> long {
            const int i = int(std::floor((z.x - P.origin.x) / h));
            const int j = int(std::floor((z.y - P.origin.y) / h));
            if (i < 0 || j < 0 || i >= nx || j >= ny) return -1;
            return long(j) * nx + i;
        };
        // Descending pass in increasing u, ascending pass in decreasing u, so
        // trajectories mostly run into cells whose label is already known.
        auto pass = [&](std::vector<std::int64_t>& lab, Direction dir, bool reverse) {
            for (std::size_t n = 0; n < order.size(); ++n) {
                const std::size_t c = reverse ? order[order.size() - 1 - n] : order[n];
                const int i = int(c % nx), j = int(c / nx);
                long hit = -1;
                auto stop = [&](const Point& z) {
                    const long d = cell_of(z);
                    if (d < 0 || std::size_t(d) == c || lab[d] < 0) return false;
                    hit = d;
                    return true;
                };
                const Trajectory tr = flow_->integrate(P.center(i, j), dir, stop);
                lab[c] = tr.termination.tag == Termination::interrupted ? lab[hit] : key(tr.termination);
            }
        };
        pass(omega, Direction::forward, false);
        pass(alpha, Direction::backward, true);

        P.flow_labelled.assign(ncell, 0);
        for (std::size_t c : order) {
            if (omega[c] == terminus::unresolved || alpha[c] == terminus::unresolved) ++P.unresolved_cells;
            else P.flow_labelled[c] = 1;
        }
        P.labelled_cells = int(order.size());
        if (P.labelled_cells > 0 && P.unresolved_cells > cfg_.max_unresolved * P.labelled_cells)
            throw std::runtime_error("labelling failed: " + std::to_string(P.unresolved_cells) + " unresolved cells");

        // Components of equal label under 8-connectivity.
        detail::UnionFind uf(ncell);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = std::size_t(j) * nx + i;
                if (!P.flow_labelled[c]) continue;
                const int di[4] = {1, -1, 0, 1}, dj[4] = {0, 1, 1, 1};
                for (int e = 0; e < 4; ++e) {
                    const int ii = i + di[e], jj = j + dj[e];
                    if (ii < 0 || ii >= nx || jj >= ny) continue;
                    const std::size_t d = std::size_t(jj) * nx + ii;
                    if (P.flow_labelled[d] && omega[d] == omega[c] && alpha[d] == alpha[c]) uf.unite(int(c), int(d));
                }
            }
        // Repair splits of one domain caused by the margin band: equal-label
        // components joined by a short segment that meets no line.
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = std::size_t(j) * nx + i;
                if (!P.flow_labelled[c]) continue;
                for (int dj = 0; dj <= 3; ++dj)
                    for (int di = -3; di <= 3; ++di) {
                        if (dj == 0 && di <= 0) continue;
                        const int ii = i + di, jj = j + dj;
                        if (ii < 0 || ii >= nx || jj >= ny) continue;
                        const std::size_t d = std::size_t(jj) * nx + ii;
                        if (!P.flow_labelled[d] || omega[d] != omega[c] || alpha[d] != alpha[c]) continue;
                        if (uf.find(int(c)) == uf.find(int(d))) continue;
                        if (!index.crosses(P.center(i, j), P.center(ii, jj))) uf.unite(int(c), int(d));
                    }
            }

        std::map<int, int> root_to_id;
        P.cell_domain.assign(ncell, -1);
        for (std::size_t c = 0; c < ncell; ++c) {
            if (!P.flow_labelled[c]) continue;
            const int r = uf.find(int(c));
            auto [it, fresh] = root_to_id.emplace(r, int(P.domains.size()));
            if (fresh) {
                NeumannDomain d;
                d.id = it->second;
                d.alpha = alpha[c];
                d.omega = omega[c];
                d.cls = terminus::is_dirichlet(d.alpha) || terminus::is_dirichlet(d.omega) ? DomainClass::boundary
                                                                                          : DomainClass::inner;
                d.representative = P.center(int(c % nx), int(c / nx));
                P.domains.push_back(d);
            }
            NeumannDomain& d = P.domains[it->second];
            P.cell_domain[c] = d.id;
            ++d.cells;
            if (value[c] > 0.0) d.has_positive = true;
            if (value[c] < 0.0) d.has_negative = true;
        }
        for (auto& d : P.domains) d.sign = d.has_positive == d.has_negative ? 0 : (d.has_positive ? 1 : -1);

        fill_margin(P, inside, index);
        integrate_domains(P, inside, value, index);
        return P;
    }

private:
    // Cells in the margin band take the domain of a neighbour reachable by a
    // segment that meets no line.
    void fill_margin(NeumannPartition& P, const std::vector<std::uint8_t>& inside, const detail::LineIndex& index) const
    {
        const int nx = P.nx, ny = P.ny;
        bool changed = true;
        while (changed) {
            changed = false;
            std::vector<std::pair<std::size_t, int>> updates;
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const std::size_t c = std::size_t(j) * nx + i;
                    if (!inside[c] || P.cell_domain[c] >= 0) continue;
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            const int ii = i + di, jj = j + dj;
                            if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
                            const int dom = P.cell_domain[std::size_t(jj) * nx + ii];
                            if (dom < 0) continue;
                            if (index.crosses(P.center(i, j), P.center(ii, jj))) continue;
                            updates.push_back({c, dom});
                            di = dj = 2;  // done with this cell
                        }
                }
            for (auto [c, d] : updates) {
                if (P.cell_domain[c] < 0) {
                    P.cell_domain[c] = d;
                    changed = true;
                }
            }
        }
        P.unassigned_cells = 0;
        for (std::size_t c = 0; c < inside.size(); ++c)
            if (inside[c] && P.cell_domain[c] < 0) ++P.unassigned_cells;
    }

    // Domain of an arbitrary point: the nearest assigned cell reachable by a
    // segment that meets no line.
    int locate(const NeumannPartition& P, const Point& p, const detail::LineIndex& index) const
    {
        const int ci = int(std::floor((p.x - P.origin.x) / P.h));
        const int cj = int(std::floor((p.y - P.origin.y) / P.h));
        if (ci >= 0 && cj >= 0 && ci < P.nx && cj < P.ny) {
            const int d = P.cell_domain[std::size_t(cj) * P.nx + ci];
            if (d >= 0 && !index.crosses(p, P.center(ci, cj))) return d;
        }
        // nearest reachable labelled cell within 8 cells
        const Vec2 off = p - P.center(ci, cj);
        std::array<std::tuple<double, int, int>, 289> cand;
        int nc = 0;
        for (int dj = -8; dj <= 8; ++dj)
            for (int di = -8; di <= 8; ++di) {
                const int i = ci + di, j = cj + dj;
                if (i < 0 || j < 0 || i >= P.nx || j >= P.ny) continue;
                if (P.cell_domain[std::size_t(j) * P.nx + i] < 0) continue;
                const Vec2 v{di * P.h - off.x, dj * P.h - off.y};
                cand[nc++] = {dot(v, v), i, j};
            }
        std::sort(cand.begin(), cand.begin() + nc);
        for (int n = 0; n < nc; ++n) {
            const auto [d2, i, j] = cand[n];
            if (!index.crosses(p, P.center(i, j))) return P.cell_domain[std::size_t(j) * P.nx + i];
        }
        return -1;
    }

    // Fallback for samples in cusps the grid does not resolve: the domain
    // with the sample's own limit signature, nearest first.
    int locate_by_flow(const NeumannPartition& P, const Point& p) const
    {
        // Trajectories stay inside their domain: follow one until it enters a
        // cell labelled by the flow pass.
        for (Direction dir : {Direction::forward, Direction::backward}) {
            int found = -1;
            auto stop = [&](const Point& z) {
                const int i = int(std::floor((z.x - P.origin.x) / P.h));
                const int j = int(std::floor((z.y - P.origin.y) / P.h));
                if (i < 0 || j < 0 || i >= P.nx || j >= P.ny) return false;
                const std::size_t c = std::size_t(j) * P.nx + i;
                if (!P.flow_labelled[c] || P.cell_domain[c] < 0) return false;
                found = P.cell_domain[c];
                return true;
            };
            flow_->integrate(p, dir, stop);
            if (found >= 0) return found;
        }
        const LimitSignature sig = full_signature(p);
        const std::int64_t ka = key(sig.alpha), ko = key(sig.omega);
        if (ka == terminus::unresolved || ko == terminus::unresolved) return -1;
        auto matches = [&](int d) { return d >= 0 && P.domains[d].alpha == ka && P.domains[d].omega == ko; };
        const int ci = int(std::floor((p.x - P.origin.x) / P.h));
        const int cj = int(std::floor((p.y - P.origin.y) / P.h));
        for (int r = 0; r <= 16; ++r) {
            double best = 1e300;
            int dom = -1;
            for (int dj = -r; dj <= r; ++dj)
                for (int di = -r; di <= r; ++di) {
                    if (std::max(std::abs(di), std::abs(dj)) != r) continue;
                    const int i = ci + di, j = cj + dj;
                    if (i < 0 || j < 0 || i >= P.nx || j >= P.ny) continue;
                    const int d = P.cell_domain[std::size_t(j) * P.nx + i];
                    if (!matches(d)) continue;
                    const double dist = distance(p, P.center(i, j));
                    if (dist < best) { best = dist; dom = d; }
                }
            if (dom >= 0) return dom;
        }
        return -1;
    }

    void integrate_domains(NeumannPartition& P, const std::vector<std::uint8_t>& inside, const std::vector<double>& value,
                           const detail::LineIndex& index) const
    {
        const Domain& dom = f_.domain();
        const int nx = P.nx, ny = P.ny;
        const double h = P.h;
        const double k = f_.frequency();
        const int s = std::max({1, cfg_.refine, int(std::ceil(cfg_.refine_per_wavelength * h * k / (2 * pi) - 1e-9))});
        const int fine = 2;
        const double sub = h / s;
        for (auto& d : P.domains) d.area = d.integral = d.abs_integral = 0.0;

        auto is_border = [&](int i, int j) {
            const int mine = P.cell_domain[std::size_t(j) * nx + i];
            if (mine < 0) return true;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) return true;
                    const std::size_t d = std::size_t(jj) * nx + ii;
                    if (!inside[d] || P.cell_domain[d] != mine) return true;
                }
            return false;
        };

        const double midpoint_weight = h * h * (1.0 - h * h * k * k / 24.0);
        struct Acc { double area = 0, integral = 0, abs_integral = 0; };
        std::vector<std::vector<std::pair<int, Acc>>> rows(ny);
        parallel_for(std::size_t(ny), [&](std::size_t jj) {
            const int j = int(jj);
            std::map<int, Acc> acc;
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = std::size_t(j) * nx + i;
                const Point pc = P.center(i, j);
                const bool touches = dom.signed_distance(pc) > -h;
                if (!inside[c] && !touches) continue;
                if (inside[c] && !touches && !is_border(i, j)) {
                    // Midpoint rule with its leading error term removed: the cell
                    // mean of u is u(c) (1 + h^2 lap u / 24 u) = u(c) (1 - h^2 lambda / 24).
                    Acc& a = acc[P.cell_domain[c]];
                    a.area += h * h;
                    a.integral += value[c] * midpoint_weight;
                    a.abs_integral += std::abs(value[c]) * h * h;
                    continue;
                }
                for (int b = 0; b < s; ++b)
                    for (int a = 0; a < s; ++a) {
                        // Sub-cells away from the lines and the boundary take their
                        // centre; cut ones are sampled on a finer jittered lattice (a
                        // regular lattice biases the split of cells cut by straight
                        // separatrices the same way all along the line).
                        const std::size_t sc = std::size_t(b * s + a);
                        const Point q = P.origin + Vec2{i * h + (a + 0.5) * sub, j * h + (b + 0.5) * sub};
                        const double reach = 0.75 * sub;
                        // rectangle sides run along cell edges and cut nothing
                        const bool cut = (dom.is_disk() && std::abs(dom.signed_distance(q)) < reach) ||
                                         index.distance_to(q, reach) < reach;
                        const int t = cut ? fine : 1;
                        const double w = (sub / t) * (sub / t);
                        for (int sb = 0; sb < t; ++sb)
                            for (int sa = 0; sa < t; ++sa) {
                                Point p = q;
                                if (cut) {
                                    const auto [jx, jy] = detail::jitter(c, sc * 64 + std::size_t(sb * t + sa), cfg_.seed);
                                    p = P.origin + Vec2{i * h + a * sub + (sa + jx) * sub / t, j * h + b * sub + (sb + jy) * sub / t};
                                }
                                if (dom.signed_distance(p) >= 0.0) continue;
                                int d = locate(P, p, index);
                                if (d < 0) d = locate_by_flow(P, p);
                                if (d < 0) {
                                    acc[-1].area += w;
                                    continue;
                                }
                                const double u = f_.jet(p).value;
                                Acc& A = acc[d];
                                A.area += w;
                                A.integral += u * w * (cut ? 1.0 : 1.0 - w * k * k / 24.0);
                                A.abs_integral += std::abs(u) * w;
                            }
                    }
            }
            rows[j].assign(acc.begin(), acc.end());
        });
        P.unassigned_area = 0.0;
        for (const auto& row : rows)
            for (const auto& [d, a] : row) {
                if (d < 0) {
                    P.unassigned_area += a.area;
                    continue;
                }
                P.domains[d].area += a.area;
                P.domains[d].integral += a.integral;
                P.domains[d].abs_integral += a.abs_integral;
            }
    }

    const F& f_;
    const CriticalInventory& inv_;
    const NeumannLineSet& L_;
    PartitionConfig cfg_;
    std::optional<GradientFlow<F>> flow_;
    std::vector<double> feet_;
};

template <ScalarField F>
NeumannPartition label_domains(const F& field, const CriticalInventory& inv, const NeumannLineSet& lines,
                               const PartitionConfig& cfg = {})
{
    const int N = effective_resolution(cfg, field.frequency());
    return PartitionBuilder<F>(field, inv, lines, cfg).build(N);
}

// ---------------------------------------------------------------------------
// Nodal domains on the same kind of grid (4-connectivity of the sign of u)

template <ScalarField F>
int labelled_nodal_count(const F& field, int resolution)
{
    const Domain& dom = field.domain();
    const double h = 1.0 / resolution;
    const Point lo = dom.lower_corner();
    const Vec2 ext = dom.upper_corner() - lo;
    const int nx = int(std::ceil(ext.x / h - 1e-9)), ny = int(std::ceil(ext.y / h - 1e-9));
    std::vector<int> sgn(std::size_t(nx) * ny, 0);
    parallel_for(std::size_t(ny), [&](std::size_t j) {
        for (int i = 0; i < nx; ++i) {
            const Point p = lo + Vec2{(i + 0.5) * h, (j + 0.5) * h};
            if (dom.signed_distance(p) >= 0.0) continue;
            // centres lying on a nodal line by symmetry carry rounding noise
            const double u = field.jet(p).value;
            sgn[j * nx + i] = u > 1e-12 ? 1 : (u < -1e-12 ? -1 : 0);
        }
    });
    detail::UnionFind uf(sgn.size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = std::size_t(j) * nx + i;
            if (!sgn[c]) continue;
            if (i + 1 < nx && sgn[c + 1] == sgn[c]) uf.unite(int(c), int(c + 1));
            if (j + 1 < ny && sgn[c + nx] == sgn[c]) uf.unite(int(c), int(c + nx));
        }
    int count = 0;
    for (std::size_t c = 0; c < sgn.size(); ++c)
        if (sgn[c] && uf.find(int(c)) == int(c)) ++count;
    return count;
}

// ---------------------------------------------------------------------------
// Verification of the structural properties of the partition

struct ClauseResult {
    std::string name;
    bool passed = true;
    double margin = 0.0;  // worst measured value
    std::string witness;  // first failing item, empty on success
};

struct VerificationReport {
    std::vector<ClauseResult> clauses;
    bool passed() const
    {
        return std::all_of(clauses.begin(), clauses.end(), [](const ClauseResult& c) { return c.passed; });
    }
    const ClauseResult* find(const std::string& prefix) const
    {
        for (const auto& c : clauses)
            if (c.name.rfind(prefix, 0) == 0) return &c;
        return nullptr;
    }
};

struct VerifyOptions {
    bool grid_doubling = true;
    bool spot_check = true;
};

/// Everything computed for one eigenfunction.
template <ScalarField F>
struct PartitionRun {
    CriticalInventory inventory;
    NeumannLineSet lines;
    NeumannPartition partition;
};

template <ScalarField F>
PartitionRun<F> compute_partition(const F& field, const PartitionConfig& cfg = {})
{
    PartitionRun<F> run;
    run.inventory = find_critical_points(field, cfg.search);
    run.lines = neumann_line_set(field, run.inventory, cfg);
    run.partition = label_domains(field, run.inventory, run.lines, cfg);
    return run;
}

struct CountReport {
    DomainCounts labelled;
    std::optional<DomainCounts> formula;  // closed form, where one exists
    int resolution = 0;

    bool matches() const { return formula && *formula == labelled; }
};

template <ScalarField F>
CountReport count_domains(const F& field, const PartitionConfig& cfg = {})
{
    const PartitionRun<F> run = compute_partition(field, cfg);
    CountReport r;
    r.labelled = {run.partition.total(), run.partition.inner(), run.partition.boundary()};
    r.resolution = run.partition.resolution;
    if constexpr (requires { field.mode(); })
        if (has_closed_form(field.mode())) r.formula = closed_form_count(field.mode());
    return r;
}

namespace detail {

// Derivative at x[2] of the quartic through five samples.
inline Vec2 lagrange_derivative(const double t[5], const Point z[5])
{
    Vec2 d{};
    for (int j = 0; j < 5; ++j) {
        // l_j'(t2) = sum_{m != j} 1/(tj - tm) prod_{l != j, m} (t2 - tl)/(tj - tl)
        double lj = 0.0;
        for (int m = 0; m < 5; ++m) {
            if (m == j) continue;
            double prod = 1.0 / (t[j] - t[m]);
            for (int l = 0; l < 5; ++l) {
                if (l == j || l == m) continue;
                prod *= (t[2] - t[l]) / (t[j] - t[l]);
            }
            lj += prod;
        }
        d += lj * z[j];
    }
    return d;
}

} // namespace detail

template <ScalarField F>
VerificationReport verify_partition(const F& field, const PartitionRun<F>& run, const PartitionConfig& cfg = {},
                                    VerifyOptions opt = {})
{
    VerificationReport rep;
    const auto& P = run.partition;
    const auto& L = run.lines;
    const auto& inv = run.inventory;
    const Domain& dom = field.domain();
    const double k = field.frequency();

    {   // (a) finite count, stable under grid doubling
        ClauseResult c{"a: count finite and stable under grid doubling"};
        c.margin = P.total();
        if (P.total() <= 0 || P.total() > P.labelled_cells) {
            c.passed = false;
            c.witness = "no finite positive count";
        }
        if (opt.grid_doubling) {
            const NeumannPartition Q = PartitionBuilder<F>(field, inv, L, cfg).build(2 * P.resolution);
            if (Q.total() != P.total() || Q.inner() != P.inner()) {
                c.passed = false;
                std::ostringstream os;
                os << "N=" << P.resolution << ": " << P.total() << "/" << P.inner() << ", N=" << 2 * P.resolution << ": "
                   << Q.total() << "/" << Q.inner();
                c.witness = os.str();
            }
        }
        rep.clauses.push_back(c);
    }
    {   // (b) inner domains change sign
        ClauseResult c{"b: inner domains sign-changing"};
        for (const auto& d : P.domains)
            if (d.cls == DomainClass::inner && !(d.has_positive && d.has_negative)) {
                c.passed = false;
                std::ostringstream os;
                os << "domain " << d.id << " at (" << d.representative.x << ", " << d.representative.y << ")";
                c.witness = os.str();
                break;
            }
        rep.clauses.push_back(c);
    }
    {   // (c) boundary domains are one-signed
        ClauseResult c{"c: boundary domains one-signed"};
        for (const auto& d : P.domains)
            if (d.cls == DomainClass::boundary && d.sign == 0) {
                c.passed = false;
                std::ostringstream os;
                os << "domain " << d.id << " at (" << d.representative.x << ", " << d.representative.y << ")";
                c.witness = os.str();
                break;
            }
        rep.clauses.push_back(c);
    }
    {   // (d) vanishing mean on inner domains
        ClauseResult c{"d: inner domains have zero mean"};
        for (const auto& d : P.domains) {
            if (d.cls != DomainClass::inner || d.abs_integral <= 0.0) continue;
            const double r = std::abs(d.integral) / d.abs_integral;
            if (r > c.margin) c.margin = r;
            if (r >= cfg.int_tol && c.passed) {
                c.passed = false;
                std::ostringstream os;
                os << "domain " << d.id << " at (" << d.representative.x << ", " << d.representative.y << ") ratio " << r;
                c.witness = os.str();
            }
        }
        rep.clauses.push_back(c);
    }
    {   // (e) separatrices are flow lines: the gradient has no normal component
        ClauseResult c{"e: gradient tangent along separatrices"};
        const double gmin = 1e-3 * k * field.amplitude();
        for (const auto& s : L.separatrices) {
            const auto& S = s.line.samples;
            // the final sample of a Dirichlet hit comes from bisection, not from a step
            const std::size_t n = S.size() - (s.line.termination.tag == Termination::hit_dirichlet ? 1 : 0);
            for (std::size_t i = 2; i + 2 < n; ++i) {
                double t[5];
                Point z[5];
                for (int q = 0; q < 5; ++q) { t[q] = S[i - 2 + q].t; z[q] = S[i - 2 + q].z; }
                const Vec2 g = field.jet(z[2]).grad;
                if (norm(g) < gmin) continue;
                const Vec2 tan = normalized(detail::lagrange_derivative(t, z));
                const double r = std::abs(dot(g, perp(tan))) / norm(g);
                if (r > c.margin) c.margin = r;
                if (r >= 1e-6 && c.passed) {
                    c.passed = false;
                    std::ostringstream os;
                    os << "(" << z[2].x << ", " << z[2].y << ") ratio " << r;
                    c.witness = os.str();
                }
            }
        }
        rep.clauses.push_back(c);
    }
    {   // (f) Gamma^N lies in the line set: no labelled cell touches it
        ClauseResult c{"f: Neumann boundary inside the line set"};
        if (dom.has_neumann()) {
            if (!L.neumann_boundary) {
                c.passed = false;
                c.witness = "Neumann boundary missing from the line set";
            }
            const double band = P.h;
            for (int j = 0; j < P.ny && c.passed; ++j)
                for (int i = 0; i < P.nx; ++i) {
                    const std::size_t cell = std::size_t(j) * P.nx + i;
                    const Point p = P.center(i, j);
                    if (P.flow_labelled[cell] && dom.signed_distance(p) > -band) {
                        c.passed = false;
                        std::ostringstream os;
                        os << "labelled cell at (" << p.x << ", " << p.y << ")";
                        c.witness = os.str();
                        break;
                    }
                }
        }
        rep.clauses.push_back(c);
    }
    {   // (g) every critical point lies on the line set
        ClauseResult c{"g: critical points inside the line set"};
        for (std::size_t i = 0; i < inv.points.size(); ++i) {
            const Point z = inv.points[i].location;
            bool found = false;
            for (const auto& q : L.isolated_points) found = found || distance(q, z) < 1e-12;
            for (const auto& s : L.separatrices) {
                if (s.saddle == int(i)) found = true;
                if (s.line.termination.is_critical() && s.line.termination.index == int(i)) found = true;
            }
            if (!found) {
                c.passed = false;
                std::ostringstream os;
                os << "(" << z.x << ", " << z.y << ")";
                c.witness = os.str();
                break;
            }
        }
        for (const auto& cv : inv.curves)
            if (!std::any_of(L.critical_curves.begin(), L.critical_curves.end(),
                             [&](const CriticalCurve& x) { return std::abs(x.radius - cv.radius) < 1e-12; })) {
                c.passed = false;
                c.witness = "critical circle missing";
            }
        rep.clauses.push_back(c);
    }
    {   // (h) total length finite and stable under a finer separatrix step
        ClauseResult c{"h: line length finite and stable"};
        const double len = L.total_length();
        PartitionConfig fine = cfg;
        fine.separatrix_step = 0.5 * cfg.separatrix_step;
        const NeumannLineSet L2 = neumann_line_set(field, inv, separatrices(field, inv, fine));
        const double len2 = L2.total_length();
        c.margin = std::abs(len - len2) / std::max(len, 1e-300);
        const double cap = 50.0 * dom.diameter() * std::max<std::size_t>(1, L.separatrices.size() + L.critical_curves.size() + 1);
        if (!std::isfinite(len) || len > cap || c.margin > 1e-5) {
            c.passed = false;
            std::ostringstream os;
            os << "length " << len << " vs " << len2;
            c.witness = os.str();
        }
        rep.clauses.push_back(c);
    }
    {   // no separatrix left unresolved
        ClauseResult c{"s: separatrices terminate"};
        if (!L.problems.empty()) {
            c.passed = false;
            c.witness = L.problems.front();
        }
        c.margin = double(L.problems.size());
        rep.clauses.push_back(c);
    }
    if (opt.spot_check && cfg.spot_checks > 0) {
        // Random pairs from one domain share the full signature.
        ClauseResult c{"p: signature spot check"};
        const PartitionBuilder<F> builder(field, inv, L, cfg);
        std::vector<std::vector<std::size_t>> cells(P.domains.size());
        for (std::size_t i = 0; i < P.cell_domain.size(); ++i)
            if (P.flow_labelled[i] && P.cell_domain[i] >= 0) cells[P.cell_domain[i]].push_back(i);
        std::mt19937_64 rng(cfg.seed);
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<int> usable;
        for (std::size_t d = 0; d < cells.size(); ++d)
            if (cells[d].size() >= 2) usable.push_back(int(d));
        if (!usable.empty())
            for (int n = 0; n < cfg.spot_checks; ++n) {
                const auto& v = cells[usable[rng() % usable.size()]];
                pairs.push_back({v[rng() % v.size()], v[rng() % v.size()]});
            }
        std::vector<std::uint8_t> ok(pairs.size(), 1);
        auto sig_key = [&](std::size_t cell) {
            const LimitSignature s = builder.full_signature(P.center(int(cell % P.nx), int(cell / P.nx)));
            return std::pair{builder.key(s.alpha), builder.key(s.omega)};
        };
        parallel_for(pairs.size(), [&](std::size_t n) { ok[n] = sig_key(pairs[n].first) == sig_key(pairs[n].second); });
        const auto bad = std::find(ok.begin(), ok.end(), 0);
        c.margin = double(std::count(ok.begin(), ok.end(), 0));
        if (bad != ok.end()) {
            c.passed = false;
            const std::size_t cell = pairs[bad - ok.begin()].first;
            const Point p = P.center(int(cell % P.nx), int(cell / P.nx));
            std::ostringstream os;
            os << "pair starting at (" << p.x << ", " << p.y << ")";
            c.witness = os.str();
        }
        rep.clauses.push_back(c);
    }
    return rep;
}

} // namespace neumann
