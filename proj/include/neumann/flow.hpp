#pragma once

// Gradient descent flow z' = -grad u. "Forward" follows decreasing u,
// "backward" follows increasing u.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "critical.hpp"
#include "ode.hpp"

namespace neumann {

enum class Direction { forward, backward };

inline const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

enum class Termination {
    converged_to,        // isolated critical point (index into the inventory)
    converged_to_curve,  // critical circle (index into inventory curves)
    hit_dirichlet,       // reached Gamma^D in finite time
    stalled_on_neumann,  // converged to a critical point on Gamma^N
    budget,              // step budget exhausted
    interrupted,         // caller-supplied stop predicate fired
};

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::converged_to: return "converged";
    case Termination::converged_to_curve: return "converged-curve";
    case Termination::hit_dirichlet: return "hit-dirichlet";
    case Termination::stalled_on_neumann: return "stalled-neumann";
    case Termination::budget: return "budget";
    case Termination::interrupted: return "interrupted";
    }
    return "?";
}

struct TerminationReason {
    Termination tag = Termination::budget;
    int index = -1;     // critical point or curve index, -1 if none
    double t = 0.0;     // time of the terminal sample
    Point z;            // terminal point
    double angle = 0.0; // polar angle of the terminal point around a curve centre

    bool is_critical() const
    {
        return tag == Termination::converged_to || tag == Termination::stalled_on_neumann;
    }
};

struct FlowSample {
    double t = 0.0;
    Point z;
    double u = 0.0;
};

struct Trajectory {
    std::vector<FlowSample> samples;
    TerminationReason termination;
    double arc_length = 0.0;
    int steps = 0;
};

struct FlowLine {
    Point seed;
    Trajectory forward;
    Trajectory backward;
    double arc_length = 0.0;
};

/// Termini for t -> -infinity (alpha) and t -> +infinity (omega).
struct LimitSignature {
    TerminationReason alpha;
    TerminationReason omega;
};

struct FlowConfig {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = 0.05;        // spatial step cap, in units of 1/sqrt(lambda)
    double capture_radius = 0.02;  // in units of 1/sqrt(lambda)
    double capture_gradient = 0.0; // 0 selects the critical-gradient tolerance
    double dirichlet_tol = 1e-10;
    int max_steps = 20000;
    bool record = true;
};

template <ScalarField F>
class GradientFlow {
public:
    GradientFlow(const F& field, const CriticalInventory& inventory, FlowConfig cfg = {})
        : f_(field), inv_(inventory), cfg_(cfg)
    {
        k_ = field.frequency();
        tol_ = tolerances_for(field);
        capture_grad_ = cfg_.capture_gradient > 0.0 ? cfg_.capture_gradient : tol_.crit_grad;
        capture_r_ = cfg_.capture_radius / k_;
        step_cap_ = cfg_.max_step / k_;
    }

    const FlowConfig& config() const { return cfg_; }
    const F& field() const { return f_; }
    const CriticalInventory& inventory() const { return inv_; }

    /// Integrates from z0 until capture, a Dirichlet hit, or the step budget.
    /// `stop`, if given, is checked after each accepted step.
    /// `exclude` names an inventory point that must not capture the flow
    /// (the saddle a separatrix starts from).
    Trajectory integrate(const Point& z0, Direction dir, const std::function<bool(const Point&)>& stop = {},
                         int exclude = -1) const
    {
        const Domain& dom = f_.domain();
        if (!dom.contains(z0, 1e-9)) throw std::domain_error("flow seed outside the closed domain");
        const double sgn = dir == Direction::forward ? 1.0 : -1.0;
        const bool on_neumann = dom.has_neumann() && std::abs(dom.signed_distance(z0)) < 1e-12;

        Trajectory tr;
        Point z = z0;
        if (on_neumann) z = dom.project_to_boundary(z);
        double t = 0.0;
        auto record = [&](const Point& p, double time) {
            if (cfg_.record) tr.samples.push_back({time, p, f_.jet(p).value});
        };
        record(z, t);

        if (auto c = capture(z, norm(f_.jet(z).grad), exclude)) {
            tr.termination = *c;
            tr.termination.t = t;
            return tr;
        }

        bool arc_mode = false;
        auto rhs = [&](const State<3>& y) -> State<3> {
            const Vec2 g = f_.jet({y[0], y[1]}).grad;
            if (!arc_mode) return {-sgn * g.x, -sgn * g.y, sgn};
            const double n = std::max(norm(g), 1e-300);
            return {-sgn * g.x / n, -sgn * g.y / n, sgn / n};
        };

        double h = 0.0;
        State<3> y{z.x, z.y, t};
        State<3> k1{};
        bool have_k1 = false;
        int rejected = 0;
        while (tr.steps < cfg_.max_steps) {
            const Jet J = f_.jet(z);
            const double gn = norm(J.grad);
            const bool want_arc = gn < 100.0 * tol_.crit_grad && !near_consistent(z, dir, exclude);
            if (want_arc != arc_mode || !have_k1) {
                arc_mode = want_arc;
                k1 = rhs(y);
                have_k1 = true;
            }
            const double speed = arc_mode ? 1.0 : std::max(gn, 1e-300);
            const double hmax = step_cap_ / speed;
            if (h <= 0.0) h = 0.1 * hmax;
            h = std::min(h, hmax);

            RkStep<3> st = dormand_prince_step<3>(rhs, y, k1, h);
            // Tolerance relative to the step displacement: scaling by |z| would
            // let the iterate wander at 1e-9 around a sink and never capture.
            const double disp = std::hypot(st.y[0] - y[0], st.y[1] - y[1]);
            const double sc = cfg_.atol + cfg_.rtol * disp;
            const double err = std::hypot(st.error[0], st.error[1]) / sc;
            if (!(err <= 1.0)) {
                h *= std::isfinite(err) ? step_factor(err) : 0.1;
                if (++rejected > 200) break;
                continue;
            }
            Point zn{st.y[0], st.y[1]};
            const double sd = dom.signed_distance(zn);
            if (sd > 0.0 || on_neumann) {
                if (dom.has_dirichlet()) {
                    tr.termination = locate_dirichlet(rhs, y, k1, h);
                    record(tr.termination.z, tr.termination.t);
                    tr.arc_length += distance(z, tr.termination.z);
                    ++tr.steps;
                    return tr;
                }
                if (on_neumann) {
                    zn = dom.project_to_boundary(zn);
                    st.y[0] = zn.x;
                    st.y[1] = zn.y;
                    st.f_end = {};
                    have_k1 = false;
                } else {
                    // Interior trajectories cannot cross Gamma^N; shrink the step.
                    h *= 0.5;
                    if (++rejected > 200) break;
                    continue;
                }
            }
            rejected = 0;
            ++tr.steps;
            tr.arc_length += distance(z, zn);
            y = st.y;
            if (have_k1) k1 = st.f_end;
            z = zn;
            t = y[2];
            record(z, t);
            h *= step_factor(err);

            const double gnew = norm(f_.jet(z).grad);
            if (auto c = capture(z, gnew, exclude)) {
                tr.termination = *c;
                tr.termination.t = t;
                return tr;
            }
            if (stop && stop(z)) {
                tr.termination = {Termination::interrupted, -1, t, z};
                return tr;
            }
        }
        tr.termination = {Termination::budget, -1, t, z};
        return tr;
    }

    FlowLine flow_line(const Point& z0) const
    {
        FlowLine fl;
        fl.seed = z0;
        fl.forward = integrate(z0, Direction::forward);
        fl.backward = integrate(z0, Direction::backward);
        fl.arc_length = fl.forward.arc_length + fl.backward.arc_length;
        return fl;
    }

    LimitSignature signature(const Point& z0) const
    {
        return {integrate(z0, Direction::backward).termination, integrate(z0, Direction::forward).termination};
    }

private:
    // Critical points the flow in direction `dir` can converge to from a
    // regular point: not maxima when descending, not minima when ascending.
    bool consistent(const CriticalKind& kind, Direction dir) const
    {
        if (dir == Direction::forward) return !kind.is_local_max();
        return !kind.is_local_min();
    }

    bool near_consistent(const Point& z, Direction dir, int exclude) const
    {
        for (std::size_t i = 0; i < inv_.points.size(); ++i) {
            const auto& c = inv_.points[i];
            if (int(i) != exclude && consistent(c.kind, dir) && distance(z, c.location) < capture_r_) return true;
        }
        for (const auto& c : inv_.curves)
            if ((dir == Direction::forward) != c.maximum && std::abs(distance(z, c.center) - c.radius) < capture_r_)
                return true;
        return false;
    }

    std::optional<TerminationReason> capture(const Point& z, double grad_norm, int exclude) const
    {
        if (grad_norm >= capture_grad_) return std::nullopt;
        int best = -1;
        double bd = capture_r_;
        for (std::size_t i = 0; i < inv_.points.size(); ++i) {
            if (int(i) == exclude) continue;
            const double d = distance(z, inv_.points[i].location);
            if (d < bd) { bd = d; best = int(i); }
        }
        if (best >= 0) {
            const auto& c = inv_.points[best];
            const Termination tag = c.on_boundary == BoundaryPart::neumann ? Termination::stalled_on_neumann
                                                                          : Termination::converged_to;
            return TerminationReason{tag, best, 0.0, z};
        }
        for (std::size_t i = 0; i < inv_.curves.size(); ++i) {
            const auto& c = inv_.curves[i];
            if (std::abs(distance(z, c.center) - c.radius) < capture_r_) {
                const Vec2 d = z - c.center;
                return TerminationReason{Termination::converged_to_curve, int(i), 0.0, z, std::atan2(d.y, d.x)};
            }
        }
        return std::nullopt;
    }

    template <class Rhs>
    TerminationReason locate_dirichlet(Rhs& rhs, const State<3>& y, const State<3>& k1, double h) const
    {
        const Domain& dom = f_.domain();
        double lo = 0.0, hi = h;
        State<3> inside = y, outside = dormand_prince_step<3>(rhs, y, k1, h).y;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const State<3> ym = dormand_prince_step<3>(rhs, y, k1, mid).y;
            const double sd = dom.signed_distance({ym[0], ym[1]});
            if (sd > 0.0) { hi = mid; outside = ym; }
            else { lo = mid; inside = ym; }
            if (std::abs(sd) < cfg_.dirichlet_tol && sd <= 0.0) break;
            if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
        }
        const Point zi{inside[0], inside[1]};
        const Point zh = dom.project_to_boundary(zi);
        return {Termination::hit_dirichlet, -1, inside[2], zh};
    }

    const F& f_;
    const CriticalInventory& inv_;
    FlowConfig cfg_;
    double k_ = 1.0;
    Tolerances tol_;
    double capture_grad_ = 0.0;
    double capture_r_ = 0.0;
    double step_cap_ = 0.0;
};

template <ScalarField F>
Trajectory integrate_flow(const F& field, const CriticalInventory& inv, const Point& z0, Direction dir,
                          const FlowConfig& cfg = {})
{
    return GradientFlow<F>(field, inv, cfg).integrate(z0, dir);
}

template <ScalarField F>
LimitSignature limit_signature(const F& field, const CriticalInventory& inv, const Point& z0, const FlowConfig& cfg = {})
{
    return GradientFlow<F>(field, inv, cfg).signature(z0);
}

} // namespace neumann
