#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "neumann/flow.hpp"

using namespace neumann;

namespace {

int index_of(const CriticalInventory& inv, const Point& p, double tol = 1e-6)
{
    for (std::size_t i = 0; i < inv.points.size(); ++i)
        if (distance(inv.points[i].location, p) < tol) return int(i);
    return -1;
}

Point random_interior(const Domain& d, std::mt19937_64& rng)
{
    const Point lo = d.lower_corner(), hi = d.upper_corner();
    std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y);
    for (;;) {
        const Point p{ux(rng), uy(rng)};
        if (d.signed_distance(p) < -1e-3) return p;
    }
}

// Conserved along the flow of sin(ax) sin(by):
// b^2 log|cos ax| - a^2 log|cos by|.
double rect_invariant(double a, double b, const Point& z)
{
    return b * b * std::log(std::abs(std::cos(a * z.x))) - a * a * std::log(std::abs(std::cos(b * z.y)));
}

} // namespace

TEST(Flow, RectangleGroundStateOnSymmetryLine)
{
    const auto f = Eigenfunction::rectangle(1, 1, 1, 1);
    const auto inv = find_critical_points(f);
    GradientFlow flow(f, inv);
    const auto down = flow.integrate({0.25, 0.5}, Direction::forward);
    EXPECT_EQ(down.termination.tag, Termination::hit_dirichlet);
    EXPECT_NEAR(down.termination.z.x, 0.0, 1e-9);
    EXPECT_NEAR(down.termination.z.y, 0.5, 1e-9);
    for (const auto& s : down.samples) EXPECT_NEAR(s.z.y, 0.5, 1e-10);

    const auto up = flow.integrate({0.25, 0.5}, Direction::backward);
    EXPECT_EQ(up.termination.tag, Termination::converged_to);
    EXPECT_EQ(up.termination.index, index_of(inv, {0.5, 0.5}));
}

TEST(Flow, DiskGroundState)
{
    const auto f = Eigenfunction::disk(0, 1);
    const auto inv = find_critical_points(f);
    const auto sig = limit_signature(f, inv, {0.3, 0.0});
    EXPECT_EQ(sig.omega.tag, Termination::hit_dirichlet);
    EXPECT_NEAR(sig.omega.z.x, 1.0, 1e-9);
    EXPECT_NEAR(sig.omega.z.y, 0.0, 1e-9);
    EXPECT_EQ(sig.alpha.tag, Termination::converged_to);
    EXPECT_LT(norm(inv.points[sig.alpha.index].location), 1e-9);
}

// Radial flow of c J0(k rho) reduces to rho' = c k J1(k rho).
TEST(Flow, RadialModeMatchesScalarOde)
{
    const auto f = Eigenfunction::disk(0, 2);
    const auto inv = find_critical_points(f);
    const double k = f.frequency();
    const double c = f.value({0, 0});
    const auto tr = integrate_flow(f, inv, {0.9, 0.0}, Direction::forward);
    EXPECT_EQ(tr.termination.tag, Termination::converged_to_curve);
    EXPECT_NEAR(norm(tr.termination.z), bessel_prime_zero(0, 1).value / k, 0.03 / k);

    auto rhs = [&](double r) { return c * k * std::cyl_bessel_j(1.0, k * r); };
    double r = 0.9, t = 0.0;
    for (const auto& s : tr.samples) {
        const int sub = 200;
        const double dt = (s.t - t) / sub;
        for (int i = 0; i < sub; ++i) {
            const double k1 = rhs(r), k2 = rhs(r + 0.5 * dt * k1), k3 = rhs(r + 0.5 * dt * k2), k4 = rhs(r + dt * k3);
            r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        t = s.t;
        ASSERT_NEAR(s.z.y, 0.0, 1e-12);
        ASSERT_NEAR(norm(s.z), r, 1e-7) << "t=" << t;
    }

    const auto up = integrate_flow(f, inv, {0.3, 0.0}, Direction::backward);
    EXPECT_EQ(up.termination.tag, Termination::converged_to);
}

TEST(Flow, ConservedQuantityOnRectangle)
{
    const double a = 3 * pi / 2, b = 2 * pi;
    const auto f = Eigenfunction::rectangle(2, 1, 3, 2);
    const auto inv = find_critical_points(f);
    GradientFlow flow(f, inv);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20; ++i) {
        const Point z0 = random_interior(f.domain(), rng);
        const double I0 = rect_invariant(a, b, z0);
        for (Direction dir : {Direction::forward, Direction::backward}) {
            const auto tr = flow.integrate(z0, dir);
            for (const auto& s : tr.samples) {
                const double ca = std::abs(std::cos(a * s.z.x)), cb = std::abs(std::cos(b * s.z.y));
                if (ca < 1e-3 || cb < 1e-3) continue;
                ASSERT_NEAR(rect_invariant(a, b, s.z), I0, 1e-6);
            }
        }
    }
}

// The zero level set of the invariant through a saddle is its pair of
// separatrices: seeds there pass by the saddle, and seeds on either side of
// them end in different places.
TEST(Flow, InvariantLevelSetSeparatesBasins)
{
    const double a = 3 * pi / 2, b = 2 * pi;
    const auto f = Eigenfunction::rectangle(2, 1, 3, 2);
    const auto inv = find_critical_points(f);
    const Point saddle{2.0 / 3.0, 0.5};
    ASSERT_GE(index_of(inv, saddle), 0);
    GradientFlow flow(f, inv);
    const double x = 2.0 / 3.0 + 0.05;
    const double dy = std::acos(std::pow(std::abs(std::cos(a * x)), b * b / (a * a))) / b;
    for (double sgn : {1.0, -1.0}) {
        const Point z0{x, 0.5 + sgn * dy};
        double closest = 1e300;
        for (Direction dir : {Direction::forward, Direction::backward})
            for (const auto& s : flow.integrate(z0, dir).samples) closest = std::min(closest, distance(s.z, saddle));
        EXPECT_LT(closest, 0.01);

        const auto lo = flow.signature({x, 0.5 + sgn * dy - 1e-4});
        const auto hi = flow.signature({x, 0.5 + sgn * dy + 1e-4});
        EXPECT_TRUE(lo.alpha.index != hi.alpha.index || lo.omega.index != hi.omega.index) << sgn;
    }
}

TEST(Flow, FullyDegenerateSaddleIsAvoidedByGenericSeeds)
{
    const auto f = Eigenfunction::disk(3, 1);
    const auto inv = find_critical_points(f);
    const int origin = index_of(inv, {0, 0});
    ASSERT_GE(origin, 0);
    for (double ang : {0.1, 0.3, 0.9, 1.7, 2.2, 4.0}) {
        const auto sig = limit_signature(f, inv, 0.05 * unit_vector(ang));
        EXPECT_NE(sig.alpha.index, origin);
        EXPECT_NE(sig.omega.index, origin);
    }
}

TEST(Flow, MonotoneFiniteAndWithinBudget)
{
    std::mt19937_64 rng(11);
    for (const auto& f : {Eigenfunction::rectangle(2, 1, 3, 2), Eigenfunction::disk(2, 2),
                          Eigenfunction::rectangle(1, 1.618033988749895, 4, 3)}) {
        const auto inv = find_critical_points(f);
        GradientFlow flow(f, inv);
        const double diam = f.domain().diameter();
        int budget = 0;
        for (int i = 0; i < 100; ++i) {
            const Point z0 = random_interior(f.domain(), rng);
            for (Direction dir : {Direction::forward, Direction::backward}) {
                const auto tr = flow.integrate(z0, dir);
                if (tr.termination.tag == Termination::budget) ++budget;
                EXPECT_LT(tr.arc_length, 50 * diam);
                for (std::size_t j = 1; j < tr.samples.size(); ++j) {
                    const double du = tr.samples[j].u - tr.samples[j - 1].u;
                    ASSERT_TRUE(dir == Direction::forward ? du <= 1e-14 : du >= -1e-14);
                }
            }
        }
        EXPECT_EQ(budget, 0) << f.mode().describe();
    }
}

TEST(Flow, Reversible)
{
    const auto f = Eigenfunction::rectangle(2, 1, 3, 2);
    const auto inv = find_critical_points(f);
    FlowConfig cfg;
    cfg.max_step = 0.002;
    GradientFlow flow(f, inv, cfg);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const Point z0 = random_interior(f.domain(), rng);
        const auto fw = flow.integrate(z0, Direction::forward);
        ASSERT_GT(fw.samples.size(), 20u);
        const Point mid = fw.samples[fw.samples.size() / 2].z;
        const double u0 = f.value(z0);
        const auto bw = flow.integrate(mid, Direction::backward, [&](const Point& z) { return f.value(z) >= u0; });
        double best = 1e300;
        for (std::size_t j = 1; j < bw.samples.size(); ++j) {
            const Point p = bw.samples[j - 1].z, q = bw.samples[j].z;
            const Vec2 d = q - p;
            const double tt = std::clamp(dot(z0 - p, d) / std::max(dot(d, d), 1e-300), 0.0, 1.0);
            best = std::min(best, distance(z0, p + tt * d));
        }
        EXPECT_LT(best, 1e-5);
    }
}

TEST(Flow, NeumannBoundaryIsInvariant)
{
    const auto f = Eigenfunction::disk(1, 1, Parity::cosine, BoundaryCondition::neumann);
    const auto inv = find_critical_points(f);
    GradientFlow flow(f, inv);
    for (double ang : {0.7, 2.0, -1.0}) {
        for (Direction dir : {Direction::forward, Direction::backward}) {
            const auto tr = flow.integrate(unit_vector(ang), dir);
            EXPECT_EQ(tr.termination.tag, Termination::stalled_on_neumann);
            for (const auto& s : tr.samples) ASSERT_NEAR(norm(s.z), 1.0, 1e-8);
        }
    }
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Point z0 = random_interior(f.domain(), rng);
        for (Direction dir : {Direction::forward, Direction::backward}) {
            const auto tr = flow.integrate(z0, dir);
            EXPECT_NE(tr.termination.tag, Termination::hit_dirichlet);
            for (const auto& s : tr.samples) ASSERT_LE(f.domain().signed_distance(s.z), 1e-12);
        }
    }
}

TEST(Flow, RejectsSeedOutsideDomain)
{
    const auto f = Eigenfunction::disk(0, 1);
    const auto inv = find_critical_points(f);
    EXPECT_THROW(integrate_flow(f, inv, {1.5, 0.0}, Direction::forward), std::domain_error);
}
