#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta step for autonomous systems.

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

namespace neumann {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
struct RkStep {
    State<N> y;      // fifth-order solution
    State<N> error;  // difference to the embedded fourth-order solution
    State<N> f_end;  // derivative at the new point (first stage of the next step)
};

/// One Dormand-Prince step of size h from y, given k1 = f(y).
template <std::size_t N, class F>
RkStep<N> dormand_prince_step(F&& f, const State<N>& y, const State<N>& k1, double h)
{
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    auto comb = [&](auto... terms) {
        State<N> r = y;
        for (std::size_t i = 0; i < N; ++i) r[i] += h * (... + (terms.first * (*terms.second)[i]));
        return r;
    };
    using P = std::pair<double, const State<N>*>;

    const State<N> k2 = f(comb(P{a21, &k1}));
    const State<N> k3 = f(comb(P{a31, &k1}, P{a32, &k2}));
    const State<N> k4 = f(comb(P{a41, &k1}, P{a42, &k2}, P{a43, &k3}));
    const State<N> k5 = f(comb(P{a51, &k1}, P{a52, &k2}, P{a53, &k3}, P{a54, &k4}));
    const State<N> k6 = f(comb(P{a61, &k1}, P{a62, &k2}, P{a63, &k3}, P{a64, &k4}, P{a65, &k5}));
    RkStep<N> out;
    out.y = comb(P{b1, &k1}, P{b3, &k3}, P{b4, &k4}, P{b5, &k5}, P{b6, &k6});
    out.f_end = f(out.y);
    for (std::size_t i = 0; i < N; ++i)
        out.error[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.f_end[i]);
    return out;
}

/// Step size factor from a scaled error norm (1 = on tolerance).
inline double step_factor(double err)
{
    if (err <= 0.0) return 5.0;
    const double f = 0.9 * std::pow(err, -0.2);
    return f < 0.2 ? 0.2 : (f > 5.0 ? 5.0 : f);
}

} // namespace neumann
