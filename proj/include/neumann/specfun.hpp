#pragma once

// Bessel functions of the first kind J_n for integer order, their
// derivatives and the positive zeros of J_n and J_n'.
//
// Small arguments use the ascending series. Otherwise J_n is obtained by
// Miller's backward recurrence normalised with J_0 + 2 sum J_2k = 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace neumann {

inline constexpr int bessel_max_order = 200;
inline constexpr int bessel_max_rank = 200;
inline constexpr double bessel_max_argument = 2000.0;

struct BesselZero {
    int n = 0;
    int m = 0;
    double value = 0.0;
};

namespace detail {

inline void check_bessel_args(int n, double x)
{
    if (!(x >= 0.0)) throw std::domain_error("bessel: negative or NaN argument");
    if (n < 0 || n > bessel_max_order + 1 || x > bessel_max_argument)
        throw std::out_of_range("bessel: order or argument outside supported range");
}

inline double bessel_series(int n, double x)
{
    const double h = 0.5 * x;
    // (x/2)^n / n!
    double term = 1.0;
    for (int i = 1; i <= n; ++i) term *= h / i;
    if (term == 0.0) return 0.0;
    const double q = -h * h;
    double sum = term;
    for (int k = 1; k < 300; ++k) {
        term *= q / (double(k) * double(n + k));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

inline bool use_series(int n, double x)
{
    return x <= 4.0 || 0.25 * x * x < 0.5 * (n + 1);
}

// J_{lo}, ..., J_{lo+2} by backward recurrence (lo >= 0).
inline std::array<double, 3> bessel_miller(int lo, double x)
{
    const double big = std::max(double(lo + 2), x);
    int start = int(big + 20.0 + 12.0 * std::cbrt(big));
    if (start % 2) ++start;

    std::array<double, 3> out{};
    double jp1 = 0.0;   // J_{k+1}
    double jk = 1e-30;  // J_k, k = start
    double even_sum = 0.0;
    const double two_over_x = 2.0 / x;
    for (int k = start; k >= 0; --k) {
        if (k >= lo && k <= lo + 2) out[k - lo] = jk;
        if (k % 2 == 0) even_sum += (k == 0 ? jk : 2.0 * jk);
        if (k == 0) break;
        const double jm1 = k * two_over_x * jk - jp1;
        jp1 = jk;
        jk = jm1;
        if (std::abs(jk) > 1e200) {
            jk *= 1e-200;
            jp1 *= 1e-200;
            even_sum *= 1e-200;
            for (double& v : out) v *= 1e-200;
        }
    }
    for (double& v : out) v /= even_sum;
    return out;
}

} // namespace detail

/// J_n(x) for integer n in [0, 200] and 0 <= x <= 2000.
inline double bessel_j(int n, double x)
{
    detail::check_bessel_args(n, x);
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    if (detail::use_series(n, x)) return detail::bessel_series(n, x);
    return detail::bessel_miller(n, x)[0];
}

/// (J_{n-1}, J_n, J_{n+1}) with J_{-1} = -J_1.
inline std::array<double, 3> bessel_j_triplet(int n, double x)
{
    detail::check_bessel_args(n, x);
    if (x == 0.0) return {n == 1 ? 1.0 : 0.0, n == 0 ? 1.0 : 0.0, 0.0};
    if (n == 0) {
        std::array<double, 3> r;
        if (detail::use_series(1, x)) {
            r = {0.0, detail::bessel_series(0, x), detail::bessel_series(1, x)};
        } else {
            const auto w = detail::bessel_miller(0, x);
            r = {0.0, w[0], w[1]};
        }
        r[0] = -r[2];
        return r;
    }
    if (detail::use_series(n - 1, x))
        return {detail::bessel_series(n - 1, x), detail::bessel_series(n, x), detail::bessel_series(n + 1, x)};
    return detail::bessel_miller(n - 1, x);
}

inline double bessel_j_prime(int n, double x)
{
    const auto t = bessel_j_triplet(n, x);
    if (n == 0) return -t[2];
    return 0.5 * (t[0] - t[2]);
}

/// Lower bound sqrt(n^2 + pi^2 (m - 1/4)^2) for j_{n,m}.
inline double mccann_bound(int n, int m)
{
    const double a = pi * (m - 0.25);
    return std::sqrt(double(n) * n + a * a);
}

namespace detail {

enum class ZeroKind { value, derivative };

inline double bessel_target(ZeroKind kind, int n, double x)
{
    return kind == ZeroKind::value ? bessel_j(n, x) : bessel_j_prime(n, x);
}

// Derivative of the target, used for Newton polishing.
inline double bessel_target_slope(ZeroKind kind, int n, double x)
{
    const auto t = bessel_j_triplet(n, x);
    const double jp = n == 0 ? -t[2] : 0.5 * (t[0] - t[2]);
    if (kind == ZeroKind::value) return jp;
    return -jp / x - (1.0 - double(n) * n / (x * x)) * t[1];
}

inline double refine_zero(ZeroKind kind, int n, double lo, double hi)
{
    double flo = bessel_target(kind, n, lo);
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_target(kind, n, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // Newton from the bracket midpoint; the zero is simple so this converges
    // quadratically. Stay inside the bracket.
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const double f = bessel_target(kind, n, x);
        const double d = bessel_target_slope(kind, n, x);
        if (d == 0.0) break;
        const double nx = x - f / d;
        if (nx < lo - 1e-9 * hi || nx > hi + 1e-9 * hi) break;
        const double step = std::abs(nx - x);
        x = nx;
        if (step < 1e-15 * x) break;
    }
    return x;
}

// Scans for the first `count` zeros. The scan starts below the first zero
// and uses a step shorter than the zero spacing; each interval sign change
// yields exactly one zero.
inline std::vector<double> scan_zeros(ZeroKind kind, int n, int count)
{
    double x0 = kind == ZeroKind::value ? 0.999 * mccann_bound(n, 1)
                                        : (n == 0 ? 0.1 : 0.5 * n);
    if (x0 <= 0.0) x0 = 0.1;
    const double limit = 2.0 * (n + pi * (count + 1)) + 10.0;
    const double step = 1.0;
    std::vector<double> out;
    out.reserve(count);
    double a = x0;
    double fa = bessel_target(kind, n, a);
    if (fa == 0.0) throw std::runtime_error("bessel zero scan started on a zero");
    while (int(out.size()) < count) {
        const double b = a + step;
        if (b > limit || b > bessel_max_argument)
            throw std::runtime_error("bessel zero scan exceeded its upper bound for n=" + std::to_string(n));
        double fb = bessel_target(kind, n, b);
        if (fb == 0.0) fb = bessel_target(kind, n, b + 1e-9);
        if ((fa < 0.0) != (fb < 0.0)) out.push_back(refine_zero(kind, n, a, b));
        a = b;
        fa = fb;
    }
    return out;
}

inline double cached_zero(ZeroKind kind, int n, int m)
{
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& v = cache[{int(kind), n}];
    if (int(v.size()) < m) v = scan_zeros(kind, n, std::max(m, std::min(bessel_max_rank, 2 * int(v.size()))));
    return v[m - 1];
}

inline void check_zero_args(int n, int m)
{
    if (n < 0 || n > bessel_max_order) throw std::out_of_range("bessel zero: order outside [0, 200]");
    if (m < 1 || m > bessel_max_rank) throw std::out_of_range("bessel zero: rank outside [1, 200]");
}

} // namespace detail

/// m-th positive zero of J_n.
inline BesselZero bessel_zero(int n, int m)
{
    detail::check_zero_args(n, m);
    return {n, m, detail::cached_zero(detail::ZeroKind::value, n, m)};
}

/// m-th positive zero of J_n'. For n = 0 the zero at the origin is not counted.
inline BesselZero bessel_prime_zero(int n, int m)
{
    detail::check_zero_args(n, m);
    return {n, m, detail::cached_zero(detail::ZeroKind::derivative, n, m)};
}

/// All positive zeros of J_n below x_max, in increasing order.
inline std::vector<double> bessel_zeros_below(int n, double x_max)
{
    std::vector<double> out;
    for (int m = 1; m <= bessel_max_rank; ++m) {
        if (mccann_bound(n, m) >= x_max) break;
        const double z = bessel_zero(n, m).value;
        if (z >= x_max) break;
        out.push_back(z);
    }
    return out;
}

} // namespace neumann
