#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "neumann/specfun.hpp"

using namespace neumann;

namespace {

// Ascending series in long double, independent of the library evaluator.
long double series_j(int n, long double x)
{
    long double term = 1.0L;
    for (int k = 1; k <= n; ++k) term *= x / (2.0L * k);
    long double sum = term;
    const long double q = -x * x / 4.0L;
    for (int k = 1; k < 60; ++k) {
        term *= q / (k * (long double)(k + n));
        sum += term;
    }
    return sum;
}

long double series_j_prime(int n, long double x)
{
    if (n == 0) return -series_j(1, x);
    return 0.5L * (series_j(n - 1, x) - series_j(n + 1, x));
}

template <class G>
double bisect(G g, double lo, double hi)
{
    long double a = lo, b = hi;
    const bool neg = g(a) < 0;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (a + b);
        ((g(mid) < 0) == neg ? a : b) = mid;
    }
    return double(0.5L * (a + b));
}

} // namespace

TEST(BesselJ, ValuesAtZero)
{
    EXPECT_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_EQ(bessel_j(1, 0.0), 0.0);
    EXPECT_EQ(bessel_j(7, 0.0), 0.0);
    EXPECT_EQ(bessel_j_prime(0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(bessel_j_prime(1, 0.0), 0.5);
}

TEST(BesselJ, ZeroOfJ0FromOracle)
{
    const double z = bessel_zero(0, 1).value;
    EXPECT_LT(std::abs(bessel_j(0, z)), 1e-11);
    const double oracle = bisect([](long double x) { return series_j(0, x); }, 2.0, 3.0);
    EXPECT_NEAR(z, oracle, 1e-10);
    EXPECT_NEAR(z, 2.404825557695773, 1e-10);
}

TEST(BesselJ, RecurrenceResidual)
{
    EXPECT_LT(std::abs(bessel_j(0, 1.0) + bessel_j(2, 1.0) - 2.0 * bessel_j(1, 1.0)), 1e-12);
    for (int n = 1; n <= 40; n += 3)
        for (double x = 0.1; x <= 50.0; x += 0.37) {
            const double r = bessel_j(n - 1, x) + bessel_j(n + 1, x) - 2.0 * n / x * bessel_j(n, x);
            ASSERT_LT(std::abs(r), 1e-10) << "n=" << n << " x=" << x;
        }
}

TEST(BesselJ, AgreesWithSeriesOracle)
{
    for (int n = 0; n <= 5; ++n)
        for (double x = 0.0; x <= 10.0; x += 0.125) {
            ASSERT_NEAR(bessel_j(n, x), double(series_j(n, x)), 1e-12) << "n=" << n << " x=" << x;
            ASSERT_NEAR(bessel_j_prime(n, x), double(series_j_prime(n, x)), 1e-12) << "n=" << n << " x=" << x;
        }
}

TEST(BesselJ, AgreesWithStandardLibrary)
{
    for (int n : {0, 1, 2, 7, 20, 50})
        for (double x : {0.3, 1.0, 4.5, 12.0, 33.3, 60.0, 99.5}) {
            const double ref = std::cyl_bessel_j(double(n), x);
            ASSERT_NEAR(bessel_j(n, x), ref, 1e-12) << "n=" << n << " x=" << x;
        }
}

TEST(BesselJ, DerivativeIdentity)
{
    for (double x : {0.5, 1.0, 2.0}) EXPECT_NEAR(bessel_j_prime(0, x) + bessel_j(1, x), 0.0, 1e-15);
}

TEST(BesselJ, RejectsBadArguments)
{
    EXPECT_THROW(bessel_j(0, -1.0), std::domain_error);
    EXPECT_THROW(bessel_j(0, std::nan("")), std::domain_error);
    EXPECT_THROW(bessel_j(-1, 1.0), std::out_of_range);
    EXPECT_THROW(bessel_j(bessel_max_order + 2, 1.0), std::out_of_range);
    EXPECT_THROW(bessel_j_prime(0, -0.5), std::domain_error);
}

TEST(BesselZeros, McCannBound)
{
    EXPECT_NEAR(mccann_bound(0, 1), pi * 0.75, 1e-15);
    EXPECT_NEAR(mccann_bound(10, 1), std::sqrt(100.0 + pi * pi * 0.5625), 1e-12);
    EXPECT_GT(bessel_zero(5, 3).value, std::sqrt(25.0 + pi * pi * 2.75 * 2.75));
    for (int n = 0; n <= 20; ++n)
        for (int m = 1; m <= 20; ++m) ASSERT_GT(bessel_zero(n, m).value, mccann_bound(n, m)) << n << "," << m;
}

TEST(BesselZeros, ResidualAndMonotonicity)
{
    for (int n = 0; n <= 20; ++n)
        for (int m = 1; m <= 20; ++m) {
            const BesselZero z = bessel_zero(n, m);
            EXPECT_EQ(z.n, n);
            EXPECT_EQ(z.m, m);
            ASSERT_LT(std::abs(bessel_j(n, z.value)), 1e-11);
            ASSERT_LT(std::abs(bessel_j_prime(n, bessel_prime_zero(n, m).value)), 1e-11);
            if (m > 1) ASSERT_GT(z.value, bessel_zero(n, m - 1).value);
            if (n > 0) ASSERT_GT(z.value, bessel_zero(n - 1, m).value);
        }
}

TEST(BesselZeros, NoZeroSkipped)
{
    // Count sign changes of an independent evaluator on a fine grid.
    for (int n : {0, 3, 11}) {
        const double top = bessel_zero(n, 10).value;
        int changes = 0;
        double prev = std::cyl_bessel_j(double(n), 1e-3);
        for (double x = 1e-3 + 0.01; x < top - 1e-6; x += 0.01) {
            const double v = std::cyl_bessel_j(double(n), x);
            if ((v < 0) != (prev < 0) && v != 0.0) ++changes;
            prev = v;
        }
        EXPECT_EQ(changes, 9) << "n=" << n;
    }
}

TEST(BesselZeros, PrimeZeros)
{
    EXPECT_DOUBLE_EQ(bessel_prime_zero(0, 1).value, bessel_zero(1, 1).value);
    const double oracle = bisect([](long double x) { return series_j_prime(1, x); }, 1.5, 2.2);
    EXPECT_NEAR(bessel_prime_zero(1, 1).value, oracle, 1e-12);
    EXPECT_NEAR(bessel_prime_zero(1, 1).value, 1.8411837813406593, 1e-9);
}

TEST(BesselZeros, Interlacing)
{
    EXPECT_LT(bessel_prime_zero(1, 1).value, bessel_zero(1, 1).value);
    EXPECT_LT(bessel_zero(1, 1).value, bessel_prime_zero(1, 2).value);
    for (int n = 1; n <= 5; ++n)
        for (int m = 1; m <= 5; ++m) {
            EXPECT_LT(bessel_prime_zero(n, m).value, bessel_zero(n, m).value);
            EXPECT_LT(bessel_zero(n, m).value, bessel_prime_zero(n, m + 1).value);
        }
    for (int m = 1; m <= 5; ++m) {
        EXPECT_LT(bessel_zero(0, m).value, bessel_prime_zero(0, m).value);
        EXPECT_LT(bessel_prime_zero(0, m).value, bessel_zero(0, m + 1).value);
    }
}

TEST(BesselZeros, ZerosBelow)
{
    const auto z = bessel_zeros_below(2, 20.0);
    ASSERT_FALSE(z.empty());
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_DOUBLE_EQ(z[i], bessel_zero(2, int(i) + 1).value);
    EXPECT_GT(bessel_zero(2, int(z.size()) + 1).value, 20.0);
}

TEST(BesselZeros, RejectsBadRank)
{
    EXPECT_THROW(bessel_zero(0, 0), std::out_of_range);
    EXPECT_THROW(bessel_zero(-1, 1), std::out_of_range);
    EXPECT_THROW(bessel_prime_zero(0, bessel_max_rank + 1), std::out_of_range);
}
