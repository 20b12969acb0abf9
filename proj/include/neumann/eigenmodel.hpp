#pragma once

// Domains with their Dirichlet/Neumann boundary split, and the explicit
// Laplace eigenfunctions on rectangles and on the unit disk.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "specfun.hpp"

namespace neumann {

enum class BoundaryCondition { dirichlet, neumann };
enum class BoundaryPart { interior, dirichlet, neumann, outside };

inline const char* to_string(BoundaryPart p)
{
    switch (p) {
    case BoundaryPart::interior: return "interior";
    case BoundaryPart::dirichlet: return "dirichlet";
    case BoundaryPart::neumann: return "neumann";
    case BoundaryPart::outside: return "outside";
    }
    return "?";
}

/// Rectangle (0,a) x (0,b) with Dirichlet boundary, or the unit disk with a
/// Dirichlet or Neumann boundary.
class Domain {
public:
    enum class Kind { rectangle, disk };

    static Domain rectangle(double a, double b)
    {
        if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
        Domain d;
        d.kind_ = Kind::rectangle;
        d.a_ = a;
        d.b_ = b;
        return d;
    }

    static Domain disk(BoundaryCondition bc = BoundaryCondition::dirichlet)
    {
        Domain d;
        d.kind_ = Kind::disk;
        d.bc_ = bc;
        return d;
    }

    Kind kind() const { return kind_; }
    bool is_rectangle() const { return kind_ == Kind::rectangle; }
    bool is_disk() const { return kind_ == Kind::disk; }
    bool is_square() const { return is_rectangle() && a_ == b_; }
    double a() const { return a_; }
    double b() const { return b_; }
    BoundaryCondition bc() const { return bc_; }
    bool has_dirichlet() const { return bc_ == BoundaryCondition::dirichlet; }
    bool has_neumann() const { return bc_ == BoundaryCondition::neumann; }

    double area() const { return is_rectangle() ? a_ * b_ : pi; }
    double perimeter() const { return is_rectangle() ? 2.0 * (a_ + b_) : 2.0 * pi; }
    double diameter() const { return is_rectangle() ? std::hypot(a_, b_) : 2.0; }
    Point lower_corner() const { return is_rectangle() ? Point{0.0, 0.0} : Point{-1.0, -1.0}; }
    Point upper_corner() const { return is_rectangle() ? Point{a_, b_} : Point{1.0, 1.0}; }

    /// Negative inside, zero on the boundary, positive outside.
    double signed_distance(const Point& p) const
    {
        if (is_disk()) return norm(p) - 1.0;
        const double dx = std::max(-p.x, p.x - a_);
        const double dy = std::max(-p.y, p.y - b_);
        if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
        return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
    }

    bool contains(const Point& p, double tol = 0.0) const { return signed_distance(p) <= tol; }

    BoundaryPart boundary_part(const Point& p, double tol = 1e-12) const
    {
        const double d = signed_distance(p);
        if (d < -tol) return BoundaryPart::interior;
        if (d > tol) return BoundaryPart::outside;
        return has_dirichlet() ? BoundaryPart::dirichlet : BoundaryPart::neumann;
    }

    Point project_to_boundary(const Point& p) const
    {
        if (is_disk()) {
            const double r = norm(p);
            return r > 0.0 ? p / r : Point{1.0, 0.0};
        }
        Point q{std::clamp(p.x, 0.0, a_), std::clamp(p.y, 0.0, b_)};
        if (signed_distance(p) < 0.0) {
            const double d[4] = {q.x, a_ - q.x, q.y, b_ - q.y};
            const int i = int(std::min_element(d, d + 4) - d);
            if (i == 0) q.x = 0.0;
            if (i == 1) q.x = a_;
            if (i == 2) q.y = 0.0;
            if (i == 3) q.y = b_;
        }
        return q;
    }

    Vec2 outward_normal(const Point& p) const
    {
        if (is_disk()) return normalized(p);
        const Point q = project_to_boundary(p);
        const double d[4] = {q.x, a_ - q.x, q.y, b_ - q.y};
        const int i = int(std::min_element(d, d + 4) - d);
        static constexpr Vec2 normals[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        return normals[i];
    }

    /// Counterclockwise boundary coordinate in [0, perimeter) of the nearest
    /// boundary point; starts at the origin corner (rectangle) or at (1,0).
    double boundary_param(const Point& p) const
    {
        if (is_disk()) {
            double t = std::atan2(p.y, p.x);
            if (t < 0.0) t += 2.0 * pi;
            return t;
        }
        const Point q = project_to_boundary(p);
        const double d[4] = {q.y, a_ - q.x, b_ - q.y, q.x};
        const int i = int(std::min_element(d, d + 4) - d);
        switch (i) {
        case 0: return q.x;
        case 1: return a_ + q.y;
        case 2: return a_ + b_ + (a_ - q.x);
        default: return std::fmod(2.0 * a_ + b_ + (b_ - q.y), perimeter());
        }
    }

    Point boundary_point(double t) const
    {
        t = std::fmod(t, perimeter());
        if (t < 0.0) t += perimeter();
        if (is_disk()) return unit_vector(t);
        if (t <= a_) return {t, 0.0};
        t -= a_;
        if (t <= b_) return {a_, t};
        t -= b_;
        if (t <= a_) return {a_ - t, b_};
        t -= a_;
        return {0.0, b_ - t};
    }

    std::string describe() const
    {
        std::ostringstream os;
        if (is_rectangle()) os << "rect:" << a_ << ',' << b_;
        else os << (has_dirichlet() ? "disk" : "disk-neumann");
        return os.str();
    }

private:
    Kind kind_ = Kind::rectangle;
    double a_ = 1.0;
    double b_ = 1.0;
    BoundaryCondition bc_ = BoundaryCondition::dirichlet;
};

enum class Parity { cosine, sine };

inline const char* to_string(Parity p) { return p == Parity::cosine ? "cos" : "sin"; }

struct ModeSpec {
    Domain domain = Domain::rectangle(1.0, 1.0);
    int n = 1;
    int m = 1;
    Parity parity = Parity::cosine;
    std::optional<double> superposition_angle;

    void validate() const
    {
        if (m < 1) throw std::invalid_argument("mode index m must be positive");
        if (domain.is_rectangle()) {
            if (n < 1) throw std::invalid_argument("rectangle modes need n >= 1");
            if (parity != Parity::cosine) throw std::invalid_argument("parity applies to disk modes only");
            if (superposition_angle) {
                if (!domain.is_square()) throw std::invalid_argument("superposition requires a square");
                if (n == m) throw std::invalid_argument("superposition requires n != m");
                const double t = *superposition_angle;
                if (!(t >= 0.0 && t <= pi / 2)) throw std::invalid_argument("superposition angle outside [0, pi/2]");
            }
        } else {
            if (n < 0) throw std::invalid_argument("disk modes need n >= 0");
            if (parity == Parity::sine && n == 0) throw std::invalid_argument("sine parity requires n >= 1");
            if (superposition_angle) throw std::invalid_argument("superposition requires a square");
            if (n > bessel_max_order || m > bessel_max_rank) throw std::out_of_range("disk mode index out of range");
        }
    }

    std::string describe() const
    {
        std::ostringstream os;
        os << domain.describe() << " n=" << n << " m=" << m;
        if (domain.is_disk() && n > 0) os << ' ' << to_string(parity);
        if (superposition_angle) os << " alpha=" << *superposition_angle;
        return os.str();
    }
};

/// Value, gradient and Hessian at a point.
struct Jet {
    double value = 0.0;
    Vec2 grad;
    Sym2 hess;
};

namespace detail {

// u = P(w) T(|w|^2) with w = z k/2, P = Re or Im of w^n/n!, and
// T(s) = sum_j (-1)^j s^j / (j! (n+1)...(n+j)). This is J_n(k rho) cos/sin(n theta)
// written without the polar singularity at the origin.
inline Jet disk_series_jet(int n, double k, Parity parity, const Point& z)
{
    using C = std::complex<double>;
    const double h = 0.5 * k;
    const C w(h * z.x, h * z.y);
    // q[i] = w^(n-2+i) / (n-2+i)!, zero for negative powers.
    C q[3] = {0.0, 0.0, 0.0};
    C acc = 1.0;
    for (int j = 0; j <= n; ++j) {
        if (j > 0) acc *= w / double(j);
        const int slot = j - (n - 2);
        if (slot >= 0 && slot < 3) q[slot] = acc;
    }
    const C f = q[2], f1 = q[1], f0 = q[0];
    double P, Px, Py, Pxx, Pxy, Pyy;
    if (parity == Parity::cosine) {
        P = f.real();
        Px = f1.real(); Py = -f1.imag();
        Pxx = f0.real(); Pxy = -f0.imag(); Pyy = -f0.real();
    } else {
        P = f.imag();
        Px = f1.imag(); Py = f1.real();
        Pxx = f0.imag(); Pxy = f0.real(); Pyy = -f0.imag();
    }
    const double s = std::norm(w);
    double T = 0.0, T1 = 0.0, T2 = 0.0;
    double a = 1.0, sp = 1.0;  // a_j and s^j
    for (int j = 0; j < 40; ++j) {
        if (j > 0) {
            a *= -1.0 / (double(j) * double(n + j));
            sp *= s;
        }
        T += a * sp;
        if (j >= 1) T1 += j * a * (s > 0.0 ? sp / s : (j == 1 ? 1.0 : 0.0));
        if (j >= 2) T2 += j * (j - 1) * a * (s > 0.0 ? sp / (s * s) : (j == 2 ? 1.0 : 0.0));
        if (std::abs(a * sp) < 1e-18 * std::abs(T) && j > 2) break;
    }
    const Vec2 wv{w.real(), w.imag()};
    const Vec2 gP{Px, Py};
    Jet out;
    out.value = P * T;
    const Vec2 gw = T * gP + (2.0 * P * T1) * wv;
    const Sym2 HP{Pxx, Pxy, Pyy};
    const Sym2 Hw = T * HP + (4.0 * T1) * sym_outer(gP, wv) +
                    P * (Sym2{2.0 * T1, 0.0, 2.0 * T1} + (4.0 * T2) * sym_outer(wv, wv));
    out.grad = h * gw;
    out.hess = (h * h) * Hw;
    return out;
}

inline Jet disk_polar_jet(int n, double k, Parity parity, const Point& z)
{
    const double rho = norm(z);
    const double th = std::atan2(z.y, z.x);
    const double x = k * rho;
    const auto t = bessel_j_triplet(n, x);
    const double J = t[1];
    const double Jp = n == 0 ? -t[2] : 0.5 * (t[0] - t[2]);
    const double Jpp = -Jp / x - (1.0 - double(n) * n / (x * x)) * J;
    const double c = std::cos(n * th), s = std::sin(n * th);
    const double A = parity == Parity::cosine ? c : s;
    const double Ap = parity == Parity::cosine ? -n * s : n * c;

    const double u = J * A;
    const double ur = k * Jp * A;
    const double ut = J * Ap;
    const double urr = k * k * Jpp * A;
    const double utt = -double(n) * n * u;
    const double urt = k * Jp * Ap;

    const Vec2 er{std::cos(th), std::sin(th)};
    const Vec2 et = perp(er);
    Jet out;
    out.value = u;
    out.grad = ur * er + (ut / rho) * et;
    out.hess = urr * sym_outer(er, er) + (ur / rho + utt / (rho * rho)) * sym_outer(et, et) +
               (2.0 * (urt / rho - ut / (rho * rho))) * sym_outer(er, et);
    return out;
}

inline Jet sine_product_jet(double alpha, double beta, const Point& z)
{
    const double sx = std::sin(alpha * z.x), cx = std::cos(alpha * z.x);
    const double sy = std::sin(beta * z.y), cy = std::cos(beta * z.y);
    Jet j;
    j.value = sx * sy;
    j.grad = {alpha * cx * sy, beta * sx * cy};
    j.hess = {-alpha * alpha * sx * sy, alpha * beta * cx * cy, -beta * beta * sx * sy};
    return j;
}

} // namespace detail

/// A closed-form eigenfunction normalised to sup-norm about 1.
class Eigenfunction {
public:
    explicit Eigenfunction(ModeSpec mode) : mode_(std::move(mode))
    {
        mode_.validate();
        const Domain& d = mode_.domain;
        if (d.is_rectangle()) {
            alpha_ = pi * mode_.n / d.a();
            beta_ = pi * mode_.m / d.b();
            lambda_ = alpha_ * alpha_ + beta_ * beta_;
            if (mode_.superposition_angle) {
                // u_{m,n} frequencies on the square
                alpha2_ = pi * mode_.m / d.a();
                beta2_ = pi * mode_.n / d.b();
                ca_ = std::cos(*mode_.superposition_angle);
                sa_ = std::sin(*mode_.superposition_angle);
                scale_ = 1.0;
                scale_ = 1.0 / sampled_sup();
            }
        } else {
            k_ = d.has_dirichlet() ? bessel_zero(mode_.n, mode_.m).value
                                   : bessel_prime_zero(mode_.n, mode_.m).value;
            lambda_ = k_ * k_;
            if (mode_.n > 0) scale_ = 1.0 / std::abs(bessel_j(mode_.n, bessel_prime_zero(mode_.n, 1).value));
        }
    }

    static Eigenfunction rectangle(double a, double b, int n, int m)
    {
        return Eigenfunction(ModeSpec{Domain::rectangle(a, b), n, m});
    }

    static Eigenfunction disk(int n, int m, Parity parity = Parity::cosine,
                              BoundaryCondition bc = BoundaryCondition::dirichlet)
    {
        return Eigenfunction(ModeSpec{Domain::disk(bc), n, m, parity});
    }

    const ModeSpec& mode() const { return mode_; }
    const Domain& domain() const { return mode_.domain; }
    double lambda() const { return lambda_; }
    double frequency() const { return std::sqrt(lambda_); }
    /// Sup-norm of the normalised function (1 up to sampling error).
    double amplitude() const { return 1.0; }
    /// The Bessel zero scaling a disk mode (0 for rectangles).
    double radial_wavenumber() const { return k_; }

    /// Value, gradient and Hessian. Evaluates the analytic continuation,
    /// so points slightly outside the domain are accepted.
    Jet jet(const Point& z) const
    {
        Jet j;
        if (mode_.domain.is_rectangle()) {
            j = detail::sine_product_jet(alpha_, beta_, z);
            if (mode_.superposition_angle) {
                const Jet o = detail::sine_product_jet(alpha2_, beta2_, z);
                j.value = ca_ * j.value + sa_ * o.value;
                j.grad = ca_ * j.grad + sa_ * o.grad;
                j.hess = ca_ * j.hess + sa_ * o.hess;
            }
        } else if (k_ * norm(z) < 0.5) {
            j = detail::disk_series_jet(mode_.n, k_, mode_.parity, z);
        } else {
            j = detail::disk_polar_jet(mode_.n, k_, mode_.parity, z);
        }
        if (scale_ != 1.0) {
            j.value *= scale_;
            j.grad = scale_ * j.grad;
            j.hess = scale_ * j.hess;
        }
        return j;
    }

    double value_unchecked(const Point& z) const { return jet(z).value; }

    double value(const Point& z) const { return checked(z).value; }
    Vec2 gradient(const Point& z) const { return checked(z).grad; }
    Sym2 hessian(const Point& z) const { return checked(z).hess; }

private:
    Jet checked(const Point& z) const
    {
        if (!mode_.domain.contains(z, 1e-9)) throw std::domain_error("point outside the closed domain");
        return jet(z);
    }

    double sampled_sup() const
    {
        const int N = std::max(64, int(16.0 * frequency()));
        const Domain& d = mode_.domain;
        double best = 0.0;
        Point arg;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j) {
                const Point p{d.a() * i / N, d.b() * j / N};
                const double v = std::abs(jet(p).value);
                if (v > best) { best = v; arg = p; }
            }
        // Newton polish on the gradient from the best sample.
        for (int it = 0; it < 20; ++it) {
            const Jet j = jet(arg);
            Vec2 step;
            if (!solve(j.hess, j.grad, step)) break;
            const Point next = arg - step;
            if (!d.contains(next) || distance(next, arg) > d.diameter() / N) break;
            arg = next;
        }
        return std::max(best, std::abs(jet(arg).value));
    }

    ModeSpec mode_;
    double lambda_ = 0.0;
    double alpha_ = 0.0, beta_ = 0.0, alpha2_ = 0.0, beta2_ = 0.0;
    double ca_ = 1.0, sa_ = 0.0;
    double k_ = 0.0;
    double scale_ = 1.0;
};

struct ModeEntry {
    int rank = 0;
    ModeSpec mode;
    double lambda = 0.0;
};

namespace detail {

inline std::vector<ModeEntry> collect_modes(const Domain& domain, double lambda_max)
{
    std::vector<ModeEntry> out;
    const double kmax = std::sqrt(lambda_max);
    if (domain.is_rectangle()) {
        const int nmax = int(kmax * domain.a() / pi) + 1;
        for (int n = 1; n <= nmax; ++n) {
            const double rest = lambda_max - std::pow(pi * n / domain.a(), 2);
            if (rest <= 0.0) break;
            const int mmax = int(std::sqrt(rest) * domain.b() / pi) + 1;
            for (int m = 1; m <= mmax; ++m) {
                const double lam = std::pow(pi * n / domain.a(), 2) + std::pow(pi * m / domain.b(), 2);
                if (lam <= lambda_max) out.push_back({0, ModeSpec{domain, n, m}, lam});
            }
        }
        return out;
    }
    const bool dir = domain.has_dirichlet();
    for (int n = 0; n <= bessel_max_order; ++n) {
        if ((dir ? mccann_bound(n, 1) : double(n)) > kmax) break;
        for (int m = 1; m <= bessel_max_rank; ++m) {
            if (dir && mccann_bound(n, m) > kmax) break;
            const double z = dir ? bessel_zero(n, m).value : bessel_prime_zero(n, m).value;
            if (z > kmax) break;
            out.push_back({0, ModeSpec{domain, n, m, Parity::cosine}, z * z});
            if (n > 0) out.push_back({0, ModeSpec{domain, n, m, Parity::sine}, z * z});
        }
    }
    return out;
}

} // namespace detail

/// First K eigenvalues in nondecreasing order, counted with multiplicity.
inline std::vector<ModeEntry> enumerate_modes(const Domain& domain, int K)
{
    if (K < 1 || K > 10000) throw std::out_of_range("enumerate_modes: K outside [1, 10000]");
    // Weyl estimate with the boundary term, solved for lambda.
    const double A = domain.area() / (4.0 * pi);
    const double L = domain.perimeter() / (4.0 * pi);
    double sq = (L + std::sqrt(L * L + 4.0 * A * K)) / (2.0 * A);
    std::vector<ModeEntry> modes;
    for (int attempt = 0; attempt < 60; ++attempt) {
        modes = detail::collect_modes(domain, sq * sq * 1.0001);
        if (int(modes.size()) >= K) break;
        sq *= 1.02;
    }
    if (int(modes.size()) < K) throw std::runtime_error("enumerate_modes: could not collect enough modes");
    std::stable_sort(modes.begin(), modes.end(), [](const ModeEntry& x, const ModeEntry& y) {
        if (x.lambda != y.lambda) return x.lambda < y.lambda;
        if (x.mode.n != y.mode.n) return x.mode.n < y.mode.n;
        if (x.mode.m != y.mode.m) return x.mode.m < y.mode.m;
        return x.mode.parity == Parity::cosine && y.mode.parity == Parity::sine;
    });
    modes.resize(K);
    for (int i = 0; i < K; ++i) modes[i].rank = i + 1;
    return modes;
}

} // namespace neumann
