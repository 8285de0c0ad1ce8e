#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cqnls/errors.hpp"

namespace cqnls {

using Complex = std::complex<double>;

/// How spatial derivatives of a field are formed.
///
/// Stencil is the 4th-order finite-difference scheme; it makes no assumption
/// about the field at r_max and is the right choice for non-decaying samples
/// such as the ground state. Spectral differentiates the sine series that the
/// linear propagator diagonalizes, so functionals built on it are the ones the
/// discrete dynamics actually conserve.
enum class Derivative { Stencil, Spectral };

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// FFTW plans for DST-I on n points and DCT-I on n + 2 points.
/// Execution uses the new-array interface, which FFTW documents as thread-safe.
class SineTransforms {
public:
    explicit SineTransforms(std::size_t n) : n_(n) {
        std::vector<double> a(n + 2), b(n + 2);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(fftw_planner_mutex());
        dst_ = fftw_plan_r2r_1d(static_cast<int>(n), a.data(), b.data(), FFTW_RODFT00, flags);
        dct_ = fftw_plan_r2r_1d(static_cast<int>(n + 2), a.data(), b.data(), FFTW_REDFT00, flags);
    }
    SineTransforms(const SineTransforms&) = delete;
    SineTransforms& operator=(const SineTransforms&) = delete;
    ~SineTransforms() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(dst_);
        fftw_destroy_plan(dct_);
    }

    // out_m = 2 sum_j in_j sin(pi (j+1)(m+1) / (n+1)), both of length n.
    void dst1(std::span<const double> in, std::span<double> out) const {
        std::vector<double> buf(in.begin(), in.end());
        fftw_execute_r2r(dst_, buf.data(), out.data());
    }

    // out_j = in_0 + (-1)^j in_{n+1} + 2 sum_{m=1}^{n} in_m cos(pi m j / (n+1)), length n + 2.
    void dct1(std::span<const double> in, std::span<double> out) const {
        std::vector<double> buf(in.begin(), in.end());
        fftw_execute_r2r(dct_, buf.data(), out.data());
    }

    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_plan dst_ = nullptr;
    fftw_plan dct_ = nullptr;
};

struct GridData {
    double r_max;
    std::size_t n;
    double dr;
    std::vector<double> nodes;
    std::vector<double> wavenumbers;
    SineTransforms transforms;

    GridData(double r_max_, std::size_t n_)
        : r_max(r_max_), n(n_), dr(r_max_ / static_cast<double>(n_ + 1)), transforms(n_) {
        nodes.resize(n);
        wavenumbers.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            nodes[j] = static_cast<double>(j + 1) * dr;
            wavenumbers[j] = static_cast<double>(j + 1) * std::numbers::pi / r_max;
        }
    }
};

}  // namespace detail

/**
 * Uniform radial grid r_j = j dr, j = 1..n, dr = r_max / (n + 1).
 *
 * The endpoints r = 0 and r = r_max are not stored: v = r u vanishes there,
 * which is the boundary model of the DST-I and of the trapezoid quadrature.
 * Immutable; copies share the node tables and transform plans.
 */
class RadialGrid {
public:
    static constexpr std::size_t min_points = 16;

    RadialGrid(double r_max, std::size_t n) {
        if (!(r_max > 0.0) || !std::isfinite(r_max)) {
            throw InvalidParameter("grid: r_max must be positive, got " + std::to_string(r_max));
        }
        if (n < min_points) {
            throw InvalidParameter("grid: n must be at least 16, got " + std::to_string(n));
        }
        data_ = std::make_shared<const detail::GridData>(r_max, n);
    }

    double r_max() const noexcept { return data_->r_max; }
    std::size_t size() const noexcept { return data_->n; }
    double dr() const noexcept { return data_->dr; }
    double node(std::size_t j) const { return data_->nodes[j]; }
    std::span<const double> nodes() const noexcept { return data_->nodes; }
    std::span<const double> wavenumbers() const noexcept { return data_->wavenumbers; }
    const detail::SineTransforms& transforms() const noexcept { return data_->transforms; }

    /// Outer radius covered by the node sum: each node carries a cell of width dr.
    double quadrature_edge() const noexcept { return data_->r_max - 0.5 * data_->dr; }

    bool operator==(const RadialGrid& other) const noexcept {
        return data_ == other.data_ || (r_max() == other.r_max() && size() == other.size());
    }

private:
    std::shared_ptr<const detail::GridData> data_;
};

inline RadialGrid make_grid(double r_max, std::size_t n) { return RadialGrid(r_max, n); }

/// Complex radial function sampled on a grid; entry j approximates u(r_{j+1}).
class RadialField {
public:
    explicit RadialField(RadialGrid grid) : grid_(std::move(grid)), values_(grid_.size()) {}

    RadialField(RadialGrid grid, std::vector<Complex> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size()) {
            throw InvalidParameter("field: value count does not match grid size");
        }
    }

    template <class F>
    static RadialField sample(const RadialGrid& grid, F&& f) {
        std::vector<Complex> v(grid.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = Complex(f(grid.node(j)));
        return RadialField(grid, std::move(v));
    }

    const RadialGrid& grid() const noexcept { return grid_; }
    std::span<const Complex> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    const Complex& operator[](std::size_t j) const { return values_[j]; }

    bool is_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](const Complex& z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }

    bool is_real() const {
        return std::all_of(values_.begin(), values_.end(),
                           [](const Complex& z) { return z.imag() == 0.0; });
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& z : values_) m = std::max(m, std::abs(z));
        return m;
    }

    std::vector<double> abs_squared() const {
        std::vector<double> out(values_.size());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::norm(values_[j]);
        return out;
    }

    RadialField real_part() const {
        return map([](const Complex& z) { return Complex(z.real(), 0.0); });
    }
    RadialField imag_part() const {
        return map([](const Complex& z) { return Complex(z.imag(), 0.0); });
    }

    template <class F>
    RadialField map(F&& f) const {
        std::vector<Complex> v(values_.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(values_[j]);
        return RadialField(grid_, std::move(v));
    }

    RadialField& operator+=(const RadialField& o) {
        check_same_grid(o);
        for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
        return *this;
    }
    RadialField& operator-=(const RadialField& o) {
        check_same_grid(o);
        for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
        return *this;
    }
    RadialField& operator*=(Complex a) {
        for (auto& z : values_) z *= a;
        return *this;
    }

    friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
    friend RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
    friend RadialField operator*(Complex s, RadialField a) { return a *= s; }
    friend RadialField operator*(RadialField a, Complex s) { return a *= s; }

private:
    void check_same_grid(const RadialField& o) const {
        if (!(grid_ == o.grid_)) throw InvalidParameter("field: grids differ");
    }

    RadialGrid grid_;
    std::vector<Complex> values_;
};

/// 4 pi sum_j f_j r_j^2 dr: trapezoid for int_{R^3} f dx with zero samples at
/// r = 0 and r = r_max.
inline double integrate_radial(const RadialGrid& grid, std::span<const double> f) {
    if (f.size() != grid.size()) throw InvalidParameter("integrate_radial: length mismatch");
    const auto r = grid.nodes();
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * r[j] * r[j];
    return 4.0 * std::numbers::pi * grid.dr() * s;
}

namespace detail {

inline std::vector<Complex> times_r(const RadialField& u) {
    const auto r = u.grid().nodes();
    std::vector<Complex> v(u.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = r[j] * u[j];
    return v;
}

// Sample of v = r u at 1-based index i in [-1, n]; odd reflection through r = 0.
inline Complex v_at(const std::vector<Complex>& v, long i) {
    if (i > 0) return v[static_cast<std::size_t>(i - 1)];
    if (i == 0) return {};
    return -v[static_cast<std::size_t>(-i - 1)];
}

// Sine coefficients b_m with v_j = sum_m b_m sin(k_m r_j), for each of re / im.
inline void sine_coefficients(const RadialGrid& grid, const std::vector<Complex>& v,
                              std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = grid.size();
    std::vector<double> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = v[j].real();
    re.resize(n);
    grid.transforms().dst1(a, re);
    for (std::size_t j = 0; j < n; ++j) b[j] = v[j].imag();
    im.resize(n);
    grid.transforms().dst1(b, im);
    const double scale = 1.0 / static_cast<double>(n + 1);
    for (std::size_t m = 0; m < n; ++m) {
        re[m] *= scale;
        im[m] *= scale;
    }
}

// Inverse of sine_coefficients.
inline std::vector<Complex> sine_synthesis(const RadialGrid& grid, std::span<const double> re,
                                           std::span<const double> im) {
    const std::size_t n = grid.size();
    std::vector<double> a(n), b(n);
    grid.transforms().dst1(re, a);
    grid.transforms().dst1(im, b);
    std::vector<Complex> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = Complex(0.5 * a[j], 0.5 * b[j]);
    return v;
}

// sum_m c_m cos(k_m r_j) at the nodes.
inline std::vector<double> cosine_synthesis(const RadialGrid& grid, std::span<const double> c) {
    const std::size_t n = grid.size();
    std::vector<double> x(n + 2, 0.0), y(n + 2);
    std::copy(c.begin(), c.end(), x.begin() + 1);
    grid.transforms().dct1(x, y);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * y[j + 1];
    return out;
}

}  // namespace detail

/**
 * d u / d r by 4th-order finite differences on v = r u.
 *
 * Centered stencils in the interior, v extended oddly through r = 0 (u even),
 * and one-sided 4th-order stencils at the two nodes next to r_max, so nothing
 * is assumed about u beyond the last node. u_r = (v' - u) / r.
 */
inline RadialField radial_derivative(const RadialField& u) {
    const auto& g = u.grid();
    const std::size_t n = g.size();
    const double h = g.dr();
    const auto v = detail::times_r(u);
    std::vector<Complex> out(n);
    auto V = [&](long i) { return detail::v_at(v, i); };
    const long N = static_cast<long>(n);
    for (long i = 1; i <= N; ++i) {
        Complex dv;
        if (i <= N - 2) {
            dv = (V(i - 2) - 8.0 * V(i - 1) + 8.0 * V(i + 1) - V(i + 2)) / (12.0 * h);
        } else if (i == N - 1) {
            dv = (-V(i - 3) + 6.0 * V(i - 2) - 18.0 * V(i - 1) + 10.0 * V(i) + 3.0 * V(i + 1)) /
                 (12.0 * h);
        } else {
            dv = (3.0 * V(i - 4) - 16.0 * V(i - 3) + 36.0 * V(i - 2) - 48.0 * V(i - 1) +
                  25.0 * V(i)) /
                 (12.0 * h);
        }
        const auto j = static_cast<std::size_t>(i - 1);
        out[j] = (dv - u[j]) / g.node(j);
    }
    return RadialField(g, std::move(out));
}

/// Delta u = v'' / r with the same boundary treatment as radial_derivative.
inline RadialField radial_laplacian(const RadialField& u) {
    const auto& g = u.grid();
    const std::size_t n = g.size();
    const double h2 = g.dr() * g.dr();
    const auto v = detail::times_r(u);
    std::vector<Complex> out(n);
    auto V = [&](long i) { return detail::v_at(v, i); };
    const long N = static_cast<long>(n);
    for (long i = 1; i <= N; ++i) {
        Complex d2;
        if (i <= N - 2) {
            d2 = (-V(i - 2) + 16.0 * V(i - 1) - 30.0 * V(i) + 16.0 * V(i + 1) - V(i + 2)) /
                 (12.0 * h2);
        } else if (i == N - 1) {
            d2 = (V(i - 4) - 6.0 * V(i - 3) + 14.0 * V(i - 2) - 4.0 * V(i - 1) - 15.0 * V(i) +
                  10.0 * V(i + 1)) /
                 (12.0 * h2);
        } else {
            d2 = (-10.0 * V(i - 5) + 61.0 * V(i - 4) - 156.0 * V(i - 3) + 214.0 * V(i - 2) -
                  154.0 * V(i - 1) + 45.0 * V(i)) /
                 (12.0 * h2);
        }
        const auto j = static_cast<std::size_t>(i - 1);
        out[j] = d2 / g.node(j);
    }
    return RadialField(g, std::move(out));
}

/// d u / d r from the sine series of v = r u (exact on span{sin(k_m r)/r}).
inline RadialField spectral_derivative(const RadialField& u) {
    const auto& g = u.grid();
    const std::size_t n = g.size();
    std::vector<double> re, im;
    detail::sine_coefficients(g, detail::times_r(u), re, im);
    const auto k = g.wavenumbers();
    for (std::size_t m = 0; m < n; ++m) {
        re[m] *= k[m];
        im[m] *= k[m];
    }
    const auto dre = detail::cosine_synthesis(g, re);
    const auto dim = detail::cosine_synthesis(g, im);
    std::vector<Complex> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = (Complex(dre[j], dim[j]) - u[j]) / g.node(j);
    }
    return RadialField(g, std::move(out));
}

/// Delta u with -Delta diagonal (eigenvalues k_m^2) in the sine basis.
inline RadialField spectral_laplacian(const RadialField& u) {
    const auto& g = u.grid();
    std::vector<double> re, im;
    detail::sine_coefficients(g, detail::times_r(u), re, im);
    const auto k = g.wavenumbers();
    for (std::size_t m = 0; m < g.size(); ++m) {
        re[m] *= -k[m] * k[m];
        im[m] *= -k[m] * k[m];
    }
    auto v = detail::sine_synthesis(g, re, im);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] /= g.node(j);
    return RadialField(g, std::move(v));
}

inline RadialField derivative(const RadialField& u, Derivative scheme) {
    return scheme == Derivative::Spectral ? spectral_derivative(u) : radial_derivative(u);
}

inline RadialField laplacian(const RadialField& u, Derivative scheme) {
    return scheme == Derivative::Spectral ? spectral_laplacian(u) : radial_laplacian(u);
}

/// e^{i dt Delta} u: each sine mode of v = r u is multiplied by exp(-i k_m^2 dt).
inline RadialField apply_linear_propagator(const RadialField& u, double dt) {
    const auto& g = u.grid();
    const std::size_t n = g.size();
    std::vector<double> re, im;
    detail::sine_coefficients(g, detail::times_r(u), re, im);
    const auto k = g.wavenumbers();
    for (std::size_t m = 0; m < n; ++m) {
        const Complex c = Complex(re[m], im[m]) * std::polar(1.0, -k[m] * k[m] * dt);
        re[m] = c.real();
        im[m] = c.imag();
    }
    auto v = detail::sine_synthesis(g, re, im);
    for (std::size_t j = 0; j < n; ++j) v[j] /= g.node(j);
    return RadialField(g, std::move(v));
}

/// Fraction of the discrete mass carried by the outermost `fraction` of nodes.
inline double outer_mass_fraction(const RadialField& u, double fraction = 0.05) {
    const auto r = u.grid().nodes();
    const std::size_t n = u.size();
    const auto first = static_cast<std::size_t>(std::floor((1.0 - fraction) * static_cast<double>(n)));
    double total = 0.0, outer = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = std::norm(u[j]) * r[j] * r[j];
        total += w;
        if (j >= first) outer += w;
    }
    return total > 0.0 ? outer / total : 0.0;
}

}  // namespace cqnls
