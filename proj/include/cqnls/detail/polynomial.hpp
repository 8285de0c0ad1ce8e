#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cqnls::detail {

/// Polynomial in the shifted variable t = s - origin, coefficients ascending.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(double origin, std::vector<double> coeffs)
        : origin_(origin), c_(std::move(coeffs)) {}

    double operator()(double s) const {
        const double t = s - origin_;
        double acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * t + c_[i];
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial(origin_, {0.0});
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
        return Polynomial(origin_, std::move(d));
    }

    double origin() const noexcept { return origin_; }
    std::span<const double> coefficients() const noexcept { return c_; }
    std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }

private:
    double origin_ = 0.0;
    std::vector<double> c_;
};

/**
 * Two-point Hermite interpolant of degree 2k - 1 on [a, b] matching
 * p^(i)(a) = left[i] and p^(i)(b) = right[i] for i < k.
 *
 * The left data fix the first k Taylor coefficients about a; the remaining k
 * come from a k x k solve against the right data.
 */
inline Polynomial hermite_interpolant(double a, double b, std::span<const double> left,
                                      std::span<const double> right) {
    const std::size_t k = left.size();
    if (right.size() != k || k == 0) throw std::invalid_argument("hermite: data size mismatch");
    const double h = b - a;
    std::vector<double> c(2 * k, 0.0);
    double fact = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0) fact *= static_cast<double>(i);
        c[i] = left[i] / fact;
    }
    // Row i: sum_j c_j d^i/dt^i t^j at t = h.
    auto falling = [](std::size_t j, std::size_t i) {
        double f = 1.0;
        for (std::size_t q = 0; q < i; ++q) f *= static_cast<double>(j - q);
        return f;
    };
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        double known = 0.0;
        for (std::size_t j = i; j < k; ++j) known += c[j] * falling(j, i) * std::pow(h, double(j - i));
        rhs(static_cast<Eigen::Index>(i)) = right[i] - known;
        for (std::size_t j = k; j < 2 * k; ++j) {
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - k)) =
                falling(j, i) * std::pow(h, double(j - i));
        }
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(rhs);
    for (std::size_t j = k; j < 2 * k; ++j) c[j] = x(static_cast<Eigen::Index>(j - k));
    return Polynomial(a, std::move(c));
}

}  // namespace cqnls::detail
