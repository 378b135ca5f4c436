// Forward-mode automatic differentiation with a fixed number of partials.
//
// The membrane energy kernels are written once as templates over the scalar
// type; instantiating them with Dual<N> yields the exact local gradient.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace softscreen {

template <std::size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {}  // NOLINT: implicit from constants

    static constexpr Dual variable(double value, std::size_t index) {
        Dual x(value);
        x.d[index] = 1.0;
        return x;
    }
};

namespace detail {
template <std::size_t N>
constexpr Dual<N> chain(const Dual<N>& a, double value, double da) {
    Dual<N> r(value);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = da * a.d[i];
    return r;
}
}  // namespace detail

template <std::size_t N>
constexpr Dual<N> operator-(const Dual<N>& a) {
    Dual<N> r(-a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}

template <std::size_t N>
constexpr Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v + b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}

template <std::size_t N>
constexpr Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v - b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}

template <std::size_t N>
constexpr Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v * b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}

template <std::size_t N>
constexpr Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
    const double inv = 1.0 / b.v;
    Dual<N> r(a.v * inv);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
}

template <std::size_t N> constexpr Dual<N> operator+(const Dual<N>& a, double b) { return a + Dual<N>(b); }
template <std::size_t N> constexpr Dual<N> operator+(double a, const Dual<N>& b) { return Dual<N>(a) + b; }
template <std::size_t N> constexpr Dual<N> operator-(const Dual<N>& a, double b) { return a - Dual<N>(b); }
template <std::size_t N> constexpr Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <std::size_t N> constexpr Dual<N> operator*(const Dual<N>& a, double b) {
    Dual<N> r(a.v * b);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b;
    return r;
}
template <std::size_t N> constexpr Dual<N> operator*(double a, const Dual<N>& b) { return b * a; }
template <std::size_t N> constexpr Dual<N> operator/(const Dual<N>& a, double b) { return a * (1.0 / b); }
template <std::size_t N> constexpr Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }

template <std::size_t N>
Dual<N> sqrt(const Dual<N>& a) {
    const double s = std::sqrt(a.v);
    return detail::chain(a, s, 0.5 / s);
}

template <std::size_t N>
Dual<N> pow(const Dual<N>& a, double e) {
    const double p = std::pow(a.v, e);
    return detail::chain(a, p, e * p / a.v);
}

template <std::size_t N>
Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
    const double denom = x.v * x.v + y.v * y.v;
    Dual<N> r(std::atan2(y.v, x.v));
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / denom;
    return r;
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.v; }

}  // namespace softscreen
