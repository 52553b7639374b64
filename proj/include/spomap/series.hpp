#pragma once

// Truncated single-variable Taylor series with the usual automatic
// differentiation recurrences.  Degrees are runtime values; all binary
// operations require operands of equal degree and never change it.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <deque>
#include <utility>
#include <vector>

#include "spomap/errors.hpp"

namespace spomap {

namespace detail {
inline double abs_val(double x) { return std::abs(x); }
inline double abs_val(const std::complex<double>& x) { return std::abs(x); }
}  // namespace detail

template <class T>
class Series {
public:
    Series() : c_(1, T{}) {}

    explicit Series(int degree, T c0 = T{}) : c_(static_cast<size_t>(degree) + 1, T{}) {
        require(degree >= 0, ErrorKind::argument, "series degree must be >= 0");
        c_[0] = c0;
    }

    explicit Series(std::vector<T> coeffs) : c_(std::move(coeffs)) {
        require(!c_.empty(), ErrorKind::argument, "series needs at least one coefficient");
    }

    // c0 + 1*s, truncated at `degree`.
    static Series variable(int degree, T c0) {
        Series f(degree, c0);
        if (degree >= 1) f.c_[1] = T(1);
        return f;
    }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    int size() const { return static_cast<int>(c_.size()); }

    T& operator[](int i) { return c_[static_cast<size_t>(i)]; }
    const T& operator[](int i) const { return c_[static_cast<size_t>(i)]; }

    const std::vector<T>& coeffs() const { return c_; }
    std::vector<T>& coeffs() { return c_; }

    // Copy of this series truncated or zero-extended to a new degree.
    Series resized(int degree) const {
        Series out(degree);
        int n = std::min(degree, this->degree());
        for (int i = 0; i <= n; ++i) out.c_[i] = c_[i];
        return out;
    }

    T eval(T s) const {
        T acc = c_.back();
        for (int i = degree() - 1; i >= 0; --i) acc = acc * s + c_[static_cast<size_t>(i)];
        return acc;
    }

private:
    std::vector<T> c_;
};

template <class T>
inline void check_same_degree(const Series<T>& a, const Series<T>& b) {
    require(a.degree() == b.degree(), ErrorKind::argument, "series degree mismatch");
}

// ---- in-place kernels (out must not alias inputs for mul/div/pow) ----

template <class T>
void add_into(const Series<T>& a, const Series<T>& b, Series<T>& out) {
    check_same_degree(a, b);
    out = a;
    for (int i = 0; i <= a.degree(); ++i) out[i] += b[i];
}

template <class T>
void sub_into(const Series<T>& a, const Series<T>& b, Series<T>& out) {
    check_same_degree(a, b);
    out = a;
    for (int i = 0; i <= a.degree(); ++i) out[i] -= b[i];
}

// Cauchy product truncated at the common degree.
template <class T>
void mul_into(const Series<T>& a, const Series<T>& b, Series<T>& out) {
    check_same_degree(a, b);
    const int d = a.degree();
    out.coeffs().assign(static_cast<size_t>(d) + 1, T{});
    for (int i = 0; i <= d; ++i) {
        T acc{};
        for (int j = 0; j <= i; ++j) acc += a[j] * b[i - j];
        out[i] = acc;
    }
}

// d(s) = f(s)/g(s): d_i = (f_i - sum_{j<i} d_j g_{i-j}) / g_0.
template <class T>
void div_into(const Series<T>& f, const Series<T>& g, Series<T>& out) {
    check_same_degree(f, g);
    require(detail::abs_val(g[0]) != 0.0, ErrorKind::numerical,
            "series division by zero constant term");
    const int d = f.degree();
    out.coeffs().assign(static_cast<size_t>(d) + 1, T{});
    for (int i = 0; i <= d; ++i) {
        T acc = f[i];
        for (int j = 0; j < i; ++j) acc -= out[j] * g[i - j];
        out[i] = acc / g[0];
    }
}

// f(s)^alpha via p_i = (1/(i f_0)) sum_{m=1..i} (alpha m - (i - m)) f_m p_{i-m}.
template <class T>
void pow_into(const Series<T>& f, double alpha, Series<T>& out) {
    const bool integral = alpha == std::floor(alpha);
    if constexpr (std::is_same_v<T, double>) {
        require(integral || f[0] > 0.0, ErrorKind::numerical,
                "series power needs positive constant term for non-integer exponent");
    }
    require(detail::abs_val(f[0]) != 0.0, ErrorKind::numerical,
            "series power needs nonzero constant term");
    const int d = f.degree();
    out.coeffs().assign(static_cast<size_t>(d) + 1, T{});
    out[0] = std::pow(f[0], T(alpha));
    for (int i = 1; i <= d; ++i) {
        T acc{};
        for (int m = 1; m <= i; ++m)
            acc += T(alpha * m - double(i - m)) * f[m] * out[i - m];
        out[i] = acc / (T(double(i)) * f[0]);
    }
}

// Coupled recurrences for sin(f(s)) and cos(f(s)).
template <class T>
void sin_cos_into(const Series<T>& f, Series<T>& s, Series<T>& c) {
    const int d = f.degree();
    s.coeffs().assign(static_cast<size_t>(d) + 1, T{});
    c.coeffs().assign(static_cast<size_t>(d) + 1, T{});
    s[0] = std::sin(f[0]);
    c[0] = std::cos(f[0]);
    for (int i = 1; i <= d; ++i) {
        T sa{}, ca{};
        for (int m = 1; m <= i; ++m) {
            sa += T(double(m)) * f[m] * c[i - m];
            ca += T(double(m)) * f[m] * s[i - m];
        }
        s[i] = sa / T(double(i));
        c[i] = -ca / T(double(i));
    }
}

// ---- value-returning convenience wrappers ----

template <class T>
Series<T> operator+(const Series<T>& a, const Series<T>& b) {
    Series<T> out;
    add_into(a, b, out);
    return out;
}

template <class T>
Series<T> operator-(const Series<T>& a, const Series<T>& b) {
    Series<T> out;
    sub_into(a, b, out);
    return out;
}

template <class T>
Series<T> operator*(const Series<T>& a, const Series<T>& b) {
    Series<T> out;
    mul_into(a, b, out);
    return out;
}

template <class T>
Series<T> operator*(T k, const Series<T>& a) {
    Series<T> out = a;
    for (int i = 0; i <= a.degree(); ++i) out[i] *= k;
    return out;
}

template <class T>
Series<T> operator-(const Series<T>& a) {
    return T(-1) * a;
}

template <class T>
Series<T> operator+(const Series<T>& a, T k) {
    Series<T> out = a;
    out[0] += k;
    return out;
}

template <class T>
Series<T> operator-(const Series<T>& a, T k) {
    Series<T> out = a;
    out[0] -= k;
    return out;
}

template <class T>
Series<T> series_div(const Series<T>& f, const Series<T>& g) {
    Series<T> out;
    div_into(f, g, out);
    return out;
}

template <class T>
Series<T> series_pow(const Series<T>& f, double alpha) {
    Series<T> out;
    pow_into(f, alpha, out);
    return out;
}

template <class T>
std::pair<Series<T>, Series<T>> series_sin_cos(const Series<T>& f) {
    Series<T> s, c;
    sin_cos_into(f, s, c);
    return {s, c};
}

using RSeries = Series<double>;

// One truncated series per phase-space coordinate (x, y, px, py), all of the
// same degree: the jet-transport state.
struct SeriesVec {
    std::array<RSeries, 4> comp;

    SeriesVec() = default;
    explicit SeriesVec(int degree) {
        for (auto& c : comp) c = RSeries(degree);
    }

    int degree() const { return comp[0].degree(); }

    void check_uniform() const {
        for (const auto& c : comp)
            require(c.degree() == degree(), ErrorKind::argument,
                    "series vector components must share one degree");
    }

    RSeries& operator[](int i) { return comp[static_cast<size_t>(i)]; }
    const RSeries& operator[](int i) const { return comp[static_cast<size_t>(i)]; }

    SeriesVec resized(int degree) const {
        SeriesVec out;
        for (int i = 0; i < 4; ++i) out.comp[static_cast<size_t>(i)] = comp[static_cast<size_t>(i)].resized(degree);
        return out;
    }
};

// Scratch arena so jet right-hand sides can avoid per-call allocation.
// Slots live in a deque: growing it leaves earlier references valid.
class SeriesWorkspace {
public:
    RSeries& scratch(size_t slot, int degree) {
        while (slot >= pool_.size()) pool_.emplace_back();
        RSeries& s = pool_[slot];
        if (s.degree() != degree) s = RSeries(degree);
        return s;
    }

private:
    std::deque<RSeries> pool_;
};

}  // namespace spomap
