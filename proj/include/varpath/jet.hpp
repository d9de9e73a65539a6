#pragma once

// Forward-mode automatic differentiation truncated at second order. A Jet2
// carries a value, a gradient of length n and a packed symmetric Hessian of
// length n(n+1)/2, together with the order (0, 1 or 2) up to which those
// buffers are meaningful. Mixing orders propagates the minimum, so order-0
// evaluation costs no derivative arithmetic.

#include <cmath>
#include <string>
#include <vector>

#include "varpath/tensor.hpp"

namespace varpath {

struct EvalError : Error {
    using Error::Error;
};

class Jet2 {
public:
    Jet2() = default;

    static Jet2 constant(int n, int order, double c) {
        Jet2 j(n, order);
        j.v_ = c;
        return j;
    }

    static Jet2 variable(int n, int order, int index, double value) {
        Jet2 j(n, order);
        j.v_ = value;
        if (order >= 1) j.g_[index] = 1.0;
        return j;
    }

    int dim() const { return n_; }
    int order() const { return order_; }
    double value() const { return v_; }
    double grad(int i) const { return order_ >= 1 ? g_[i] : 0.0; }
    double hess(int i, int j) const { return order_ >= 2 ? h_[pack(i, j)] : 0.0; }

    size_t pack(int i, int j) const {
        if (i > j) std::swap(i, j);
        // upper triangle, row-major: (i,j) with i <= j
        return static_cast<size_t>(i) * n_ - static_cast<size_t>(i) * (i - 1) / 2 + (j - i);
    }

    friend Jet2 operator+(const Jet2& a, const Jet2& b) {
        Jet2 r = a.shell(b);
        r.v_ = a.v_ + b.v_;
        for (size_t i = 0; i < r.g_.size(); ++i) r.g_[i] = a.g_[i] + b.g_[i];
        for (size_t i = 0; i < r.h_.size(); ++i) r.h_[i] = a.h_[i] + b.h_[i];
        return r;
    }

    friend Jet2 operator-(const Jet2& a, const Jet2& b) {
        Jet2 r = a.shell(b);
        r.v_ = a.v_ - b.v_;
        for (size_t i = 0; i < r.g_.size(); ++i) r.g_[i] = a.g_[i] - b.g_[i];
        for (size_t i = 0; i < r.h_.size(); ++i) r.h_[i] = a.h_[i] - b.h_[i];
        return r;
    }

    friend Jet2 operator-(const Jet2& a) {
        Jet2 r = a;
        r.v_ = -r.v_;
        for (auto& x : r.g_) x = -x;
        for (auto& x : r.h_) x = -x;
        return r;
    }

    friend Jet2 operator*(const Jet2& a, const Jet2& b) {
        Jet2 r = a.shell(b);
        r.v_ = a.v_ * b.v_;
        if (r.order_ >= 1)
            for (int i = 0; i < r.n_; ++i) r.g_[i] = a.g_[i] * b.v_ + a.v_ * b.g_[i];
        if (r.order_ >= 2) {
            size_t k = 0;
            for (int i = 0; i < r.n_; ++i)
                for (int j = i; j < r.n_; ++j, ++k)
                    r.h_[k] = a.h_[k] * b.v_ + a.v_ * b.h_[k] + a.g_[i] * b.g_[j] +
                              a.g_[j] * b.g_[i];
        }
        return r;
    }

    friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * b.reciprocal(); }

    friend Jet2 operator*(double c, const Jet2& a) {
        Jet2 r = a;
        r.v_ *= c;
        for (auto& x : r.g_) x *= c;
        for (auto& x : r.h_) x *= c;
        return r;
    }

    friend Jet2 operator+(const Jet2& a, double c) {
        Jet2 r = a;
        r.v_ += c;
        return r;
    }

    // f(u) with f, f', f'' evaluated at u.value()
    Jet2 chain(double f, double df, double ddf) const {
        Jet2 r(n_, order_);
        r.v_ = f;
        if (order_ >= 1)
            for (int i = 0; i < n_; ++i) r.g_[i] = df * g_[i];
        if (order_ >= 2) {
            size_t k = 0;
            for (int i = 0; i < n_; ++i)
                for (int j = i; j < n_; ++j, ++k) r.h_[k] = df * h_[k] + ddf * g_[i] * g_[j];
        }
        return r;
    }

    Jet2 reciprocal() const {
        if (v_ == 0.0) throw EvalError("division by zero");
        double iv = 1.0 / v_;
        return chain(iv, -iv * iv, 2.0 * iv * iv * iv);
    }

private:
    Jet2(int n, int order) : n_(n), order_(order) {
        if (order >= 1) g_.assign(n, 0.0);
        if (order >= 2) h_.assign(static_cast<size_t>(n) * (n + 1) / 2, 0.0);
    }

    // result skeleton for a binary op: same n, min order
    Jet2 shell(const Jet2& b) const {
        Jet2 r(n_, std::min(order_, b.order_));
        return r;
    }

    int n_ = 0;
    int order_ = 0;
    double v_ = 0.0;
    std::vector<double> g_;
    std::vector<double> h_;
};

inline Jet2 sin(const Jet2& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return u.chain(s, c, -s);
}

inline Jet2 cos(const Jet2& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return u.chain(c, -s, -c);
}

inline Jet2 tan(const Jet2& u) {
    double t = std::tan(u.value());
    double d = 1.0 + t * t;
    return u.chain(t, d, 2.0 * t * d);
}

inline Jet2 exp(const Jet2& u) {
    double e = std::exp(u.value());
    return u.chain(e, e, e);
}

inline Jet2 ln(const Jet2& u) {
    if (u.value() <= 0.0) throw EvalError("ln of non-positive value");
    double iv = 1.0 / u.value();
    return u.chain(std::log(u.value()), iv, -iv * iv);
}

inline Jet2 sqrt(const Jet2& u) {
    if (u.value() < 0.0) throw EvalError("sqrt of negative value");
    double s = std::sqrt(u.value());
    return u.chain(s, 0.5 / s, -0.25 / (s * u.value()));
}

inline Jet2 sinh(const Jet2& u) {
    double s = std::sinh(u.value()), c = std::cosh(u.value());
    return u.chain(s, c, s);
}

inline Jet2 cosh(const Jet2& u) {
    double s = std::sinh(u.value()), c = std::cosh(u.value());
    return u.chain(c, s, c);
}

inline Jet2 tanh(const Jet2& u) {
    double t = std::tanh(u.value());
    double d = 1.0 - t * t;
    return u.chain(t, d, -2.0 * t * d);
}

inline Jet2 abs(const Jet2& u) {
    double s = u.value() > 0.0 ? 1.0 : (u.value() < 0.0 ? -1.0 : 0.0);
    return u.chain(std::abs(u.value()), s, 0.0);
}

// x^k by repeated multiplication; valid for any base, including negatives.
inline Jet2 powi(const Jet2& x, long long k) {
    if (k < 0) return powi(x, -k).reciprocal();
    Jet2 r = Jet2::constant(x.dim(), x.order(), 1.0);
    Jet2 base = x;
    while (k > 0) {
        if (k & 1) r = r * base;
        base = base * base;
        k >>= 1;
    }
    return r;
}

inline Jet2 pow(const Jet2& x, const Jet2& y) {
    if (x.value() <= 0.0) throw EvalError("pow with non-positive base and non-integer exponent");
    return exp(y * ln(x));
}

}  // namespace varpath
