#pragma once

// ODE steppers used by the transport and curve modules: classic fixed-step
// RK4 and an embedded Fehlberg 4(5) pair with step-size control. States are
// flat Vec buffers; right-hand sides have signature f(t, y, dydt).

#include <cmath>
#include <string>
#include <vector>

#include "varpath/tensor.hpp"

namespace varpath {

struct NumericsError : Error {
    using Error::Error;
};

class Rk4 {
public:
    explicit Rk4(size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    template <class F>
    void step(F&& f, double t, Vec& y, double h) {
        const size_t n = y.size();
        f(t, y, k1_);
        for (size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
        f(t + 0.5 * h, tmp_, k2_);
        for (size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
        f(t + 0.5 * h, tmp_, k3_);
        for (size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
        f(t + h, tmp_, k4_);
        for (size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    Vec k1_, k2_, k3_, k4_, tmp_;
};

struct AdaptiveOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double h_min = 1e-12;
};

struct AdaptiveStats {
    int accepted = 0;
    int rejected = 0;
    double max_scaled_error = 0.0;  // of accepted steps, relative to tolerance
};

// Fehlberg 4(5): advances y in place from t0 to t1, invoking on_sample(t, y)
// after the initial state and every accepted step.
template <class F, class S>
AdaptiveStats rkf45_integrate(F&& f, double t0, double t1, Vec& y, const AdaptiveOptions& opt,
                              S&& on_sample) {
    static constexpr double a2 = 1.0 / 4, a3 = 3.0 / 8, a4 = 12.0 / 13, a6 = 1.0 / 2;
    static constexpr double b21 = 1.0 / 4;
    static constexpr double b31 = 3.0 / 32, b32 = 9.0 / 32;
    static constexpr double b41 = 1932.0 / 2197, b42 = -7200.0 / 2197, b43 = 7296.0 / 2197;
    static constexpr double b51 = 439.0 / 216, b52 = -8.0, b53 = 3680.0 / 513,
                            b54 = -845.0 / 4104;
    static constexpr double b61 = -8.0 / 27, b62 = 2.0, b63 = -3544.0 / 2565,
                            b64 = 1859.0 / 4104, b65 = -11.0 / 40;
    static constexpr double c51 = 16.0 / 135, c53 = 6656.0 / 12825, c54 = 28561.0 / 56430,
                            c55 = -9.0 / 50, c56 = 2.0 / 55;
    static constexpr double c41 = 25.0 / 216, c43 = 1408.0 / 2565, c44 = 2197.0 / 4104,
                            c45 = -1.0 / 5;

    const size_t n = y.size();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n), y5(n), y4(n);
    AdaptiveStats stats;
    double t = t0;
    double h = dir * std::min(std::abs(t1 - t0), std::abs(t1 - t0) / 16.0 + 1e-30);
    on_sample(t, y);
    while (dir * (t1 - t) > 0.0) {
        if (dir * (t + h) > dir * t1) h = t1 - t;
        f(t, y, k1);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * b21 * k1[i];
        f(t + a2 * h, tmp, k2);
        for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
        f(t + a3 * h, tmp, k3);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
        f(t + a4 * h, tmp, k4);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
        f(t + h, tmp, k5);
        for (size_t i = 0; i < n; ++i)
            tmp[i] = y[i] +
                     h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] + b65 * k5[i]);
        f(t + a6 * h, tmp, k6);
        double err = 0.0;
        for (size_t i = 0; i < n; ++i) {
            y5[i] = y[i] + h * (c51 * k1[i] + c53 * k3[i] + c54 * k4[i] + c55 * k5[i] +
                                c56 * k6[i]);
            y4[i] = y[i] + h * (c41 * k1[i] + c43 * k3[i] + c44 * k4[i] + c45 * k5[i]);
            double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
        }
        if (err <= 1.0) {
            t += h;
            y = y5;
            ++stats.accepted;
            stats.max_scaled_error = std::max(stats.max_scaled_error, err);
            on_sample(t, y);
        } else {
            ++stats.rejected;
        }
        double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        factor = std::min(5.0, std::max(0.2, factor));
        h *= factor;
        if (std::abs(h) < opt.h_min)
            throw NumericsError("adaptive step size underflow at t = " + std::to_string(t));
    }
    return stats;
}

}  // namespace varpath
