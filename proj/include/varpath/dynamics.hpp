#pragma once

// Curve integration and action diagnostics. Autoparallels solve
//   xddot^a = -Gamma^a_bc xdot^b xdot^c,
// geodesics the same with the Levi-Civita part only. The Lagrangian of the
// effective metric is L = sqrt(|H(xdot, xdot)|); el_residual checks the
// Euler-Lagrange equations of L along a sampled curve with a fifth-order
// lambda stencil, action_value integrates L by composite Simpson, and
// generalized_proper_time evaluates the reparametrization
//   tau = integral exp(-omega/2) sqrt(|g(xdot,xdot)|) dlambda,
//   omega(lambda) = (1/n) integral Q_abc xdot^a g^bc dlambda'
// with a cumulative trapezoid for the running omega.

#include <cmath>
#include <exception>
#include <string>
#include <vector>

#include "varpath/connection.hpp"
#include "varpath/geometry.hpp"
#include "varpath/h_transport.hpp"
#include "varpath/ode.hpp"
#include "varpath/util.hpp"

namespace varpath {

enum class CurveKind { Autoparallel, Geodesic };

struct StepControl {
    std::string method = "rk4";  // "rk4" | "rkf45"
    int steps = 0;               // rk4; 0 picks max(16, ceil(256 |span|))
    double rel_tol = 1e-9;       // rkf45
    CurveKind kind = CurveKind::Autoparallel;
};

struct Trajectory {
    Vec lambdas;
    std::vector<Vec> xs;
    std::vector<Vec> vs;
    std::string method;
    int steps_accepted = 0;
    int steps_rejected = 0;
    double max_scaled_error = 0.0;  // rkf45, relative to its tolerance
    size_t samples() const { return lambdas.size(); }
};

inline Trajectory integrate_curve(const GeometrySpec& spec, const Vec& x0, const Vec& v0,
                                  double l0, double l1, const StepControl& ctl = {}) {
    const int n = spec.dim;
    if (static_cast<int>(x0.size()) != n || static_cast<int>(v0.size()) != n)
        throw NumericsError("initial data dimension does not match geometry dim");

    auto rhs = [&](double, const Vec& y, Vec& out) {
        Vec x(y.begin(), y.begin() + n);
        Ten3 gamma = ctl.kind == CurveKind::Autoparallel ? gamma_at(spec, x)
                                                         : christoffel_at(spec, x);
        for (int i = 0; i < n; ++i) out[i] = y[n + i];
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) s += gamma(a, b, c) * y[n + b] * y[n + c];
            out[n + a] = -s;
        }
    };

    Vec y(2 * n);
    for (int i = 0; i < n; ++i) {
        y[i] = x0[i];
        y[n + i] = v0[i];
    }

    Trajectory traj;
    traj.method = ctl.method;
    auto push = [&](double l, const Vec& state) {
        traj.lambdas.push_back(l);
        traj.xs.emplace_back(state.begin(), state.begin() + n);
        traj.vs.emplace_back(state.begin() + n, state.end());
    };

    if (ctl.method == "rk4") {
        int steps = ctl.steps > 0
                        ? ctl.steps
                        : std::max(16, static_cast<int>(std::ceil(256.0 * std::abs(l1 - l0))));
        const double h = (l1 - l0) / steps;
        Rk4 rk(y.size());
        push(l0, y);
        for (int k = 0; k < steps; ++k) {
            rk.step(rhs, l0 + k * h, y, h);
            push(l0 + (k + 1) * h, y);
        }
        traj.steps_accepted = steps;
    } else if (ctl.method == "rkf45") {
        AdaptiveOptions opt;
        opt.rel_tol = ctl.rel_tol;
        AdaptiveStats stats =
            rkf45_integrate(rhs, l0, l1, y, opt, [&](double l, const Vec& s) { push(l, s); });
        traj.steps_accepted = stats.accepted;
        traj.steps_rejected = stats.rejected;
        traj.max_scaled_error = stats.max_scaled_error;
    } else {
        throw NumericsError("unknown integration method: " + ctl.method);
    }
    return traj;
}

struct Lagrangian {
    double value = 0.0;
    bool null = false;  // |H(v,v)| < 1e-14
};

inline Lagrangian lagrangian_at(const Mat& H, const Vec& v) {
    const int n = H.dim();
    double q = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) q += H(a, b) * v[a] * v[b];
    Lagrangian l;
    l.null = std::abs(q) < 1e-14;
    l.value = std::sqrt(std::abs(q));
    return l;
}

inline Lagrangian lagrangian_at(const HState& h, const Vec& v) { return lagrangian_at(h.H, v); }

namespace detail {

inline void require_uniform(const Trajectory& traj, const char* who) {
    if (traj.samples() < 5)
        throw NumericsError(std::string(who) + " needs at least five trajectory samples");
    const double h0 = traj.lambdas[1] - traj.lambdas[0];
    for (size_t i = 1; i + 1 < traj.samples(); ++i) {
        double h = traj.lambdas[i + 1] - traj.lambdas[i];
        if (std::abs(h - h0) > 1e-9 * std::max(std::abs(h0), 1e-30))
            throw NumericsError(std::string(who) + " requires a uniform lambda grid");
    }
}

// effective metric at every sample, parallel over samples
inline std::vector<HState> h_along(const GeometrySpec& spec, const Trajectory& traj,
                                   const TransportOptions& opt) {
    std::vector<HState> hs(traj.samples());
    std::vector<std::exception_ptr> errs(traj.samples());
    parallel_for(static_cast<int>(traj.samples()), [&](int i) {
        try {
            hs[i] = h_at(spec, traj.xs[i], opt);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    });
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return hs;
}

}  // namespace detail

struct ELReport {
    double el_residual_max = 0.0;  // max |d/dlambda dL/dv^a - dL/dx^a| over interior samples
    double affine_defect = 0.0;    // max |dL/dlambda|
};

inline ELReport el_residual(const GeometrySpec& spec, const Trajectory& traj,
                            const TransportOptions& opt = {}) {
    detail::require_uniform(traj, "el_residual");
    const int n = spec.dim;
    const size_t m = traj.samples();
    const double dl = traj.lambdas[1] - traj.lambdas[0];

    std::vector<HState> hs = detail::h_along(spec, traj, opt);
    std::vector<Vec> p(m, Vec(n));
    std::vector<Vec> dLdx(m, Vec(n));
    Vec L(m);
    for (size_t i = 0; i < m; ++i) {
        Lagrangian li = lagrangian_at(hs[i], traj.vs[i]);
        if (li.null)
            throw NumericsError("el_residual: null data at lambda = " +
                                std::to_string(traj.lambdas[i]));
        L[i] = li.value;
        for (int a = 0; a < n; ++a) {
            double pa = 0.0;
            for (int b = 0; b < n; ++b) pa += hs[i].H(a, b) * traj.vs[i][b];
            p[i][a] = pa / L[i];
            double s = 0.0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    s += hs[i].dH(a, b, c) * traj.vs[i][b] * traj.vs[i][c];
            dLdx[i][a] = 0.5 * s / L[i];
        }
    }

    ELReport rep;
    for (size_t i = 2; i + 2 < m; ++i) {
        for (int a = 0; a < n; ++a) {
            double dp = (p[i - 2][a] - 8.0 * p[i - 1][a] + 8.0 * p[i + 1][a] - p[i + 2][a]) /
                        (12.0 * dl);
            rep.el_residual_max = std::max(rep.el_residual_max, std::abs(dp - dLdx[i][a]));
        }
        double dL = (L[i - 2] - 8.0 * L[i - 1] + 8.0 * L[i + 1] - L[i + 2]) / (12.0 * dl);
        rep.affine_defect = std::max(rep.affine_defect, std::abs(dL));
    }
    return rep;
}

// composite Simpson; a trailing odd interval pair is closed with the 3/8 rule
inline double simpson(const Vec& f, double h) {
    const size_t m = f.size();
    if (m < 3) throw NumericsError("quadrature needs at least three samples");
    size_t even_end = (m % 2 == 1) ? m : m - 3;  // index past the Simpson range
    double s = 0.0;
    for (size_t i = 0; i + 2 < even_end + 1; i += 2)
        s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    if (m % 2 == 0) {
        size_t i = m - 4;
        s += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
    }
    return s;
}

inline double action_value(const GeometrySpec& spec, const Trajectory& traj,
                           const TransportOptions& opt = {}) {
    detail::require_uniform(traj, "action_value");
    std::vector<HState> hs = detail::h_along(spec, traj, opt);
    Vec L(traj.samples());
    for (size_t i = 0; i < traj.samples(); ++i) {
        Lagrangian li = lagrangian_at(hs[i], traj.vs[i]);
        if (li.null)
            throw NumericsError("action_value: null data at lambda = " +
                                std::to_string(traj.lambdas[i]));
        L[i] = li.value;
    }
    return simpson(L, traj.lambdas[1] - traj.lambdas[0]);
}

inline double generalized_proper_time(const GeometrySpec& spec, const Trajectory& traj) {
    detail::require_uniform(traj, "generalized_proper_time");
    const int n = spec.dim;
    const size_t m = traj.samples();
    const double dl = traj.lambdas[1] - traj.lambdas[0];

    Vec domega(m), gnorm(m);
    for (size_t i = 0; i < m; ++i) {
        PointFields f = fields_at(spec, traj.xs[i], 0);
        double tr = 0.0;
        for (int a = 0; a < n; ++a) {
            double qa = 0.0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) qa += f.Q(a, b, c) * f.ginv(b, c);
            tr += qa * traj.vs[i][a];
        }
        domega[i] = tr / n;
        double q = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) q += f.g(a, b) * traj.vs[i][a] * traj.vs[i][b];
        if (std::abs(q) < 1e-14)
            throw NumericsError("generalized_proper_time: null data at lambda = " +
                                std::to_string(traj.lambdas[i]));
        gnorm[i] = std::sqrt(std::abs(q));
    }

    Vec integrand(m);
    double omega = 0.0;
    integrand[0] = gnorm[0];
    for (size_t i = 1; i < m; ++i) {
        omega += 0.5 * dl * (domega[i - 1] + domega[i]);
        integrand[i] = std::exp(-0.5 * omega) * gnorm[i];
    }
    return simpson(integrand, dl);
}

inline double norm_drift(const GeometrySpec& spec, const Trajectory& traj,
                         const TransportOptions& opt = {}) {
    std::vector<HState> hs = detail::h_along(spec, traj, opt);
    const int n = spec.dim;
    double q0 = 0.0, drift = 0.0;
    for (size_t i = 0; i < traj.samples(); ++i) {
        double q = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) q += hs[i].H(a, b) * traj.vs[i][a] * traj.vs[i][b];
        if (i == 0)
            q0 = q;
        else
            drift = std::max(drift, std::abs(q - q0));
    }
    return drift;
}

}  // namespace varpath
