#pragma once

// Construction of the effective metric H by parallel transport. nabla H = 0
// turns into the linear ODE
//   dH_ab/ds = xdot^c (Gamma^d_ca H_db + Gamma^d_cb H_ad)
// along any path, and the same relation evaluated pointwise reconstructs the
// partial derivatives of H algebraically once H itself is known:
//   d_c H_ab = Gamma^d_ca H_db + Gamma^d_cb H_ad.
// Transport is fixed-step RK4 with the iterate symmetrized after every step;
// the asymmetry removed that way and the running |det H| are tracked and
// reported. A degenerate H is flagged, never silently accepted.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "varpath/connection.hpp"
#include "varpath/geometry.hpp"
#include "varpath/ode.hpp"
#include "varpath/tensor.hpp"

namespace varpath {

struct TransportOptions {
    double steps_per_unit = 256.0;  // used by h_at to pick step counts
    int min_steps = 16;
    double degeneracy_threshold = 1e-10;
};

struct HState {
    Vec x;
    Mat H;
    Ten3 dH;  // reconstructed partials, dH(c,a,b) = d_c H_ab
    double detH = 0.0;
    bool degenerate = false;
    double min_abs_det = std::numeric_limits<double>::infinity();
    double max_asymmetry = 0.0;  // largest per-step asymmetry removed
};

inline Ten3 reconstruct_dH(const Ten3& gamma, const Mat& H) {
    const int n = H.dim();
    Ten3 dH(n);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += gamma(d, c, a) * H(d, b) + gamma(d, c, b) * H(a, d);
                dH(c, a, b) = s;
            }
    return dH;
}

namespace detail {

inline void transport_leg(const GeometrySpec& spec, const Vec& from, const Vec& to, int steps,
                          HState& st) {
    const int n = spec.dim;
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = to[i] - from[i];

    Vec y(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) y[i * n + j] = st.H(i, j);

    auto rhs = [&](double s, const Vec& yy, Vec& out) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = from[i] + s * d[i];
        Ten3 gamma = gamma_at(spec, x);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s2 = 0.0;
                for (int c = 0; c < n; ++c)
                    for (int e = 0; e < n; ++e)
                        s2 += d[c] * (gamma(e, c, a) * yy[e * n + b] +
                                      gamma(e, c, b) * yy[a * n + e]);
                out[a * n + b] = s2;
            }
    };

    Rk4 rk(y.size());
    const double h = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
        rk.step(rhs, k * h, y, h);
        double asym = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                asym = std::max(asym, std::abs(y[i * n + j] - y[j * n + i]));
                double s = 0.5 * (y[i * n + j] + y[j * n + i]);
                y[i * n + j] = s;
                y[j * n + i] = s;
            }
        st.max_asymmetry = std::max(st.max_asymmetry, asym);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) st.H(i, j) = y[i * n + j];
        st.detH = determinant(st.H);
        st.min_abs_det = std::min(st.min_abs_det, std::abs(st.detH));
    }
    st.x = to;
}

inline void finalize(const GeometrySpec& spec, HState& st, const TransportOptions& opt) {
    st.detH = determinant(st.H);
    st.min_abs_det = std::min(st.min_abs_det, std::abs(st.detH));
    st.degenerate = st.min_abs_det <= opt.degeneracy_threshold;
    st.dH = reconstruct_dH(gamma_at(spec, st.x), st.H);
}

}  // namespace detail

// transport H0 from `from` to `to` along the straight coordinate segment,
// `steps` RK4 steps in total
inline HState transport_h(const GeometrySpec& spec, const Vec& from, const Vec& to,
                          const Mat& H0, int steps, const TransportOptions& opt = {}) {
    if (steps < 1) throw NumericsError("transport_h requires at least one step");
    HState st;
    st.x = from;
    st.H = H0;
    st.detH = determinant(H0);
    st.min_abs_det = std::abs(st.detH);
    detail::transport_leg(spec, from, to, steps, st);
    detail::finalize(spec, st, opt);
    return st;
}

// transport along a polyline, `steps` RK4 steps per segment
inline HState transport_h(const GeometrySpec& spec, const std::vector<Vec>& polyline,
                          const Mat& H0, int steps, const TransportOptions& opt = {}) {
    if (polyline.size() < 2) throw NumericsError("transport polyline needs at least two points");
    if (steps < 1) throw NumericsError("transport_h requires at least one step");
    HState st;
    st.x = polyline.front();
    st.H = H0;
    st.detH = determinant(H0);
    st.min_abs_det = std::abs(st.detH);
    for (size_t k = 0; k + 1 < polyline.size(); ++k)
        detail::transport_leg(spec, polyline[k], polyline[k + 1], steps, st);
    detail::finalize(spec, st, opt);
    return st;
}

// H at a point: radial transport of h0 from the base point. Star-shaped
// domain assumption: the straight segment base -> x must stay inside the
// chart. At the base point itself this is exactly h0.
inline HState h_at(const GeometrySpec& spec, const Vec& x, const TransportOptions& opt = {}) {
    const int n = spec.dim;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = x[i] - spec.base_point[i];
        dist += d * d;
    }
    dist = std::sqrt(dist);
    if (dist == 0.0) {
        HState st;
        st.x = x;
        st.H = spec.h0;
        st.min_abs_det = std::abs(determinant(spec.h0));
        detail::finalize(spec, st, opt);
        return st;
    }
    int steps = std::max(opt.min_steps, static_cast<int>(std::ceil(opt.steps_per_unit * dist)));
    return transport_h(spec, spec.base_point, x, spec.h0, steps, opt);
}

// transport around a closed polyline and report max |H_end - H_start|
inline double holonomy_defect(const GeometrySpec& spec, const std::vector<Vec>& loop,
                              const Mat& H_start, int steps_per_edge,
                              const TransportOptions& opt = {}) {
    if (loop.size() < 3) throw NumericsError("holonomy loop needs at least three vertices");
    double closure = 0.0;
    for (int i = 0; i < spec.dim; ++i)
        closure = std::max(closure, std::abs(loop.front()[i] - loop.back()[i]));
    if (closure > 1e-12) throw NumericsError("holonomy loop is not closed");
    HState st = transport_h(spec, loop, H_start, steps_per_edge, opt);
    return max_abs_diff(st.H, H_start);
}

inline double holonomy_defect(const GeometrySpec& spec, const std::vector<Vec>& loop,
                              int steps_per_edge, const TransportOptions& opt = {}) {
    return holonomy_defect(spec, loop, h_at(spec, loop.front(), opt).H, steps_per_edge, opt);
}

struct DegeneracyReport {
    double detH = 0.0;
    double min_abs_det_seen = 0.0;
    double smallest_abs_eigenvalue = 0.0;
    bool degenerate = false;
    std::string note;
};

inline DegeneracyReport degeneracy_check(const HState& st, double threshold = 1e-10) {
    DegeneracyReport r;
    r.detH = st.detH;
    r.min_abs_det_seen = st.min_abs_det;
    Vec ev = symmetric_eigenvalues(st.H);
    r.smallest_abs_eigenvalue = std::numeric_limits<double>::infinity();
    for (double e : ev)
        r.smallest_abs_eigenvalue = std::min(r.smallest_abs_eigenvalue, std::abs(e));
    r.degenerate = st.degenerate || std::abs(r.detH) <= threshold;
    if (r.degenerate)
        r.note = "effective metric is numerically degenerate (|det H| <= " +
                 std::to_string(threshold) + "); consider rescaling h0";
    return r;
}

}  // namespace varpath
