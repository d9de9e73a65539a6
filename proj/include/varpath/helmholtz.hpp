#pragma once

// Variationality checks for second-order systems  d2x^a = F^a(x, v).
// A system is variational iff some symmetric non-degenerate multiplier
// H_ab, together with F, satisfies
//
//   (h1)  dH_ab/dv^c - dH_cb/dv^a = 0
//   (h2)  dH_ab/dlambda + 1/2 (H_ac dF^c/dv^b + H_bc dF^c/dv^a) = 0
//   (h3)  (d_c H_ab - d_a H_cb) F^b + H_ab dF^b/dx^c - H_cb dF^b/dx^a
//           - 1/2 v^b d_b (H_ad dF^d/dv^c - H_cd dF^d/dv^a) = 0
//
// For the autoparallel force F^a = -Gamma^a_bc v^b v^c these can be recast
// through the connection: (h2) becomes v^c nabla_c H_ab = 0, and once that
// holds (h3) collapses to the curvature expression
//
//   v^p v^q (H_id R_kpq^d - H_kd R_ipq^d) = 0.
//
// helmholtz_residuals evaluates every form; callers compare the generic and
// connection/simplified values to confirm the rewriting numerically.

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "varpath/connection.hpp"
#include "varpath/h_transport.hpp"
#include "varpath/util.hpp"

namespace varpath {

struct ForceJet {
    Vec F;        // F(a)
    Mat dFdx;     // dFdx(a, c)      = dF^a / dx^c
    Mat dFdv;     // dFdv(a, c)      = dF^a / dv^c
    Ten3 dFdvdx;  // dFdvdx(b, a, c) = d/dx^b (dF^a / dv^c)
};

inline ForceJet force_jet_from(const ConnectionPoint& cp, const Vec& v) {
    const int n = cp.g.dim();
    if (static_cast<int>(v.size()) != n)
        throw NumericsError("force velocity dimension does not match geometry dim");
    ForceJet fj;
    fj.F.assign(n, 0.0);
    fj.dFdx = Mat(n);
    fj.dFdv = Mat(n);
    fj.dFdvdx = Ten3(n);
    for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) s += cp.gamma(a, b, c) * v[b] * v[c];
        fj.F[a] = -s;
        for (int c = 0; c < n; ++c) {
            double sx = 0.0, sv = 0.0;
            for (int b = 0; b < n; ++b) {
                sv += cp.gamma(a, c, b) * v[b];
                for (int d = 0; d < n; ++d) sx += cp.dgamma(c, a, b, d) * v[b] * v[d];
            }
            fj.dFdx(a, c) = -sx;
            fj.dFdv(a, c) = -2.0 * sv;
        }
    }
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
                double s = 0.0;
                for (int e = 0; e < n; ++e) s += cp.dgamma(b, a, c, e) * v[e];
                fj.dFdvdx(b, a, c) = -2.0 * s;
            }
    return fj;
}

inline ForceJet autoparallel_force(const GeometrySpec& spec, const Vec& x, const Vec& v) {
    return force_jet_from(connection_at(spec, x), v);
}

// multiplier candidate evaluated at a state: value plus exact or probed partials
struct MultiplierJet {
    Mat H;
    Ten3 dHdx;  // dHdx(c, a, b) = d_c H_ab
    Ten3 dHdv;  // dHdv(c, a, b) = dH_ab / dv^c
};

// Where the multiplier comes from. `solved` runs the parallel-transport
// solver and uses its reconstructed partials; `metric` takes H = g with the
// actual metric derivatives; `constant` is a fixed matrix; `callable` probes
// an arbitrary H(x, v) by central differences (the only place finite
// differences are used).
class MultiplierSource {
  public:
    using Fn = std::function<Mat(const Vec& x, const Vec& v)>;

    static MultiplierSource solved(TransportOptions opt = {}) {
        MultiplierSource s;
        s.kind_ = Kind::Solved;
        s.opt_ = opt;
        return s;
    }
    static MultiplierSource metric() {
        MultiplierSource s;
        s.kind_ = Kind::Metric;
        return s;
    }
    static MultiplierSource constant(Mat H) {
        MultiplierSource s;
        s.kind_ = Kind::Constant;
        s.fixed_ = std::move(H);
        return s;
    }
    static MultiplierSource callable(Fn fn) {
        MultiplierSource s;
        s.kind_ = Kind::Callable;
        s.fn_ = std::move(fn);
        return s;
    }

    MultiplierJet evaluate(const GeometrySpec& spec, const Vec& x, const Vec& v) const {
        const int n = spec.dim;
        MultiplierJet mj;
        mj.dHdx = Ten3(n);
        mj.dHdv = Ten3(n);
        switch (kind_) {
            case Kind::Solved: {
                HState st = h_at(spec, x, opt_);
                if (st.degenerate)
                    throw NumericsError("multiplier degenerated during transport (|det H| = " +
                                        std::to_string(std::abs(st.detH)) + ")");
                mj.H = st.H;
                mj.dHdx = st.dH;
                break;
            }
            case Kind::Metric: {
                PointFields f = fields_at(spec, x, 1);
                mj.H = f.g;
                mj.dHdx = f.dg;
                break;
            }
            case Kind::Constant:
                mj.H = fixed_;
                break;
            case Kind::Callable: {
                mj.H = fn_(x, v);
                Vec p(x), q(v);
                for (int c = 0; c < n; ++c) {
                    double hx = 1e-6 * std::max(1.0, std::abs(x[c]));
                    p[c] = x[c] + hx;
                    Mat plus = fn_(p, v);
                    p[c] = x[c] - hx;
                    Mat minus = fn_(p, v);
                    p[c] = x[c];
                    double hv = 1e-6 * std::max(1.0, std::abs(v[c]));
                    q[c] = v[c] + hv;
                    Mat vplus = fn_(x, q);
                    q[c] = v[c] - hv;
                    Mat vminus = fn_(x, q);
                    q[c] = v[c];
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b) {
                            mj.dHdx(c, a, b) = (plus(a, b) - minus(a, b)) / (2.0 * hx);
                            mj.dHdv(c, a, b) = (vplus(a, b) - vminus(a, b)) / (2.0 * hv);
                        }
                }
                break;
            }
        }
        if (mj.H.dim() != n)
            throw NumericsError("multiplier dimension does not match geometry dim");
        if (max_asymmetry(mj.H) > 1e-10)
            throw NumericsError("multiplier candidate is not symmetric");
        if (std::abs(determinant(mj.H)) <= 1e-12)
            throw NumericsError("multiplier candidate is degenerate at the sampled point");
        return mj;
    }

  private:
    enum class Kind { Solved, Metric, Constant, Callable };
    Kind kind_ = Kind::Solved;
    TransportOptions opt_;
    Mat fixed_;
    Fn fn_;
};

struct HelmholtzReport {
    Vec x, v;
    double h1 = 0.0;
    double h2_generic = 0.0;
    double h2_connection = 0.0;
    double h3_generic = 0.0;
    double h3_simplified = 0.0;
    double tolerance = 1e-7;
    bool pass = false;

    double worst() const {
        double w = h1;
        w = std::max(w, h2_generic);
        w = std::max(w, h2_connection);
        w = std::max(w, h3_generic);
        w = std::max(w, h3_simplified);
        return w;
    }
};

inline HelmholtzReport helmholtz_residuals(const GeometrySpec& spec, const Vec& x, const Vec& v,
                                           const MultiplierSource& source, double tol = 1e-7) {
    const int n = spec.dim;
    ConnectionPoint cp = connection_at(spec, x);
    ForceJet fj = force_jet_from(cp, v);
    MultiplierJet mj = source.evaluate(spec, x, v);
    const Mat& H = mj.H;

    HelmholtzReport rep;
    rep.x = x;
    rep.v = v;
    rep.tolerance = tol;

    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                rep.h1 = std::max(rep.h1, std::abs(mj.dHdv(c, a, b) - mj.dHdv(a, c, b)));

    // generic (h2): total lambda-derivative of H along the flow plus the
    // symmetrized H dF/dv term
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double t = 0.0;
            for (int c = 0; c < n; ++c) {
                t += v[c] * mj.dHdx(c, a, b) + fj.F[c] * mj.dHdv(c, a, b);
                t += 0.5 * (H(a, c) * fj.dFdv(c, b) + H(b, c) * fj.dFdv(c, a));
            }
            rep.h2_generic = std::max(rep.h2_generic, std::abs(t));
        }

    // connection form of (h2): v^c nabla_c H_ab, plus the velocity-dependence
    // term -Gamma^d_pq v^p v^q dH_ab/dv^d = F^d dH_ab/dv^d for probed H(x, v)
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double t = 0.0;
            for (int c = 0; c < n; ++c) {
                double nab = mj.dHdx(c, a, b);
                for (int d = 0; d < n; ++d)
                    nab -= cp.gamma(d, c, a) * H(d, b) + cp.gamma(d, c, b) * H(a, d);
                t += v[c] * nab + fj.F[c] * mj.dHdv(c, a, b);
            }
            rep.h2_connection = std::max(rep.h2_connection, std::abs(t));
        }

    // generic (h3), exactly as displayed above
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            double t = 0.0;
            for (int b = 0; b < n; ++b) {
                t += (mj.dHdx(c, a, b) - mj.dHdx(a, c, b)) * fj.F[b];
                t += H(a, b) * fj.dFdx(b, c) - H(c, b) * fj.dFdx(b, a);
                double dA = 0.0;
                for (int d = 0; d < n; ++d)
                    dA += mj.dHdx(b, a, d) * fj.dFdv(d, c) + H(a, d) * fj.dFdvdx(b, d, c) -
                          mj.dHdx(b, c, d) * fj.dFdv(d, a) - H(c, d) * fj.dFdvdx(b, d, a);
                t -= 0.5 * v[b] * dA;
            }
            rep.h3_generic = std::max(rep.h3_generic, std::abs(t));
        }

    // simplified (h3): pure curvature contraction
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double t = 0.0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                    for (int d = 0; d < n; ++d)
                        t += v[p] * v[q] *
                             (H(i, d) * cp.riemann(k, p, q, d) - H(k, d) * cp.riemann(i, p, q, d));
            rep.h3_simplified = std::max(rep.h3_simplified, std::abs(t));
        }

    rep.pass = rep.worst() <= tol;
    return rep;
}

// reference forces for the two closed-form multiplier families: H = g
// (metric multiplier) admits F^a = -{a,bc} v^b v^c + P^a_b v^b + S^a, and
// H = e^{-omega} g (weyl multiplier) the same with {a,bc} + L^a_bc built
// from the weyl non-metricity
enum class ReferenceKind { MetricMultiplier, WeylMultiplier };

inline Vec reference_force(ReferenceKind kind, const GeometrySpec& spec,
                           const std::vector<Expression>& P, const std::vector<Expression>& S,
                           const Vec& x, const Vec& v) {
    const int n = spec.dim;
    if (static_cast<int>(v.size()) != n)
        throw NumericsError("reference force velocity dimension does not match geometry dim");
    if (!P.empty() && static_cast<int>(P.size()) != n * n)
        throw NumericsError("P table must have dim^2 entries (row-major) or be empty");
    if (!S.empty() && static_cast<int>(S.size()) != n)
        throw NumericsError("S table must have dim entries or be empty");
    if (kind == ReferenceKind::WeylMultiplier && !spec.weyl)
        throw GeometryError(
            "the weyl-multiplier reference force requires a geometry with weyl non-metricity");

    PointFields f = fields_at(spec, x, 1);
    Ten3 total = christoffel_from_fields(f);
    if (kind == ReferenceKind::WeylMultiplier) {
        Ten3 L = disformation_from_fields(f);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) total(a, b, c) = total(a, b, c) + L(a, b, c);
    }
    Vec F(n, 0.0);
    for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) s += total(a, b, c) * v[b] * v[c];
        F[a] = -s;
    }
    for (int a = 0; a < n; ++a) {
        if (!P.empty())
            for (int b = 0; b < n; ++b) F[a] += P[a * n + b].evaluate(x, 0).value() * v[b];
        if (!S.empty()) F[a] += S[a].evaluate(x, 0).value();
    }
    return F;
}

struct StateSample {
    Vec x, v;
};

// deterministic batch of sample states, uniform in per-coordinate boxes
inline std::vector<StateSample> sample_states(const Vec& x_lo, const Vec& x_hi, const Vec& v_lo,
                                              const Vec& v_hi, int count, std::uint64_t seed) {
    if (x_lo.size() != x_hi.size() || v_lo.size() != v_hi.size() || x_lo.size() != v_lo.size())
        throw NumericsError("sample box bounds must all have the same dimension");
    std::mt19937_64 rng(seed);
    std::vector<StateSample> out(static_cast<size_t>(count));
    for (auto& st : out) {
        st.x.resize(x_lo.size());
        st.v.resize(v_lo.size());
        for (size_t i = 0; i < x_lo.size(); ++i) st.x[i] = uniform(rng, x_lo[i], x_hi[i]);
        for (size_t i = 0; i < v_lo.size(); ++i) st.v[i] = uniform(rng, v_lo[i], v_hi[i]);
    }
    return out;
}

struct HelmholtzSummary {
    std::vector<HelmholtzReport> reports;
    double max_h1 = 0.0, max_h2_generic = 0.0, max_h2_connection = 0.0;
    double max_h3_generic = 0.0, max_h3_simplified = 0.0;
    double mean_h1 = 0.0, mean_h2_generic = 0.0, mean_h2_connection = 0.0;
    double mean_h3_generic = 0.0, mean_h3_simplified = 0.0;
    bool pass = true;
};

inline HelmholtzSummary check_helmholtz(const GeometrySpec& spec,
                                        const std::vector<StateSample>& states,
                                        const MultiplierSource& source, double tol = 1e-7) {
    HelmholtzSummary sum;
    sum.reports.resize(states.size());
    std::vector<std::exception_ptr> errs(states.size());
    parallel_for(states.size(), [&](size_t i) {
        try {
            sum.reports[i] = helmholtz_residuals(spec, states[i].x, states[i].v, source, tol);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    });
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    for (const auto& r : sum.reports) {
        sum.max_h1 = std::max(sum.max_h1, r.h1);
        sum.max_h2_generic = std::max(sum.max_h2_generic, r.h2_generic);
        sum.max_h2_connection = std::max(sum.max_h2_connection, r.h2_connection);
        sum.max_h3_generic = std::max(sum.max_h3_generic, r.h3_generic);
        sum.max_h3_simplified = std::max(sum.max_h3_simplified, r.h3_simplified);
        sum.mean_h1 += r.h1;
        sum.mean_h2_generic += r.h2_generic;
        sum.mean_h2_connection += r.h2_connection;
        sum.mean_h3_generic += r.h3_generic;
        sum.mean_h3_simplified += r.h3_simplified;
        sum.pass = sum.pass && r.pass;
    }
    if (!sum.reports.empty()) {
        const double m = static_cast<double>(sum.reports.size());
        sum.mean_h1 /= m;
        sum.mean_h2_generic /= m;
        sum.mean_h2_connection /= m;
        sum.mean_h3_generic /= m;
        sum.mean_h3_simplified /= m;
    }
    return sum;
}

}  // namespace varpath
