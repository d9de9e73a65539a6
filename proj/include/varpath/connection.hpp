#pragma once

// Torsion-free connection with non-metricity: Gamma^a_bc splits into the
// Levi-Civita part of g plus the disformation built from Q,
//   L^a_bc = 1/2 g^{ad} (Q_dbc - Q_bdc - Q_cdb),
// so that nabla_a g_bc = Q_abc holds identically. Curvature follows the
// convention R_abc^d = d_b Gamma^d_ac - d_a Gamma^d_bc
//                      + Gamma^d_bi Gamma^i_ac - Gamma^d_ai Gamma^i_bc.

#include <cmath>

#include "varpath/geometry.hpp"
#include "varpath/tensor.hpp"

namespace varpath {

struct ConnectionPoint {
    Vec x;
    Mat g, ginv;
    Ten3 christoffel;    // christoffel(a,b,c)   = {a, bc}
    Ten4 dchristoffel;   // dchristoffel(e,a,b,c) = d_e {a, bc}
    Ten3 disformation;   // disformation(a,b,c) = L^a_bc
    Ten4 ddisformation;  // ddisformation(e,a,b,c) = d_e L^a_bc
    Ten3 gamma;          // gamma(a,b,c)        = Gamma^a_bc
    Ten4 dgamma;         // dgamma(e,a,b,c)     = d_e Gamma^a_bc
    Ten4 riemann;        // riemann(a,b,c,d)    = R_abc^d
};

namespace detail {

// dginv(c,a,b) = -(ginv dg_c ginv)_ab
inline Ten3 inverse_metric_derivative(const PointFields& f) {
    const int n = f.g.dim();
    Ten3 dginv(n);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        s += f.ginv(a, i) * f.dg(c, i, j) * f.ginv(j, b);
                dginv(c, a, b) = -s;
            }
    return dginv;
}

}  // namespace detail

inline Ten3 christoffel_from_fields(const PointFields& f) {
    const int n = f.g.dim();
    Ten3 chr(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = b; c < n; ++c) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += f.ginv(a, d) * (f.dg(b, c, d) + f.dg(c, b, d) - f.dg(d, b, c));
                chr(a, b, c) = 0.5 * s;
                chr(a, c, b) = chr(a, b, c);
            }
    return chr;
}

inline Ten3 disformation_from_fields(const PointFields& f) {
    const int n = f.g.dim();
    Ten3 L(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = b; c < n; ++c) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += f.ginv(a, d) * (f.Q(d, b, c) - f.Q(b, d, c) - f.Q(c, d, b));
                L(a, b, c) = 0.5 * s;
                L(a, c, b) = L(a, b, c);
            }
    return L;
}

// full connection Gamma^a_bc at a point, first-derivative fields only
inline Ten3 gamma_at(const GeometrySpec& spec, const Vec& x) {
    PointFields f = fields_at(spec, x, 1);
    Ten3 chr = christoffel_from_fields(f);
    Ten3 L = disformation_from_fields(f);
    const int n = f.g.dim();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) chr(a, b, c) += L(a, b, c);
    return chr;
}

inline Ten3 christoffel_at(const GeometrySpec& spec, const Vec& x) {
    return christoffel_from_fields(fields_at(spec, x, 1));
}

struct LeviCivitaPoint {
    Ten3 christoffel;
    Ten4 dchristoffel;
};

inline LeviCivitaPoint levi_civita_at(const GeometrySpec& spec, const Vec& x) {
    PointFields f = fields_at(spec, x, 2);
    LeviCivitaPoint out;
    out.christoffel = christoffel_from_fields(f);
    const int n = f.g.dim();
    Ten3 dginv = detail::inverse_metric_derivative(f);
    out.dchristoffel = Ten4(n);
    for (int e = 0; e < n; ++e)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = b; c < n; ++c) {
                    double s = 0.0;
                    for (int d = 0; d < n; ++d) {
                        double sym = f.dg(b, c, d) + f.dg(c, b, d) - f.dg(d, b, c);
                        double dsym =
                            f.d2g(e, b, c, d) + f.d2g(e, c, b, d) - f.d2g(e, d, b, c);
                        s += dginv(e, a, d) * sym + f.ginv(a, d) * dsym;
                    }
                    out.dchristoffel(e, a, b, c) = 0.5 * s;
                    out.dchristoffel(e, a, c, b) = out.dchristoffel(e, a, b, c);
                }
    return out;
}

inline ConnectionPoint connection_at(const GeometrySpec& spec, const Vec& x) {
    PointFields f = fields_at(spec, x, 2);
    const int n = f.g.dim();
    ConnectionPoint cp;
    cp.x = x;
    cp.g = f.g;
    cp.ginv = f.ginv;
    cp.christoffel = christoffel_from_fields(f);
    cp.disformation = disformation_from_fields(f);

    Ten3 dginv = detail::inverse_metric_derivative(f);
    cp.dchristoffel = Ten4(n);
    cp.ddisformation = Ten4(n);
    for (int e = 0; e < n; ++e)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = b; c < n; ++c) {
                    double schr = 0.0, sdis = 0.0;
                    for (int d = 0; d < n; ++d) {
                        double sym = f.dg(b, c, d) + f.dg(c, b, d) - f.dg(d, b, c);
                        double dsym =
                            f.d2g(e, b, c, d) + f.d2g(e, c, b, d) - f.d2g(e, d, b, c);
                        schr += dginv(e, a, d) * sym + f.ginv(a, d) * dsym;
                        double qs = f.Q(d, b, c) - f.Q(b, d, c) - f.Q(c, d, b);
                        double dqs = f.dQ(e, d, b, c) - f.dQ(e, b, d, c) - f.dQ(e, c, d, b);
                        sdis += dginv(e, a, d) * qs + f.ginv(a, d) * dqs;
                    }
                    cp.dchristoffel(e, a, b, c) = 0.5 * schr;
                    cp.dchristoffel(e, a, c, b) = 0.5 * schr;
                    cp.ddisformation(e, a, b, c) = 0.5 * sdis;
                    cp.ddisformation(e, a, c, b) = 0.5 * sdis;
                }

    cp.gamma = Ten3(n);
    cp.dgamma = Ten4(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                cp.gamma(a, b, c) = cp.christoffel(a, b, c) + cp.disformation(a, b, c);
                for (int e = 0; e < n; ++e)
                    cp.dgamma(e, a, b, c) =
                        cp.dchristoffel(e, a, b, c) + cp.ddisformation(e, a, b, c);
            }

    cp.riemann = Ten4(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double s = cp.dgamma(b, d, a, c) - cp.dgamma(a, d, b, c);
                    for (int i = 0; i < n; ++i)
                        s += cp.gamma(d, b, i) * cp.gamma(i, a, c) -
                             cp.gamma(d, a, i) * cp.gamma(i, b, c);
                    cp.riemann(a, b, c, d) = s;
                }
    return cp;
}

inline Mat ricci_from(const ConnectionPoint& cp) {
    const int n = cp.g.dim();
    Mat ric(n);
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
            double s = 0.0;
            for (int b = 0; b < n; ++b) s += cp.riemann(a, b, c, b);
            ric(a, c) = s;
        }
    return ric;
}

// residual of nabla_a g_bc = Q_abc; identically ~0 up to roundoff
inline double metric_compatibility_residual(const GeometrySpec& spec, const Vec& x) {
    PointFields f = fields_at(spec, x, 1);
    Ten3 gamma = gamma_at(spec, x);
    const int n = f.g.dim();
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double nab = f.dg(a, b, c);
                for (int d = 0; d < n; ++d)
                    nab -= gamma(d, a, b) * f.g(d, c) + gamma(d, a, c) * f.g(b, d);
                worst = std::max(worst, std::abs(nab - f.Q(a, b, c)));
            }
    return worst;
}

// Christoffel symbols of a candidate metric H given its partial derivatives
inline Ten3 christoffels_of(const Mat& H, const Ten3& dH) {
    const int n = H.dim();
    InverseResult inv = lu_invert(H);
    Ten3 chr(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = b; c < n; ++c) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += inv.inverse(a, d) * (dH(b, c, d) + dH(c, b, d) - dH(d, b, c));
                chr(a, b, c) = 0.5 * s;
                chr(a, c, b) = chr(a, b, c);
            }
    return chr;
}

struct RbarResiduals {
    double first_pair = 0.0;   // R|_abcd + R|_bacd
    double last_pair = 0.0;    // R|_abcd + R|_abdc
    double pair_swap = 0.0;    // R|_abcd - R|_cdab
};

// symmetry residuals of R|_abcd = R_abc^e H_ed; all three vanish exactly when
// nabla H = 0 is integrable
inline RbarResiduals rbar_symmetry_residuals(const ConnectionPoint& cp, const Mat& H) {
    const int n = H.dim();
    Ten4 rbar(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double s = 0.0;
                    for (int e = 0; e < n; ++e) s += cp.riemann(a, b, c, e) * H(e, d);
                    rbar(a, b, c, d) = s;
                }
    RbarResiduals r;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    r.first_pair =
                        std::max(r.first_pair, std::abs(rbar(a, b, c, d) + rbar(b, a, c, d)));
                    r.last_pair =
                        std::max(r.last_pair, std::abs(rbar(a, b, c, d) + rbar(a, b, d, c)));
                    r.pair_swap =
                        std::max(r.pair_swap, std::abs(rbar(a, b, c, d) - rbar(c, d, a, b)));
                }
    return r;
}

}  // namespace varpath
