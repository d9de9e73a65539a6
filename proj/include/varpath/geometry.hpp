#pragma once

// Geometry input: a metric g and a non-metricity tensor Q given as coordinate
// expressions, plus the base point and seed value h0 for the effective metric.
//
// File format (JSON):
//   {
//     "dim": 2,
//     "coords": ["x0", "x1"],
//     "metric": {"0,0": "1", "1,1": "sin(x0)^2"},        // one symmetric slice
//     "nonmetricity": {"1,1,1": "0.3*x0"},                // or {"weyl": "2*x0"}
//     "base_point": [0.0, 0.7853981633974483],
//     "h0": [[1.0, 0.0], [0.0, 1.0]]                      // optional, default g(base)
//   }
// Unlisted metric/nonmetricity components are zero. Q is symmetric in its last
// two indices, so "a,b,c" and "a,c,b" name the same slot and listing both is
// rejected, as is listing both orderings of an off-diagonal metric component.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "varpath/expr.hpp"
#include "varpath/tensor.hpp"

namespace varpath {

struct GeometryError : Error {
    using Error::Error;
};

struct GeometrySpec {
    int dim = 0;
    std::vector<std::string> coords;
    std::vector<Expression> metric;        // dim*dim, mirrored
    bool weyl = false;
    Expression omega;                      // weyl mode only
    std::vector<Expression> nonmetricity;  // dim^3, mirrored in last two (explicit mode)
    Vec base_point;
    Mat h0;

    const Expression& g(int a, int b) const { return metric[a * dim + b]; }
    const Expression& q(int a, int b, int c) const {
        return nonmetricity[(a * dim + b) * dim + c];
    }
};

struct PointFields {
    Vec x;
    int order = 0;
    Mat g, ginv;
    double detg = 0.0;
    Ten3 dg;   // dg(c,a,b)    = d_c g_ab          (order >= 1)
    Ten4 d2g;  // d2g(c,d,a,b) = d_c d_d g_ab      (order >= 2)
    Ten3 Q;    // Q(a,b,c)     = Q_abc
    Ten4 dQ;   // dQ(d,a,b,c)  = d_d Q_abc         (order >= 2)
};

namespace detail {

inline std::vector<int> parse_index_key(const std::string& key, int rank, int dim,
                                        const std::string& table) {
    std::vector<int> idx;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) {
        size_t pos = 0;
        int v = -1;
        try {
            v = std::stoi(part, &pos);
        } catch (...) {
        }
        while (pos < part.size() && std::isspace(static_cast<unsigned char>(part[pos]))) ++pos;
        if (v < 0 || pos != part.size())
            throw GeometryError(table + " key \"" + key + "\": expected comma-separated indices");
        idx.push_back(v);
    }
    if (static_cast<int>(idx.size()) != rank)
        throw GeometryError(table + " key \"" + key + "\": expected " + std::to_string(rank) +
                            " indices");
    for (int v : idx)
        if (v >= dim)
            throw GeometryError(table + " key \"" + key + "\": index " + std::to_string(v) +
                                " out of range for dim " + std::to_string(dim));
    return idx;
}

inline Expression parse_entry(const nlohmann::json& v, const std::string& table,
                              const std::string& key, const std::vector<std::string>& coords) {
    if (!v.is_string())
        throw GeometryError(table + " entry \"" + key + "\" must be an expression string");
    try {
        return parse(v.get<std::string>(), coords);
    } catch (const ParseError& err) {
        throw GeometryError(table + " entry \"" + key + "\": " + err.what());
    }
}

}  // namespace detail

inline GeometrySpec load_geometry(const nlohmann::json& doc);

inline PointFields fields_at(const GeometrySpec& spec, const Vec& x, int order = 2);

inline GeometrySpec load_geometry(const nlohmann::json& doc) {
    if (!doc.is_object()) throw GeometryError("geometry document must be a JSON object");
    GeometrySpec spec;

    if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<int>() < 1)
        throw GeometryError("\"dim\" must be a positive integer");
    spec.dim = doc["dim"].get<int>();
    const int n = spec.dim;

    if (!doc.contains("coords") || !doc["coords"].is_array() ||
        static_cast<int>(doc["coords"].size()) != n)
        throw GeometryError("\"coords\" must list exactly dim coordinate names");
    for (const auto& c : doc["coords"]) {
        if (!c.is_string()) throw GeometryError("\"coords\" entries must be strings");
        spec.coords.push_back(c.get<std::string>());
    }

    spec.metric.assign(static_cast<size_t>(n) * n, Expression::literal(n, 0.0));
    if (!doc.contains("metric") || !doc["metric"].is_object())
        throw GeometryError("\"metric\" must be an object of \"a,b\" expression entries");
    std::vector<bool> seen_g(static_cast<size_t>(n) * n, false);
    for (const auto& [key, val] : doc["metric"].items()) {
        auto idx = detail::parse_index_key(key, 2, n, "metric");
        int a = idx[0], b = idx[1];
        int lo = std::min(a, b), hi = std::max(a, b);
        if (seen_g[lo * n + hi])
            throw GeometryError("metric key \"" + key +
                                "\" duplicates a symmetric entry; specify one triangle only");
        seen_g[lo * n + hi] = true;
        Expression e = detail::parse_entry(val, "metric", key, spec.coords);
        spec.metric[a * n + b] = e;
        spec.metric[b * n + a] = e;
    }

    spec.nonmetricity.assign(static_cast<size_t>(n) * n * n, Expression::literal(n, 0.0));
    if (doc.contains("nonmetricity") && !doc["nonmetricity"].is_null()) {
        const auto& q = doc["nonmetricity"];
        if (!q.is_object())
            throw GeometryError(
                "\"nonmetricity\" must be an object of \"a,b,c\" entries or {\"weyl\": expr}");
        if (q.contains("weyl")) {
            if (q.size() != 1)
                throw GeometryError(
                    "nonmetricity: \"weyl\" cannot be combined with explicit components");
            spec.weyl = true;
            spec.omega = detail::parse_entry(q["weyl"], "nonmetricity", "weyl", spec.coords);
        } else {
            std::vector<bool> seen_q(static_cast<size_t>(n) * n * n, false);
            for (const auto& [key, val] : q.items()) {
                auto idx = detail::parse_index_key(key, 3, n, "nonmetricity");
                int a = idx[0], b = idx[1], c = idx[2];
                int lo = std::min(b, c), hi = std::max(b, c);
                if (seen_q[(a * n + lo) * n + hi])
                    throw GeometryError("nonmetricity key \"" + key +
                                        "\" duplicates a symmetric entry (last two indices are "
                                        "symmetric); specify one slice only");
                seen_q[(a * n + lo) * n + hi] = true;
                Expression e = detail::parse_entry(val, "nonmetricity", key, spec.coords);
                spec.nonmetricity[(a * n + b) * n + c] = e;
                spec.nonmetricity[(a * n + c) * n + b] = e;
            }
        }
    }

    if (!doc.contains("base_point") || !doc["base_point"].is_array() ||
        static_cast<int>(doc["base_point"].size()) != n)
        throw GeometryError("\"base_point\" must be an array of dim numbers");
    for (const auto& v : doc["base_point"]) {
        if (!v.is_number()) throw GeometryError("\"base_point\" entries must be numbers");
        spec.base_point.push_back(v.get<double>());
    }

    PointFields base = fields_at(spec, spec.base_point, 0);
    if (std::abs(base.detg) <= 1e-12)
        throw GeometryError("metric is degenerate at base_point (|det g| = " +
                            std::to_string(std::abs(base.detg)) + " <= 1e-12)");

    if (doc.contains("h0") && !doc["h0"].is_null()) {
        const auto& h = doc["h0"];
        if (!h.is_array() || static_cast<int>(h.size()) != n)
            throw GeometryError("\"h0\" must be a dim x dim array of numbers");
        spec.h0 = Mat(n);
        for (int i = 0; i < n; ++i) {
            if (!h[i].is_array() || static_cast<int>(h[i].size()) != n)
                throw GeometryError("\"h0\" must be a dim x dim array of numbers");
            for (int j = 0; j < n; ++j) {
                if (!h[i][j].is_number())
                    throw GeometryError("\"h0\" entries must be numbers");
                spec.h0(i, j) = h[i][j].get<double>();
            }
        }
        if (max_asymmetry(spec.h0) > 1e-12) throw GeometryError("\"h0\" must be symmetric");
    } else {
        spec.h0 = base.g;
    }

    return spec;
}

inline GeometrySpec load_geometry_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GeometryError("cannot open geometry file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw GeometryError("geometry file " + path + ": " + err.what());
    }
    return load_geometry(doc);
}

inline PointFields fields_at(const GeometrySpec& spec, const Vec& x, int order) {
    const int n = spec.dim;
    if (static_cast<int>(x.size()) != n)
        throw GeometryError("point dimension does not match geometry dim");
    PointFields f;
    f.x = x;
    f.order = order;
    f.g = Mat(n);
    f.Q = Ten3(n);
    if (order >= 1) f.dg = Ten3(n);
    if (order >= 2) {
        f.d2g = Ten4(n);
        f.dQ = Ten4(n);
    }

    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            Jet2 j = spec.g(a, b).evaluate(x, order);
            f.g(a, b) = j.value();
            f.g(b, a) = j.value();
            if (order >= 1)
                for (int c = 0; c < n; ++c) {
                    f.dg(c, a, b) = j.grad(c);
                    f.dg(c, b, a) = j.grad(c);
                }
            if (order >= 2)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        f.d2g(c, d, a, b) = j.hess(c, d);
                        f.d2g(c, d, b, a) = j.hess(c, d);
                    }
        }

    InverseResult inv = lu_invert(f.g);
    f.detg = inv.det;
    if (std::abs(f.detg) <= 1e-12)
        throw GeometryError("metric is degenerate at the requested point (|det g| <= 1e-12)");
    f.ginv = std::move(inv.inverse);

    if (spec.weyl) {
        // Q_abc = (d_a omega) g_bc
        Jet2 w = spec.omega.evaluate(x, order >= 2 ? 2 : 1);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    f.Q(a, b, c) = w.grad(a) * f.g(b, c);
                    if (order >= 2)
                        for (int d = 0; d < n; ++d)
                            f.dQ(d, a, b, c) =
                                w.hess(d, a) * f.g(b, c) + w.grad(a) * f.dg(d, b, c);
                }
    } else {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = b; c < n; ++c) {
                    Jet2 j = spec.q(a, b, c).evaluate(x, order >= 2 ? 1 : 0);
                    f.Q(a, b, c) = j.value();
                    f.Q(a, c, b) = j.value();
                    if (order >= 2)
                        for (int d = 0; d < n; ++d) {
                            f.dQ(d, a, b, c) = j.grad(d);
                            f.dQ(d, a, c, b) = j.grad(d);
                        }
                }
    }

    return f;
}

}  // namespace varpath
