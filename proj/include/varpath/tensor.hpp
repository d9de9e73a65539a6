#pragma once

// Small dense containers for rank-1..4 objects in n <= ~8 dimensions, plus the
// bits of linear algebra the toolkit needs (LU inverse/determinant, Jacobi
// eigenvalues for symmetric matrices). Row-major, value semantics throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace varpath {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;

class Mat {
public:
    Mat() = default;
    explicit Mat(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    size_t size() const { return a_.size(); }

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    friend bool operator==(const Mat& x, const Mat& y) { return x.n_ == y.n_ && x.a_ == y.a_; }

private:
    int n_ = 0;
    std::vector<double> a_;
};

class Ten3 {
public:
    Ten3() = default;
    explicit Ten3(int n) : n_(n), a_(static_cast<size_t>(n) * n * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k) {
        return a_[(static_cast<size_t>(i) * n_ + j) * n_ + k];
    }
    double operator()(int i, int j, int k) const {
        return a_[(static_cast<size_t>(i) * n_ + j) * n_ + k];
    }
    size_t size() const { return a_.size(); }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

private:
    int n_ = 0;
    std::vector<double> a_;
};

class Ten4 {
public:
    Ten4() = default;
    explicit Ten4(int n) : n_(n), a_(static_cast<size_t>(n) * n * n * n, 0.0) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k, int l) {
        return a_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return a_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    size_t size() const { return a_.size(); }

private:
    int n_ = 0;
    std::vector<double> a_;
};

inline double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs(const Mat& a) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double max_asymmetry(const Mat& a) {
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = i + 1; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
    return m;
}

inline void symmetrize(Mat& a) {
    for (int i = 0; i < a.dim(); ++i)
        for (int j = i + 1; j < a.dim(); ++j) {
            double s = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = s;
            a(j, i) = s;
        }
}

struct LuFactors {
    Mat lu;                // combined L (unit diagonal) and U
    std::vector<int> piv;  // row permutation
    double det = 0.0;
};

// LU with partial pivoting. Never throws on singular input: det just comes out
// (near) zero and callers decide what counts as degenerate.
inline LuFactors lu_factor(Mat m) {
    const int n = m.dim();
    LuFactors f;
    f.piv.resize(n);
    double det = 1.0;
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(m(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > best) {
                best = std::abs(m(i, k));
                p = i;
            }
        f.piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
            det = -det;
        }
        det *= m(k, k);
        if (m(k, k) == 0.0) continue;
        for (int i = k + 1; i < n; ++i) {
            m(i, k) /= m(k, k);
            for (int j = k + 1; j < n; ++j) m(i, j) -= m(i, k) * m(k, j);
        }
    }
    f.lu = std::move(m);
    f.det = det;
    return f;
}

inline Vec lu_solve(const LuFactors& f, Vec b) {
    const int n = f.lu.dim();
    for (int k = 0; k < n; ++k) {
        std::swap(b[k], b[f.piv[k]]);
        for (int i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) b[i] -= f.lu(i, j) * b[j];
        b[i] /= f.lu(i, i);
    }
    return b;
}

struct InverseResult {
    Mat inverse;
    double det = 0.0;
};

inline InverseResult lu_invert(const Mat& m) {
    const int n = m.dim();
    LuFactors f = lu_factor(m);
    InverseResult r;
    r.det = f.det;
    r.inverse = Mat(n);
    if (f.det == 0.0) return r;  // inverse left zero; caller checks det
    for (int c = 0; c < n; ++c) {
        Vec e(n, 0.0);
        e[c] = 1.0;
        Vec col = lu_solve(f, std::move(e));
        for (int i = 0; i < n; ++i) r.inverse(i, c) = col[i];
    }
    return r;
}

inline double determinant(const Mat& m) { return lu_factor(m).det; }

// Cyclic Jacobi for symmetric matrices; returns eigenvalues sorted ascending.
inline Vec symmetric_eigenvalues(Mat m) {
    const int n = m.dim();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-300) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (m(p, q) == 0.0) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    Vec ev(n);
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace varpath
