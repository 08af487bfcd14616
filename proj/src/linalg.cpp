// SPDX-License-Identifier: Apache-2.0

#include "chgen/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chgen/error.hpp"

namespace chgen::linalg {

namespace {

void require_same_shape(std::size_t r1, std::size_t c1, std::size_t r2, std::size_t c2) {
    if (r1 != r2 || c1 != c2) {
        throw ValidationError("matrix shape mismatch: " + std::to_string(r1) + "x" + std::to_string(c1) +
                              " vs " + std::to_string(r2) + "x" + std::to_string(c2));
    }
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Complex{0.0, 0.0}) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("ComplexMatrix: data length " + std::to_string(data_.size()) + " != " +
                              std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
    require_same_shape(rows_, cols_, other.rows_, other.cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
    require_same_shape(rows_, cols_, other.rows_, other.cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (auto& x : data_) x *= s;
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= s; }
ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("RealMatrix: data length " + std::to_string(data_.size()) + " != " +
                              std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

RealMatrix RealMatrix::diagonal(std::span<const double> values) {
    RealMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

RealMatrix RealMatrix::transposed() const {
    RealMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

double RealMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ValidationError("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
    }
    RealMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto src = b.row(k);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
        }
    }
    return out;
}

RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols());
    RealMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols());
    RealMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

ComplexMatrix outer_product(std::span<const Complex> u, std::span<const Complex> v) {
    if (u.empty() || v.empty()) throw ValidationError("outer_product: empty vector");
    ComplexMatrix out(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) out(i, j) = u[i] * std::conj(v[j]);
    return out;
}

double squared_frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& x : a.data()) s += std::norm(x);
    return s;
}

double frobenius_norm(const ComplexMatrix& a) { return std::sqrt(squared_frobenius_norm(a)); }

double frobenius_norm(const RealMatrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

Complex frobenius_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
    require_same_shape(a.rows(), a.cols(), b.rows(), b.cols());
    Complex s{0.0, 0.0};
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) s += std::conj(da[i]) * db[i];
    return s;
}

ComplexMatrix conjugate(const ComplexMatrix& a) {
    ComplexMatrix out = a;
    for (auto& x : out.data()) x = std::conj(x);
    return out;
}

EigenDecomposition symmetric_eigendecomposition(const RealMatrix& input) {
    const std::size_t n = input.rows();
    if (n == 0 || input.cols() != n) {
        throw ValidationError("symmetric_eigendecomposition: matrix must be square and non-empty");
    }
    const double norm = frobenius_norm(input);
    RealMatrix a(n, n);
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = input(i, j) - input(j, i);
            asym += d * d;
            a(i, j) = 0.5 * (input(i, j) + input(j, i));
        }
    }
    if (std::sqrt(asym) > 1e-9 * std::max(norm, 1.0)) {
        throw ValidationError("symmetric_eigendecomposition: input is not symmetric");
    }

    // Rows of vt are the eigenvectors, so rotations touch contiguous memory.
    RealMatrix vt = RealMatrix::identity(n);
    const double off_target = 1e-12 * norm;
    const double element_floor = off_target / static_cast<double>(n);

    auto off_diagonal = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    double off = off_diagonal();
    while (off > off_target) {
        if (sweep == kMaxJacobiSweeps) {
            throw NumericError("symmetric_eigendecomposition: no convergence after " +
                               std::to_string(kMaxJacobiSweeps) + " sweeps (off-diagonal " +
                               std::to_string(off) + ")");
        }
        ++sweep;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= element_floor) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                auto rp = a.row(p);
                auto rq = a.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = rp[k];
                    const double akq = rq[k];
                    rp[k] = akp - s * (akq + tau * akp);
                    rq[k] = akq + s * (akp - tau * akq);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    a(k, p) = rp[k];
                    a(k, q) = rq[k];
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                auto vp = vt.row(p);
                auto vq = vt.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vp[k];
                    const double y = vq[k];
                    vp[k] = x - s * (y + tau * x);
                    vq[k] = y + s * (x - tau * y);
                }
            }
        }
        off = off_diagonal();
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.sweeps = sweep;
    out.values.resize(n);
    out.vectors = RealMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        auto src = vt.row(order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = src[i];
    }
    return out;
}

RealMatrix psd_sqrt(const RealMatrix& a) {
    const auto eig = symmetric_eigendecomposition(a);
    const std::size_t n = eig.values.size();
    std::vector<double> roots(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = eig.values[k];
        if (lambda < -1e-6) {
            throw NumericError("psd_sqrt: eigenvalue " + std::to_string(lambda) + " is negative");
        }
        roots[k] = std::sqrt(std::max(lambda, 0.0));
    }
    // S = V diag(roots) V^T, accumulated as a sum of scaled outer products.
    RealMatrix scaled(n, n);  // row k = roots[k] * v_k
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) scaled(k, i) = roots[k] * eig.vectors(i, k);
    RealMatrix s = eig.vectors * scaled;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = m;
            s(j, i) = m;
        }
    }
    return s;
}

std::vector<double> singular_values(const RealMatrix& a) {
    // Orthogonalize the columns of a; they are stored as rows of b.
    RealMatrix b = a.transposed();
    const std::size_t n = b.rows();
    const std::size_t m = b.cols();
    constexpr double tol = 1e-13;

    auto dot = [&](std::size_t i, std::size_t j) {
        auto x = b.row(i);
        auto y = b.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += x[k] * y[k];
        return s;
    };

    std::vector<double> norms(n);
    bool rotated = true;
    int sweep = 0;
    while (rotated) {
        if (sweep == kMaxJacobiSweeps) {
            throw NumericError("singular_values: no convergence after " + std::to_string(kMaxJacobiSweeps) +
                               " sweeps");
        }
        ++sweep;
        rotated = false;
        for (std::size_t i = 0; i < n; ++i) norms[i] = dot(i, i);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = norms[p];
                const double beta = norms[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = dot(p, q);
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                auto x = b.row(p);
                auto y = b.row(q);
                for (std::size_t k = 0; k < m; ++k) {
                    const double xp = x[k];
                    const double yq = y[k];
                    x[k] = c * xp - s * yq;
                    y[k] = s * xp + c * yq;
                }
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
    }
    std::vector<double> sv(n);
    for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(dot(i, i));
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

}  // namespace chgen::linalg
