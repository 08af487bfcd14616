// SPDX-License-Identifier: Apache-2.0
//
// Dense real and complex matrices plus the handful of decompositions the
// channel metrics need. Storage is row-major float64 throughout.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace chgen::linalg {

using Complex = std::complex<double>;

class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<Complex> data() noexcept { return data_; }
    std::span<const Complex> data() const noexcept { return data_; }

    ComplexMatrix& operator+=(const ComplexMatrix& other);
    ComplexMatrix& operator-=(const ComplexMatrix& other);
    ComplexMatrix& operator*=(Complex s);
    ComplexMatrix& operator*=(double s);

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(double s, ComplexMatrix a);
ComplexMatrix operator*(Complex s, ComplexMatrix a);

class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static RealMatrix identity(std::size_t n);
    static RealMatrix diagonal(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    RealMatrix transposed() const;
    double trace() const;

    friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator+(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b);

// u * v^H.
ComplexMatrix outer_product(std::span<const Complex> u, std::span<const Complex> v);

double frobenius_norm(const ComplexMatrix& a);
double frobenius_norm(const RealMatrix& a);
double squared_frobenius_norm(const ComplexMatrix& a);

// Sum over entries of conj(a) * b; Re of this is the real inner product of the planes.
Complex frobenius_inner(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix conjugate(const ComplexMatrix& a);

struct EigenDecomposition {
    std::vector<double> values;  // descending
    RealMatrix vectors;          // column k pairs with values[k]
    int sweeps = 0;
};

inline constexpr int kMaxJacobiSweeps = 100;

// Cyclic Jacobi. The input is symmetrized as (A + A^T)/2 first; asymmetry above
// 1e-9 * ||A||_F is rejected. Throws NumericError when the sweep budget runs out.
EigenDecomposition symmetric_eigendecomposition(const RealMatrix& a);

// Principal square root of a symmetric PSD matrix. Eigenvalues in [-1e-6, 0)
// are clamped to zero; anything more negative is a NumericError.
RealMatrix psd_sqrt(const RealMatrix& a);

// One-sided (Hestenes) Jacobi; singular values in descending order.
std::vector<double> singular_values(const RealMatrix& a);

}  // namespace chgen::linalg
