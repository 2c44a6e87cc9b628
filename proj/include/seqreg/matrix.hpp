#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seqreg/error.hpp"

namespace seqreg {

// Dense row-major matrix of doubles. Deliberately minimal: the regulator
// needs transparent, fixed-order arithmetic for its hand-written backward
// pass and for the byte-identical-output contract.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// In-place numerically stable softmax (max subtraction).
inline void softmax_inplace(std::vector<double>& v) {
    if (v.empty()) return;
    double mx = v[0];
    for (double x : v)
        if (x > mx) mx = x;
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

inline std::vector<double> softmax(std::vector<double> v) {
    softmax_inplace(v);
    return v;
}

// Gradient of z -> softmax(z) applied to an upstream gradient dL/dsoftmax:
// dL/dz_i = p_i * (d_i - sum_j p_j d_j).
inline std::vector<double> softmax_backward(const std::vector<double>& p,
                                            const std::vector<double>& dp) {
    double inner = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) inner += p[j] * dp[j];
    std::vector<double> dz(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (dp[i] - inner);
    return dz;
}

} // namespace seqreg
