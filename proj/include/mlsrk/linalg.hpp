#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>

namespace mlsrk {

// Upper bound on state, observation and parameter dimension. Keeping small
// vectors inline avoids heap traffic in the stepping loops.
inline constexpr std::size_t kMaxDim = 3;

// Tells the optimiser that sizes are bounded by kMaxDim even with NDEBUG;
// without it the tiny loops below compile to generic memset/memcpy calls.
inline void assume_small(std::size_t n) {
    assert(n <= kMaxDim);
    if (n > kMaxDim) __builtin_unreachable();
}

/// Fixed-capacity dense vector with a runtime size <= kMaxDim.
class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t n, double fill = 0.0) : size_(n) {
        assume_small(n);
        std::fill_n(data_.begin(), n, fill);
    }
    Vec(std::initializer_list<double> values) : size_(values.size()) {
        assert(values.size() <= kMaxDim);
        std::copy(values.begin(), values.end(), data_.begin());
    }

    std::size_t size() const {
        assume_small(size_);
        return size_;
    }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double* begin() { return data_.data(); }
    double* end() { return data_.data() + size_; }
    const double* begin() const { return data_.data(); }
    const double* end() const { return data_.data() + size_; }

    Vec& operator+=(const Vec& o) {
        for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vec& operator*=(double a) {
        for (std::size_t i = 0; i < size(); ++i) data_[i] *= a;
        return *this;
    }
    // this += a * o
    Vec& axpy(double a, const Vec& o) {
        for (std::size_t i = 0; i < size(); ++i) data_[i] += a * o.data_[i];
        return *this;
    }

    bool all_finite() const {
        for (std::size_t i = 0; i < size(); ++i)
            if (!std::isfinite(data_[i])) return false;
        return true;
    }

    friend bool operator==(const Vec& a, const Vec& b) {
        if (a.size_ != b.size_) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a.data_[i] != b.data_[i]) return false;
        return true;
    }

private:
    std::array<double, kMaxDim> data_{};
    std::size_t size_ = 0;
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }

inline double squared_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

/// Square fixed-capacity matrix, row-major.
class Mat {
public:
    Mat() = default;
    explicit Mat(std::size_t n, double fill = 0.0) : n_(n) {
        assume_small(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) (*this)(i, j) = fill;
    }
    static Mat identity(std::size_t n, double scale = 1.0) {
        Mat m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * kMaxDim + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * kMaxDim + j]; }

    Vec operator*(const Vec& v) const {
        Vec out(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    Vec column(std::size_t j) const {
        Vec out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    bool all_finite() const {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (!std::isfinite((*this)(i, j))) return false;
        return true;
    }

private:
    std::array<double, kMaxDim * kMaxDim> data_{};
    std::size_t n_ = 0;
};

// Static parameter vector theta.
using Param = Vec;

}  // namespace mlsrk
