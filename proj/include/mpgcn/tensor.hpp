#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpgcn {

/// Dense row-major matrix of 64-bit floats. All numeric state in the
/// library (features, weights, gradients) lives in these.
struct Tensor {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<size_t>(r * c), 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative dimensions");
    }

    static Tensor full(int64_t r, int64_t c, double v) {
        Tensor t(r, c);
        for (auto& x : t.data) x = v;
        return t;
    }

    static Tensor identity(int64_t n) {
        Tensor t(n, n);
        for (int64_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    double& operator()(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
    double operator()(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols + c)]; }

    int64_t size() const { return rows * cols; }
    bool empty() const { return data.empty(); }

    bool same_shape(const Tensor& other) const { return rows == other.rows && cols == other.cols; }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

inline bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

} // namespace mpgcn
