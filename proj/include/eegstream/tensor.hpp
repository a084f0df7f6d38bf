#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eegstream/errors.hpp"

namespace eegstream {

using Vec = std::vector<double>;

enum class Precision : uint8_t { f64 = 0, f32 = 1 };

inline size_t precision_bytes(Precision p) { return p == Precision::f64 ? 8 : 4; }

// Dense row-major container. Compute is always done in double; the precision
// tag feeds byte accounting and serialization.
struct Tensor {
    std::vector<size_t> shape;
    Vec data;
    Precision precision = Precision::f64;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s, Precision p = Precision::f64);

    size_t numel() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }
    bool finite() const;
};

// Row-major dense matrix, stored out_dim x in_dim so y = W x maps in -> out.
struct Mat {
    size_t rows = 0, cols = 0;
    Vec a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return a[r * cols + c]; }
    double at(size_t r, size_t c) const { return a[r * cols + c]; }
    const double* row(size_t r) const { return a.data() + r * cols; }
    double* row(size_t r) { return a.data() + r * cols; }
    size_t numel() const { return rows * cols; }
};

// y = W x
void matvec(const Mat& w, const double* x, double* y);
Vec matvec(const Mat& w, const Vec& x);

// y += W x
void matvec_add(const Mat& w, const double* x, double* y);

// C = A B with A: m x k, B: k x n (row-major raw pointers).
void matmul(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);

double dot(const double* x, const double* y, size_t n);

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw argument_error(msg);
}

}  // namespace eegstream
