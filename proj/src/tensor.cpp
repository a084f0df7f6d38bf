#include "eegstream/tensor.hpp"

#include <cmath>

namespace eegstream {

Tensor::Tensor(std::vector<size_t> s, Precision p) : shape(std::move(s)), precision(p) {
    data.assign(numel(), 0.0);
}

bool Tensor::finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void matvec(const Mat& w, const double* x, double* y) {
    for (size_t r = 0; r < w.rows; ++r) y[r] = dot(w.row(r), x, w.cols);
}

Vec matvec(const Mat& w, const Vec& x) {
    check(x.size() == w.cols, "matvec: dimension mismatch");
    Vec y(w.rows);
    matvec(w, x.data(), y.data());
    return y;
}

void matvec_add(const Mat& w, const double* x, double* y) {
    for (size_t r = 0; r < w.rows; ++r) y[r] += dot(w.row(r), x, w.cols);
}

void matmul(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (size_t j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + i * k;
        for (size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

double dot(const double* x, const double* y, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

}  // namespace eegstream
