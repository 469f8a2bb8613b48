#pragma once

// 2-D cosine transforms on row-major rows x cols arrays, backed by FFTW.
//   forward  (DCT-II):  X[u][v] = 4 sum_ij x[i][j] cos(pi v (j+1/2)/cols) cos(pi u (i+1/2)/rows)
//   inverse  (DCT-III): x = DCT-III(X) / (4 rows cols), so inverse(forward(x)) == x

#include "macroplace/common.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace macroplace::placer {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

class Dct2D {
public:
    Dct2D(int rows, int cols) : rows_(rows), cols_(cols), buf_(static_cast<std::size_t>(rows * cols)) {
        if (rows < 1 || cols < 1) throw ArgumentError("Dct2D: empty transform");
        std::lock_guard lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_r2r_2d(rows, cols, buf_.data(), buf_.data(), FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
        inv_ = fftw_plan_r2r_2d(rows, cols, buf_.data(), buf_.data(), FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
        if (!fwd_ || !inv_) throw Error("Dct2D: FFTW planning failed");
    }

    Dct2D(const Dct2D&) = delete;
    Dct2D& operator=(const Dct2D&) = delete;

    ~Dct2D() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    std::vector<double> forward(const std::vector<double>& x) {
        check(x);
        buf_ = x;
        fftw_execute(fwd_);
        return buf_;
    }

    std::vector<double> inverse(const std::vector<double>& X) {
        check(X);
        buf_ = X;
        fftw_execute(inv_);
        const double s = 1.0 / (4.0 * rows_ * cols_);
        for (double& v : buf_) v *= s;
        return buf_;
    }

private:
    void check(const std::vector<double>& v) const {
        if (v.size() != buf_.size()) throw ArgumentError("Dct2D: size mismatch");
    }

    int rows_;
    int cols_;
    std::vector<double> buf_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

}  // namespace macroplace::placer
