#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "qckit/common.hpp"

namespace qc {

using Shape = std::vector<std::int64_t>;

// Dense row-major value container. Rank 1 or 2 is all the pipeline needs.
struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        if (numel() != static_cast<std::int64_t>(values.size()))
            throw ShapeError("tensor value count does not match shape");
    }

    static Tensor zeros(Shape s) {
        std::int64_t n = 1;
        for (auto d : s) n *= d;
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    std::int64_t rows() const {
        if (shape.size() != 2) throw ShapeError("rows() needs a rank-2 tensor");
        return shape[0];
    }
    std::int64_t cols() const {
        if (shape.size() != 2) throw ShapeError("cols() needs a rank-2 tensor");
        return shape[1];
    }

    double& at(std::int64_t r, std::int64_t c) { return values[r * cols() + c]; }
    double at(std::int64_t r, std::int64_t c) const { return values[r * cols() + c]; }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace qc
