#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qckit/tensor.hpp"

namespace qct {

inline void fill_uniform(std::vector<double>& v, std::uint64_t seed, double lo = -1.0,
                         double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& x : v) x = u(rng);
}

inline qc::Tensor random_tensor(qc::Shape shape, std::uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
    qc::Tensor t = qc::Tensor::zeros(std::move(shape));
    fill_uniform(t.values, seed, lo, hi);
    return t;
}

// Central finite-difference check of an analytic gradient. `f` evaluates the
// scalar objective at a parameter vector; returns the worst per-component
// relative error with a unit floor in the denominator.
inline double fd_max_rel(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> at, const std::vector<double>& analytic,
                         double step = 1e-6) {
    double worst = 0.0;
    for (std::size_t k = 0; k < at.size(); ++k) {
        const double keep = at[k];
        at[k] = keep + step;
        const double fp = f(at);
        at[k] = keep - step;
        const double fm = f(at);
        at[k] = keep;
        const double fd = (fp - fm) / (2.0 * step);
        const double denom = std::max({1.0, std::fabs(fd), std::fabs(analytic[k])});
        worst = std::max(worst, std::fabs(fd - analytic[k]) / denom);
    }
    return worst;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k] - b[k]));
    return a.size() == b.size() ? m : std::numeric_limits<double>::infinity();
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double denom = std::max({1.0, std::fabs(a[k]), std::fabs(b[k])});
        m = std::max(m, std::fabs(a[k] - b[k]) / denom);
    }
    return a.size() == b.size() ? m : std::numeric_limits<double>::infinity();
}

// Unique scratch directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::vector<char> read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace qct
