#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "matconc/hermitian.hpp"

namespace matconc {

/// Number of batches used by every batch-means standard error in the library.
inline constexpr std::size_t default_batches = 30;

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and batch-means standard error. Samples are split into `batches`
/// contiguous groups (fewer when there are fewer samples); SE is the standard
/// deviation of the group means over sqrt(#groups).
inline MeanSe batch_means(std::span<const double> xs, std::size_t batches = default_batches) {
    MeanSe out;
    const std::size_t n = xs.size();
    if (n == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.se = std::numeric_limits<double>::infinity();
        return out;
    }
    double total = 0.0;
    for (double x : xs) {
        total += x;
    }
    out.mean = total / static_cast<double>(n);
    const std::size_t k = std::min(batches, n);
    if (k < 2) {
        out.se = std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> means(k, 0.0);
    for (std::size_t b = 0; b < k; ++b) {
        const std::size_t lo = b * n / k;
        const std::size_t hi = (b + 1) * n / k;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            s += xs[i];
        }
        means[b] = s / static_cast<double>(hi - lo);
    }
    double var = 0.0;
    for (double m : means) {
        var += (m - out.mean) * (m - out.mean);
    }
    var /= static_cast<double>(k - 1);
    out.se = std::sqrt(var / static_cast<double>(k));
    return out;
}

/// Entrywise mean and batch-means SE of a sequence of Hermitian matrices.
/// `se(i, j)` combines the real and imaginary parts in quadrature.
struct MatrixMeanSe {
    HermitianMatrix mean;
    RealMatrix se;

    /// Frobenius norm of the SE matrix; dominates the spectral norm of any
    /// matrix whose entries are bounded by `se`.
    double scale() const { return se.norm(); }
};

inline MatrixMeanSe batch_means(std::span<const HermitianMatrix> xs, std::size_t batches = default_batches) {
    if (xs.empty()) {
        throw PreconditionError("batch_means: no samples");
    }
    const Index d = xs.front().dim();
    GeneralMatrix mean = GeneralMatrix::Zero(d, d);
    RealMatrix se(d, d);
    std::vector<double> re(xs.size());
    std::vector<double> im(xs.size());
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            for (std::size_t t = 0; t < xs.size(); ++t) {
                re[t] = xs[t](i, j).real();
                im[t] = xs[t](i, j).imag();
            }
            const MeanSe r = batch_means(re, batches);
            const MeanSe c = batch_means(im, batches);
            mean(i, j) = Complex(r.mean, c.mean);
            se(i, j) = std::hypot(r.se, c.se);
        }
    }
    return {HermitianMatrix::hermitian_part(mean), se};
}

/// Empirical p-quantile by linear interpolation of order statistics.
inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(xs.begin(), xs.end());
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * xs[lo] + w * xs[hi];
}

}  // namespace matconc
