#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "matconc/random_matrix.hpp"
#include "matconc/stein.hpp"

namespace matconc {

/// Coordinates z_j in {0, ..., m-1} with common law `probs`;
/// H(z) = sum_j G[j][z_j] + coupling * sin(sum_j z_j) G0.
/// Small enough to enumerate: exact mean and exact per-coordinate bounds.
struct FiniteCoordinates {
    Index n = 5;
    Index d = 3;
    std::vector<double> probs{0.5, 0.3, 0.2};
    std::vector<std::vector<HermitianMatrix>> g;
    HermitianMatrix g0;
    double coupling = 0.0;

    static FiniteCoordinates random(Index n, Index d, double coupling, std::uint64_t seed) {
        if (n < 1 || d < 1 || n > 12) {
            throw PreconditionError("FiniteCoordinates::random: need 1 <= n <= 12 and d >= 1");
        }
        FiniteCoordinates f;
        f.n = n;
        f.d = d;
        f.coupling = coupling;
        Rng rng = make_rng(seed);
        f.g.resize(static_cast<std::size_t>(n));
        for (auto& gj : f.g) {
            for (std::size_t v = 0; v < f.probs.size(); ++v) {
                gj.push_back(random_hermitian(d, rng, 0.5));
            }
        }
        f.g0 = random_hermitian(d, rng);
        return f;
    }

    Index m() const { return static_cast<Index>(probs.size()); }

    HermitianMatrix h(const std::vector<int>& z) const {
        HermitianMatrix out = HermitianMatrix::zero(d);
        int total = 0;
        for (Index j = 0; j < n; ++j) {
            out += g[static_cast<std::size_t>(j)][static_cast<std::size_t>(z[static_cast<std::size_t>(j)])];
            total += z[static_cast<std::size_t>(j)];
        }
        if (coupling != 0.0) {
            out += (coupling * std::sin(static_cast<double>(total))) * g0;
        }
        return out;
    }

    /// Calls f(z, probability) for every state.
    template <class F>
    void for_each_state(F&& f) const {
        std::vector<int> z(static_cast<std::size_t>(n), 0);
        while (true) {
            double p = 1.0;
            for (int v : z) {
                p *= probs[static_cast<std::size_t>(v)];
            }
            f(z, p);
            Index k = 0;
            while (k < n && ++z[static_cast<std::size_t>(k)] == m()) {
                z[static_cast<std::size_t>(k)] = 0;
                ++k;
            }
            if (k == n) {
                return;
            }
        }
    }

    HermitianMatrix exact_mean() const {
        GeneralMatrix acc = GeneralMatrix::Zero(d, d);
        for_each_state([&](const std::vector<int>& z, double p) { acc += p * h(z).matrix(); });
        return HermitianMatrix::hermitian_part(acc);
    }

    /// A_j = a_j I with a_j the largest ||H(z) - H(z^(j))|| over all states and
    /// replacements, so (H(z) - H(z^(j)))^2 <= A_j^2.
    std::vector<HermitianMatrix> exact_bounds() const {
        std::vector<double> worst(static_cast<std::size_t>(n), 0.0);
        for_each_state([&](const std::vector<int>& z, double) {
            const HermitianMatrix hz = h(z);
            for (Index j = 0; j < n; ++j) {
                std::vector<int> w = z;
                for (int v = 0; v < m(); ++v) {
                    w[static_cast<std::size_t>(j)] = v;
                    worst[static_cast<std::size_t>(j)] =
                        std::max(worst[static_cast<std::size_t>(j)], operator_norm(hz - h(w)));
                }
            }
        });
        std::vector<HermitianMatrix> a;
        for (double w : worst) {
            a.push_back(w * HermitianMatrix::identity(d));
        }
        return a;
    }

    /// The independent-coordinates exchangeable pair with exact bounds and center.
    IndependentCoordinatesModel<int> model() const {
        auto self = *this;
        auto sampler = [probs = probs](Index, Rng& rng) {
            const double u = uniform01(rng);
            double c = 0.0;
            for (std::size_t v = 0; v < probs.size(); ++v) {
                c += probs[v];
                if (u < c) {
                    return static_cast<int>(v);
                }
            }
            return static_cast<int>(probs.size() - 1);
        };
        IndependentCoordinatesModel<int> mdl(n, d, sampler, [self](const std::vector<int>& z) { return self.h(z); });
        mdl.set_bounds(exact_bounds());
        mdl.set_center(exact_mean());
        return mdl;
    }
};

/// H(z) = sum_j z_j with standard normal coordinates (d = 1); used for coupling times.
inline IndependentCoordinatesModel<double> gaussian_sum_model(Index n) {
    return IndependentCoordinatesModel<double>(
        n, 1, [](Index, Rng& rng) { return standard_normal(rng); },
        [](const std::vector<double>& z) {
            double s = 0.0;
            for (double x : z) {
                s += x;
            }
            return HermitianMatrix::identity(1) * s;
        });
}

}  // namespace matconc
