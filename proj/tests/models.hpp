#pragma once

#include <cmath>
#include <vector>

#include "matconc/models.hpp"

// Small exhaustively enumerable models shared by unit and acceptance tests.
namespace testmodel {

using matconc::GeneralMatrix;
using matconc::HermitianMatrix;
using matconc::Index;
using matconc::Rng;

/// Adds the exact conditional variance used as an oracle for the Monte Carlo estimator.
struct FiniteCoordinates : matconc::FiniteCoordinates {
    static FiniteCoordinates random(Index n, Index d, double coupling, std::uint64_t seed) {
        FiniteCoordinates f;
        static_cast<matconc::FiniteCoordinates&>(f) = matconc::FiniteCoordinates::random(n, d, coupling, seed);
        return f;
    }

    /// (1/2) E[(H(z) - H(Z'))^2 | Z = z].
    HermitianMatrix exact_v_x(const std::vector<int>& z) const {
        const HermitianMatrix hz = h(z);
        GeneralMatrix acc = GeneralMatrix::Zero(d, d);
        for (Index j = 0; j < n; ++j) {
            std::vector<int> w = z;
            for (int v = 0; v < m(); ++v) {
                w[static_cast<std::size_t>(j)] = v;
                const HermitianMatrix diff = hz - h(w);
                acc += (probs[static_cast<std::size_t>(v)] / static_cast<double>(n)) * (diff.matrix() * diff.matrix());
            }
        }
        return HermitianMatrix::hermitian_part(0.5 * acc);
    }
};

}  // namespace testmodel
