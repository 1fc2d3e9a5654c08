// Estimates spin-spin correlations of a 16 x 16 Ising lattice and prints the
// deviation bound for a single sample.
#include <iostream>

#include "matconc/ising.hpp"

int main() {
    using namespace matconc;
    const Index n = 16;
    const Index d = 3;
    const double beta = 0.2;
    const CorrelationTruth truth = correlation_ground_truth(n, d, beta, 100, default_burn_in_sweeps(beta), 11);
    std::cout << correlation_table(truth.mean, truth.se).str();
    std::cout << "Dobrushin norm " << dobrushin_norm(beta) << " (threshold beta " << beta_dobrushin() << ")\n";
    for (double t : {0.5, 1.0, 2.0}) {
        std::cout << "P(||C_hat - C|| >= " << t << ") <= " << ising_tail_bound(n, d, beta, t) << "\n";
    }
    return 0;
}
