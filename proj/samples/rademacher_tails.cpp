// Compares the empirical tail of lambda_max for a matrix Rademacher series
// with the bounded-differences bound and the exponential tail bound.
#include <iostream>

#include "matconc/bounds.hpp"

int main() {
    using namespace matconc;
    Rng rng = make_rng(7);
    const RademacherSeries r = RademacherSeries::random(10, 2, rng, 0.3);
    std::vector<double> lmax;
    for (int k = 0; k < 20000; ++k) {
        lmax.push_back(lambda_max(r.sample(rng)));
    }
    const double sigma2 = r.sigma2();
    const TailBoundParams p = best_params_without_c(operator_norm(r.v_x()), operator_norm(r.v_k()), r.dim());
    std::cout << "t,empirical,bdd_diff,thm_refined\n";
    for (double t : linear_grid(0.25, 3.0 * std::sqrt(sigma2), 10)) {
        std::cout << t << "," << empirical_exceedance(lmax, t) << "," << bdd_diff_bound_sigma2(sigma2, 2, t).tail
                  << "," << thm31_tails(p, t).max_tail_refined << "\n";
    }
    return 0;
}
