// Evaluates the exponential mean value trace inequality on random inputs and
// shows the scalar counterexample to the polynomial signed form.
#include <iostream>

#include "matconc/fuzz.hpp"

int main() {
    using namespace matconc;
    Rng rng = make_rng(2024);
    const HermitianMatrix a = random_hermitian(3, rng);
    const HermitianMatrix b = random_hermitian(3, rng);
    const HermitianMatrix c = random_hermitian(3, rng);
    for (double s : {0.1, 1.0, 10.0}) {
        const InequalityGap g = emvti_gap(a, b, c, s);
        std::cout << "emvti s=" << s << ": lhs " << g.lhs << " <= rhs " << g.rhs << "\n";
    }

    const auto scalar = [](double x) { return HermitianMatrix::identity(1) * x; };
    const InequalityGap poly = conjecture_poly_gap(scalar(0.1), scalar(-1.0), scalar(-1.0), 2, 3.0);
    std::cout << "signed polynomial form, a=0.1 b=-1 c=-1 q=2 s=3: lhs " << poly.lhs << ", rhs " << poly.rhs
              << (poly.holds ? " (holds)\n" : " (violated)\n");

    const FuzzReport rep = fuzz(Inequality::conjecture_exp, 2000, SamplerConfig{}, 1);
    std::cout << "signed exponential form, 2000 random trials: " << rep.violation_count
              << " violations, min gap/scale " << rep.min_gap_over_scale << "\n";
    return 0;
}
