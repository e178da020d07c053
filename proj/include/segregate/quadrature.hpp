#pragma once

#include <vector>

namespace segregate {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
};

// Orders 4, 6, 8, 10, 12 and 16; throws InvalidArgument otherwise.
const GaussRule& gauss_rule(int order);

// Composite rule on [a, b] with panels no wider than `width`.
std::vector<double> composite_nodes(double a, double b, double width, const GaussRule& rule,
                                    std::vector<double>& weights);

}  // namespace segregate
