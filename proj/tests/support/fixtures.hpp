#pragma once

#include <string>
#include <vector>

#include "eyring/wellspec.hpp"

namespace eyring::testing {

inline Point pt(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p[i++] = x;
    return p;
}

inline VectorExpression field(const std::vector<std::string>& components, std::size_t d) {
    VectorExpression v;
    for (const auto& c : components) v.push_back(parse(c, d));
    return v;
}

/// f = ½|x|², ℓ = sign·(x1 x2, −x1²), Ω = D((0,−1), 2).
inline ProblemSpec worked_disc(double sign, SolverOptions options = {}) {
    VectorExpression ell;
    if (sign == 0.0)
        ell = field({"0", "0"}, 2);
    else if (sign > 0.0)
        ell = field({"x1*x2", "-x1^2"}, 2);
    else
        ell = field({"-x1*x2", "x1^2"}, 2);
    return ProblemSpec{2, parse("0.5*(x1^2+x2^2)", 2), std::move(ell),
                       ImplicitDomain::ball(pt({0.0, -1.0}), 2.0), pt({0.0, 0.0}), options};
}

/// f = x²/2, ℓ = 0, Ω = (−1, 2).
inline ProblemSpec interval(SolverOptions options = {}) {
    Box box;
    box.axes = {{-1.0, 2.0}};
    return ProblemSpec{1, parse("x1^2/2", 1), field({"0"}, 1),
                       ImplicitDomain(parse("(x1+1)*(x1-2)", 1), box), pt({0.0}), options};
}

/// f = ½|x|², ℓ = 0, Ω = {x1²/4 + x2² < 1}: two symmetric saddles (0, ±1).
inline ProblemSpec ellipse(SolverOptions options = {}) {
    Box box;
    box.axes = {{-2.0, 2.0}, {-1.0, 1.0}};
    return ProblemSpec{2, parse("0.5*(x1^2+x2^2)", 2), field({"0", "0"}, 2),
                       ImplicitDomain(parse("x1^2/4 + x2^2 - 1", 2), box), pt({0.0, 0.0}), options};
}

}  // namespace eyring::testing
