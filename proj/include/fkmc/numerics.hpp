// Small numerical utilities: adaptive quadrature and a few scalar helpers.
#pragma once

#include <functional>

namespace fkmc {

// Adaptive Simpson integration of f over [a,b] to absolute tolerance tol
// (halved per subdivision in the usual way).  Depth-limited; the limit is
// generous enough for the smooth integrands used here.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 40);

inline double sqr(double x) { return x * x; }

}  // namespace fkmc
