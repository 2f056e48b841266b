#pragma once

#include <functional>

namespace mflab {

/// n-node Gauss-Legendre quadrature on [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n = 64);

/// tanh-sinh (double-exponential) quadrature on [a, b]; robust to
/// integrable endpoint singularities.
double tanh_sinh(const std::function<double(double)>& f, double a, double b,
                 int levels = 9);

}  // namespace mflab
