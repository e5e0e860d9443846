#pragma once

#include <functional>
#include <vector>

#include "madm/qcalc.hpp"

namespace madm {

/// Nested Jackson q-integral of a product integrand,
///
///   int_a^b d_g t_1 w_1(t_1) int_{t_1}^b d_g t_2 w_2(t_2) ...
///       int_{t_{N-1}}^b d_g t_N w_N(t_N),
///
/// evaluated by recursive geometric-grid expansion.  Every grid point at
/// every level has the exact form a*gamma^j or b*gamma^j, so inner levels
/// are memoized on integer keys (level, endpoint family, exponent); weight
/// values are cached per grid point as well.  The per-level grid is capped
/// at pol.max_terms evaluations.
double nested_jackson_product(const std::vector<std::function<double(double)>>& weights, double a,
                              double b, QParam q, const TruncationPolicy& pol);

}  // namespace madm
