#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "madm/errors.hpp"

namespace madm {

/// Asymmetry parameter gamma, restricted to the open interval (0,1).
class QParam {
  public:
    explicit QParam(double gamma) : gamma_(gamma) {
        if (!(gamma > 0.0) || !(gamma < 1.0)) {
            throw std::invalid_argument("QParam: gamma must lie in (0,1), got " +
                                        std::to_string(gamma));
        }
    }

    double gamma() const noexcept { return gamma_; }

  private:
    double gamma_;
};

/// Stopping rule shared by every truncated series in the library:
/// stop once |term| <= rel_tol*|partial_sum| + abs_tol, fail with
/// NonConvergenceError after max_terms terms.
struct TruncationPolicy {
    double rel_tol = 1e-13;
    double abs_tol = 1e-300;
    long max_terms = 10'000;

    void validate() const {
        if (!(rel_tol > 0.0)) throw std::invalid_argument("TruncationPolicy: rel_tol must be > 0");
        if (!(abs_tol >= 0.0)) throw std::invalid_argument("TruncationPolicy: abs_tol must be >= 0");
        if (max_terms < 1) throw std::invalid_argument("TruncationPolicy: max_terms must be >= 1");
    }
};

/// x^k for integer k >= 0 by binary exponentiation.
inline double pow_int(double x, long k) {
    double acc = 1.0;
    double base = x;
    while (k > 0) {
        if (k & 1) acc *= base;
        base *= base;
        k >>= 1;
    }
    return acc;
}

/// q-number [k] = (1 - gamma^k)/(1 - gamma).  Once gamma^k underflows the
/// limit value 1/(1-gamma) is returned exactly.
inline double q_number(long k, QParam q) {
    if (k < 0) throw std::invalid_argument("q_number: k must be >= 0");
    const double g = q.gamma();
    const double gk = pow_int(g, k);
    if (gk == 0.0) return 1.0 / (1.0 - g);
    return (1.0 - gk) / (1.0 - g);
}

namespace detail {

/// Kahan-compensated series summation under the TruncationPolicy stopping
/// rule.  term_at(n) supplies the n-th term, n = 0,1,2,...  The bound must
/// hold for two consecutive terms before the sum stops: an integrand factor
/// can vanish exactly at a single grid point (the inner integral of a
/// nested Jackson integral is zero at the upper endpoint) without the
/// series being finished.
template <class TermFn>
double sum_series(TermFn&& term_at, const TruncationPolicy& pol, const char* what) {
    double sum = 0.0;
    double comp = 0.0;
    bool previous_small = false;
    for (long n = 0; n < pol.max_terms; ++n) {
        const double term = term_at(n);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        const bool small = std::abs(term) <= pol.rel_tol * std::abs(sum) + pol.abs_tol;
        if (small && previous_small) return sum;
        previous_small = small;
    }
    throw NonConvergenceError(std::string(what) + ": stopping rule not met within " +
                              std::to_string(pol.max_terms) + " terms");
}

}  // namespace detail

/// q-derivative D_gamma G(x) = (G(gamma x) - G(x)) / (gamma x - x).
template <class F>
double q_derivative(F&& G, double x, QParam q) {
    if (x == 0.0) throw std::domain_error("q_derivative: undefined at x = 0");
    const double g = q.gamma();
    return (G(g * x) - G(x)) / (g * x - x);
}

/// Jackson q-integral from 0 to a:  a(1-gamma) sum_{n>=0} g(a gamma^n) gamma^n.
template <class F>
double jackson_integral_zero(F&& g, double a, QParam q, const TruncationPolicy& pol) {
    if (a == 0.0) return 0.0;
    const double gamma = q.gamma();
    double x = a;       // a * gamma^n
    double w = 1.0;     // gamma^n
    const double sum = detail::sum_series(
        [&](long) {
            const double term = w * g(x);
            x *= gamma;
            w *= gamma;
            return term;
        },
        pol, "jackson_integral_zero");
    return a * (1.0 - gamma) * sum;
}

/// Jackson q-integral with boundaries, int_a^b g d_gamma t.
template <class F>
double jackson_integral(F&& g, double a, double b, QParam q, const TruncationPolicy& pol) {
    return jackson_integral_zero(g, b, q, pol) - jackson_integral_zero(g, a, q, pol);
}

/// phi_m(beta) = sum_{k=m+1}^inf beta^k / [k].  Total reservoir injection
/// rate for m = 0, and the tail of the per-size rates in general.
inline double phi(long m, double beta, QParam q, const TruncationPolicy& pol) {
    if (m < 0) throw std::invalid_argument("phi: m must be >= 0");
    if (!(beta > 0.0) || !(beta < 1.0)) {
        throw std::invalid_argument("phi: beta must lie in (0,1), got " + std::to_string(beta));
    }
    double bk = pow_int(beta, m + 1);  // beta^k, k = m+1+n
    long k = m + 1;
    return detail::sum_series(
        [&](long) {
            const double term = bk / q_number(k, q);
            bk *= beta;
            ++k;
            return term;
        },
        pol, "phi");
}

}  // namespace madm
