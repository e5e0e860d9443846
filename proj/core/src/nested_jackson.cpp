#include "madm/nested_jackson.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace madm {
namespace {

// Evaluates the nested product integral by expanding each level on its
// geometric grid.  Every point reachable at any level is a*gamma^j or
// b*gamma^j (lower limits propagate inwards along the same two families),
// so (level, family, exponent) is an exact integer key.
class NestedProductIntegral {
  public:
    NestedProductIntegral(const std::vector<std::function<double(double)>>& weights, double a,
                          double b, QParam q, const TruncationPolicy& pol)
        : weights_(weights), base_{a, b}, q_(q), pol_(pol) {}

    double evaluate() { return integral_zero(1, 1, 0) - integral_zero(1, 0, 0); }

  private:
    static std::uint64_t pack(int level, int family, long exponent) {
        return (static_cast<std::uint64_t>(level * 2 + family) << 40) |
               static_cast<std::uint64_t>(exponent);
    }

    double point(int family, long exponent) const {
        return base_[family] * pow_int(q_.gamma(), exponent);
    }

    double weight_at(int level, int family, long exponent) {
        const std::uint64_t key = pack(level, family, exponent);
        auto it = weight_cache_.find(key);
        if (it != weight_cache_.end()) return it->second;
        const double value = weights_[static_cast<std::size_t>(level - 1)](point(family, exponent));
        weight_cache_.emplace(key, value);
        return value;
    }

    // int_{point}^{b} d_g t  w_level(t) * (next level from t)
    double tail_integral(int level, int family, long exponent) {
        if (level > n_levels()) return 1.0;
        return integral_zero(level, 1, 0) - integral_zero(level, family, exponent);
    }

    // int_0^{point} d_g t  w_level(t) * (next level from t)
    double integral_zero(int level, int family, long exponent) {
        const std::uint64_t key = pack(level, family, exponent);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        const double gamma = q_.gamma();
        const double x = point(family, exponent);
        double value = 0.0;
        if (x != 0.0) {
            double gn = 1.0;  // gamma^n
            const double sum = detail::sum_series(
                [&](long n) {
                    const long e = exponent + n;
                    const double term =
                        gn * weight_at(level, family, e) * tail_integral(level + 1, family, e);
                    gn *= gamma;
                    return term;
                },
                pol_, "nested_jackson_product");
            value = x * (1.0 - gamma) * sum;
        }
        memo_.emplace(key, value);
        return value;
    }

    int n_levels() const { return static_cast<int>(weights_.size()); }

    const std::vector<std::function<double(double)>>& weights_;
    double base_[2];
    QParam q_;
    TruncationPolicy pol_;
    std::unordered_map<std::uint64_t, double> memo_;
    std::unordered_map<std::uint64_t, double> weight_cache_;
};

}  // namespace

double nested_jackson_product(const std::vector<std::function<double(double)>>& weights, double a,
                              double b, QParam q, const TruncationPolicy& pol) {
    if (weights.empty()) throw std::invalid_argument("nested_jackson_product: no levels");
    pol.validate();
    return NestedProductIntegral(weights, a, b, q, pol).evaluate();
}

}  // namespace madm
