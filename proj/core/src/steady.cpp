#include "madm/steady.hpp"

#include <cmath>

#include "madm/nested_jackson.hpp"

namespace madm {

namespace {

constexpr double kDegenerateGuard = 1e-7;  // relative width of the degenerate locus
constexpr double kDegenerateShift = 1e-4;  // relative displacement of the limit evaluators

// The representation degenerates (all weights and the normalization vanish)
// whenever beta_l = gamma^{p+1} beta_r for some p in [0, N-1]: the Jackson
// interval then carries fewer grid atoms than integration levels.
bool is_degenerate(const ModelParams& p) {
    double resonance = p.beta_r_eff();
    for (int level = 0; level < p.n_sites; ++level) {
        if (std::abs(p.beta_l - resonance) <= kDegenerateGuard * std::max(p.beta_l, resonance))
            return true;
        resonance *= p.gamma();
    }
    return false;
}

std::function<double(double)> power_over_one_minus(int m) {
    return [m](double t) { return pow_int(t, m) / (1.0 - t); };
}

// sum_m t^m/(1-t) = 1/(1-t)^2, the weight of a summed-out site
double geometric_weight(double t) { return 1.0 / ((1.0 - t) * (1.0 - t)); }

// sum_m m t^m/(1-t) = t/(1-t)^3, the weight of a mean-occupation site
double mean_weight(double t) { return t / ((1.0 - t) * (1.0 - t) * (1.0 - t)); }

}  // namespace

double steady_n1_sum(int m, const ModelParams& p, const TruncationPolicy& pol) {
    if (m < 0) throw std::invalid_argument("steady_n1_sum: m must be >= 0");
    if (p.n_sites != 1) throw std::invalid_argument("steady_n1_sum: requires n_sites == 1");
    const double right = p.beta_r_eff();
    double rk = pow_int(right, m + 1);
    double lk = pow_int(p.beta_l, m + 1);
    long k = m + 1;
    return detail::sum_series(
        [&](long) {
            const double term = (rk - lk) / q_number(k, p.q);
            rk *= right;
            lk *= p.beta_l;
            ++k;
            return term;
        },
        pol, "steady_n1_sum");
}

SteadyStateEvaluator::SteadyStateEvaluator(ModelParams params, TruncationPolicy pol)
    : params_(params), pol_(pol), degenerate_(is_degenerate(params)) {
    pol_.validate();
}

std::size_t SteadyStateEvaluator::MemoKeyHash::operator()(const MemoKey& k) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (int v : k.prefix) {
        h ^= static_cast<std::size_t>(v) + 0x9E3779B97F4A7C15ULL;
        h *= 1099511628211ULL;
    }
    return h;
}

double SteadyStateEvaluator::memo_lookup(const MemoKey& key, bool& found) const {
    std::shared_lock lock(memo_mutex_);
    auto it = memo_.find(key);
    found = it != memo_.end();
    return found ? it->second : 0.0;
}

void SteadyStateEvaluator::memo_store(MemoKey key, double value) const {
    std::unique_lock lock(memo_mutex_);
    memo_.emplace(std::move(key), value);
}

// Site-peeling recursion: the innermost integral of the nested
// representation evaluates to phi_{m_L}(gamma beta_r) - phi_{m_L}(t_{L-1}),
// and expanding phi of the running variable in powers turns the second
// part into a tail sum of shorter weights with the last occupation raised:
//
//   mu~_L(m_1..m_L) = mu~_{L-1}(m_1..m_{L-1}) phi_{m_L}(gamma beta_r)
//                     - sum_{k>m_L} mu~_{L-1}(m_1..m_{L-1}+k) / [k]
double SteadyStateEvaluator::recursive_weight(std::vector<int>& prefix) const {
    MemoKey key{prefix};
    bool found = false;
    const double cached = memo_lookup(key, found);
    if (found) return cached;

    const int level = static_cast<int>(prefix.size());
    double value;
    if (level == 1) {
        ModelParams one_site(params_.q, params_.beta_l, params_.beta_r, 1);
        value = steady_n1_sum(prefix[0], one_site, pol_);
    } else {
        const int m_last = prefix.back();
        std::vector<int> shorter(prefix.begin(), prefix.end() - 1);
        const int base_last = shorter.back();

        const double head = recursive_weight(shorter) * phi(m_last, params_.beta_r_eff(), params_.q, pol_);
        long k = m_last + 1;
        const double tail = detail::sum_series(
            [&](long) {
                shorter.back() = base_last + static_cast<int>(k);
                const double term = recursive_weight(shorter) / q_number(k, params_.q);
                ++k;
                return term;
            },
            pol_, "steady recursion tail");
        value = head - tail;
    }
    memo_store(std::move(key), value);
    return value;
}

double SteadyStateEvaluator::unnormalized(const Configuration& c) const {
    if (c.n_sites() != params_.n_sites)
        throw std::invalid_argument("SteadyStateEvaluator: configuration length mismatch");
    std::vector<int> prefix = c.occupations();
    return recursive_weight(prefix);
}

double SteadyStateEvaluator::unnormalized_grid(const Configuration& c) const {
    if (c.n_sites() != params_.n_sites)
        throw std::invalid_argument("SteadyStateEvaluator: configuration length mismatch");
    std::vector<std::function<double(double)>> weights;
    weights.reserve(static_cast<std::size_t>(params_.n_sites));
    for (int i = 0; i < params_.n_sites; ++i) weights.push_back(power_over_one_minus(c[i]));
    return nested_jackson_product(weights, params_.beta_l, params_.beta_r_eff(), params_.q, pol_);
}

double SteadyStateEvaluator::normalization() const {
    {
        std::scoped_lock lock(lazy_mutex_);
        if (normalization_) return *normalization_;
    }
    std::vector<std::function<double(double)>> weights(
        static_cast<std::size_t>(params_.n_sites), geometric_weight);
    const double c_n =
        nested_jackson_product(weights, params_.beta_l, params_.beta_r_eff(), params_.q, pol_);
    std::scoped_lock lock(lazy_mutex_);
    normalization_ = c_n;
    return c_n;
}

const SteadyStateEvaluator& SteadyStateEvaluator::shifted(int side) const {
    std::scoped_lock lock(lazy_mutex_);
    auto& slot = shifted_[side];
    if (!slot) {
        // displace beta_l off the resonance on both sides; averaging the two
        // evaluations cancels the O(eps) term of the ratio
        double eps = kDegenerateShift;
        if (params_.beta_l * (1.0 + eps) >= 1.0) eps = 0.5 * (1.0 - params_.beta_l) / params_.beta_l;
        const double beta_l = params_.beta_l * (side == 0 ? 1.0 - eps : 1.0 + eps);
        slot = std::make_unique<SteadyStateEvaluator>(
            ModelParams(params_.q, beta_l, params_.beta_r, params_.n_sites), pol_);
    }
    return *slot;
}

double SteadyStateEvaluator::probability(const Configuration& c) const {
    if (degenerate_) return 0.5 * (shifted(0).probability(c) + shifted(1).probability(c));
    return unnormalized(c) / normalization();
}

double SteadyStateEvaluator::marginal(int site, int m) const {
    if (site < 1 || site > params_.n_sites)
        throw std::invalid_argument("marginal: site must lie in 1..n_sites");
    if (m < 0) throw std::invalid_argument("marginal: m must be >= 0");
    if (degenerate_) return 0.5 * (shifted(0).marginal(site, m) + shifted(1).marginal(site, m));

    std::vector<std::function<double(double)>> weights(
        static_cast<std::size_t>(params_.n_sites), geometric_weight);
    weights[static_cast<std::size_t>(site - 1)] = power_over_one_minus(m);
    const double w =
        nested_jackson_product(weights, params_.beta_l, params_.beta_r_eff(), params_.q, pol_);
    return w / normalization();
}

double SteadyStateEvaluator::mean_occupation(int site) const {
    if (site < 1 || site > params_.n_sites)
        throw std::invalid_argument("mean_occupation: site must lie in 1..n_sites");
    if (degenerate_)
        return 0.5 * (shifted(0).mean_occupation(site) + shifted(1).mean_occupation(site));

    std::vector<std::function<double(double)>> weights(
        static_cast<std::size_t>(params_.n_sites), geometric_weight);
    weights[static_cast<std::size_t>(site - 1)] = mean_weight;
    const double w =
        nested_jackson_product(weights, params_.beta_l, params_.beta_r_eff(), params_.q, pol_);
    return w / normalization();
}

double steady_unnormalized_grid(const Configuration& c, const ModelParams& p,
                                const TruncationPolicy& pol) {
    return SteadyStateEvaluator(p, pol).unnormalized_grid(c);
}

double steady_recursive(const Configuration& c, const ModelParams& p,
                        const TruncationPolicy& pol) {
    return SteadyStateEvaluator(p, pol).unnormalized(c);
}

double normalization(const ModelParams& p, const TruncationPolicy& pol) {
    return SteadyStateEvaluator(p, pol).normalization();
}

double probability(const Configuration& c, const ModelParams& p, const TruncationPolicy& pol) {
    return SteadyStateEvaluator(p, pol).probability(c);
}

double marginal(int site, int m, const ModelParams& p, const TruncationPolicy& pol) {
    return SteadyStateEvaluator(p, pol).marginal(site, m);
}

}  // namespace madm
