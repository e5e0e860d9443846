#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "madm/model.hpp"

namespace madm {

/// N=1 unnormalized steady-state weight,
///   mu~(m) = sum_{k=m+1}^inf ((gamma beta_r)^k - beta_l^k) / [k].
/// Negative when beta_l > gamma*beta_r; the normalization shares the sign.
double steady_n1_sum(int m, const ModelParams& p, const TruncationPolicy& pol);

/// Exact stationary-measure evaluator.  Bundles ModelParams and a
/// TruncationPolicy with a memo of unnormalized weights; immutable after
/// construction except for the memo, which takes concurrent reads with
/// serialized inserts, so evaluations at distinct configurations may run in
/// parallel.
///
/// Two independent algorithms are exposed: the site-peeling recursion
/// (primary path behind unnormalized/probability) and the nested
/// geometric-grid integral (unnormalized_grid), each serving as the
/// other's oracle.
///
/// The loci beta_l == gamma^{p+1}*beta_r, p in [0, n_sites-1], are
/// degenerate for this representation: every unnormalized weight and the
/// normalization vanish identically (the Jackson interval carries fewer
/// grid atoms than integration levels) and only their ratio carries
/// information.  Normalized quantities (probability, marginal,
/// mean_occupation) are then evaluated as the parameter limit by averaging
/// two evaluators displaced to beta_l*(1 +- eps), accurate to O(eps^2).
class SteadyStateEvaluator {
  public:
    explicit SteadyStateEvaluator(ModelParams params, TruncationPolicy pol = {});

    const ModelParams& params() const noexcept { return params_; }
    const TruncationPolicy& policy() const noexcept { return pol_; }

    /// True when beta_l sits on (or within guard distance of) one of the
    /// degenerate loci gamma^{p+1}*beta_r, p < n_sites.
    bool degenerate() const noexcept { return degenerate_; }

    /// mu~ via the site-peeling recursion (exact series form).
    double unnormalized(const Configuration& c) const;

    /// mu~ via the nested Jackson-integral grid algorithm.
    double unnormalized_grid(const Configuration& c) const;

    /// c_N = sum over all configurations of mu~, computed as the nested
    /// integral of prod 1/(1-t_i)^2.  Cached after the first call.
    double normalization() const;

    /// mu(c) = unnormalized(c) / normalization(), in [0,1].
    double probability(const Configuration& c) const;

    /// P(m_site = m); site is 1-based.
    double marginal(int site, int m) const;

    /// E[m_site]; site is 1-based.
    double mean_occupation(int site) const;

  private:
    struct MemoKey {
        std::vector<int> prefix;  // (m_1,...,m_level); level = prefix.size()
        bool operator==(const MemoKey&) const = default;
    };
    struct MemoKeyHash {
        std::size_t operator()(const MemoKey& k) const noexcept;
    };

    double recursive_weight(std::vector<int>& prefix) const;
    double memo_lookup(const MemoKey& key, bool& found) const;
    void memo_store(MemoKey key, double value) const;
    const SteadyStateEvaluator& shifted(int side) const;  // side: 0 low, 1 high

    ModelParams params_;
    TruncationPolicy pol_;
    bool degenerate_ = false;

    mutable std::shared_mutex memo_mutex_;
    mutable std::unordered_map<MemoKey, double, MemoKeyHash> memo_;

    mutable std::mutex lazy_mutex_;
    mutable std::optional<double> normalization_;
    mutable std::unique_ptr<SteadyStateEvaluator> shifted_[2];
};

/// Free-function forms of the evaluator operations (transient evaluator per
/// call; prefer the class when evaluating many configurations).
double steady_unnormalized_grid(const Configuration& c, const ModelParams& p,
                                const TruncationPolicy& pol);
double steady_recursive(const Configuration& c, const ModelParams& p, const TruncationPolicy& pol);
double normalization(const ModelParams& p, const TruncationPolicy& pol);
double probability(const Configuration& c, const ModelParams& p, const TruncationPolicy& pol);
double marginal(int site, int m, const ModelParams& p, const TruncationPolicy& pol);

}  // namespace madm
