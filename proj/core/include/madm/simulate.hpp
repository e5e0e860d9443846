#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "madm/model.hpp"
#include "madm/rng.hpp"
#include "madm/steady.hpp"

namespace madm {

/// Replica i of a run seeds its generator with stream_seed(cfg.seed, i).
std::uint64_t replica_stream_seed(std::uint64_t seed, long replica);

struct SimConfig {
    ModelParams params;
    std::uint64_t seed = 42;
    double t_burn = 0.0;
    double t_measure = 0.0;
    int replicas = 1;
    int threads = 0;  // <= 0: hardware concurrency
    TruncationPolicy pol{};

    void validate() const {
        if (!(t_burn >= 0.0)) throw std::invalid_argument("SimConfig: t_burn must be >= 0");
        if (!(t_measure > 0.0)) throw std::invalid_argument("SimConfig: t_measure must be > 0");
        if (replicas < 1) throw std::invalid_argument("SimConfig: replicas must be >= 1");
        pol.validate();
    }
};

/// Sojourn-time-weighted empirical statistics; per-replica histograms are
/// kept so replica scatter yields standard errors.
struct EmpiricalStats {
    int n_sites = 0;
    int replicas = 0;
    double total_time = 0.0;                              // summed over replicas
    std::vector<std::vector<double>> histogram;           // [site][m] sojourn weight, merged
    std::vector<std::vector<std::vector<double>>> replica_histogram;  // [replica][site][m]
    std::array<std::uint64_t, 6> event_counts{};          // indexed by EventKind
    std::vector<double> mean_occupation;                  // per site, replica-averaged
    std::vector<double> mean_occupation_std_error;        // per site, across replicas

    /// Time-fraction estimate of P(m_site = m), merged over replicas.
    double empirical_marginal(int site, int m) const;
};

/// Inverse-CDF draw of the injection size: smallest k with
/// sum_{j<=k} beta_eff^j/[j] >= u * phi_0(beta_eff).
int sample_injection_size(double beta_eff, QParam q, double u, const TruncationPolicy& pol);

struct StepResult {
    Event event;        // concrete event (injection size already drawn)
    double wait_time;   // exponential holding time spent in the old state
    Configuration next;
};

/// One Gillespie step: exponential waiting time at the total exit rate and
/// an event drawn proportionally to its rate.
StepResult step(const Configuration& state, Xoshiro256StarStar& rng, const ModelParams& p,
                const TruncationPolicy& pol);

/// Runs cfg.replicas independent trajectories from the empty lattice,
/// discards t_burn, accumulates sojourn-weighted histograms over t_measure
/// and merges in fixed replica order.  Bit-identical output for identical
/// (seed, cfg).
EmpiricalStats run(const SimConfig& cfg);

/// One empirical-vs-exact marginal comparison cell.
struct MarginalZ {
    int site;  // 1-based
    int m;
    double empirical;
    double exact;
    double std_error;  // replica scatter of the mean
    double z;
};

/// z-scores of empirical marginals against the exact evaluator for every
/// (site, m) with exact probability >= min_prob.  Needs >= 2 replicas.
std::vector<MarginalZ> compare_marginals(const EmpiricalStats& stats,
                                         const SteadyStateEvaluator& exact,
                                         double min_prob = 1e-4);

/// Same comparison against an arbitrary reference law (site, m) -> prob.
std::vector<MarginalZ> compare_marginals(const EmpiricalStats& stats,
                                         const std::function<double(int, int)>& reference,
                                         double min_prob = 1e-4);

}  // namespace madm
