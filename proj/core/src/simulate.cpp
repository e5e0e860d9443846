#include "madm/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "madm/parallel.hpp"

namespace madm {

std::uint64_t replica_stream_seed(std::uint64_t seed, long replica) {
    return stream_seed(seed, replica);
}

int sample_injection_size(double beta_eff, QParam q, double u, const TruncationPolicy& pol) {
    if (!(beta_eff > 0.0) || !(beta_eff < 1.0))
        throw std::invalid_argument("sample_injection_size: beta_eff must lie in (0,1)");
    if (!(u >= 0.0) || !(u < 1.0))
        throw std::invalid_argument("sample_injection_size: u must lie in [0,1)");
    const double target = u * phi(0, beta_eff, q, pol);
    double partial = 0.0;
    double bk = 1.0;
    for (long k = 1; k <= pol.max_terms; ++k) {
        bk *= beta_eff;
        partial += bk / q_number(k, q);
        if (partial >= target) return static_cast<int>(k);
    }
    throw NonConvergenceError("sample_injection_size: CDF not reached within max_terms");
}

StepResult step(const Configuration& state, Xoshiro256StarStar& rng, const ModelParams& p,
                const TruncationPolicy& pol) {
    const std::vector<Event> events = enabled_events(state, p, pol);
    double total = 0.0;
    for (const Event& e : events) total += e.rate;

    const double wait = -std::log(1.0 - rng.uniform01()) / total;

    const double pick = rng.uniform01() * total;
    double cumulative = 0.0;
    std::size_t chosen = events.size() - 1;  // guard against rounding at the top end
    for (std::size_t i = 0; i < events.size(); ++i) {
        cumulative += events[i].rate;
        if (pick < cumulative) {
            chosen = i;
            break;
        }
    }

    Event event = events[chosen];
    if (event.is_injection_aggregate()) {
        const double beta_eff = event.kind == EventKind::InjectLeft ? p.beta_l : p.beta_r_eff();
        event.k = sample_injection_size(beta_eff, p.q, rng.uniform01(), pol);
        event.rate = pow_int(beta_eff, event.k) / q_number(event.k, p.q);
    }
    return {event, wait, apply_event(state, event)};
}

namespace {

struct ReplicaResult {
    std::vector<std::vector<double>> histogram;  // [site][m]
    std::array<std::uint64_t, 6> event_counts{};
    std::vector<double> occupation_time;  // per site: integral of m_site dt
    double measured_time = 0.0;
};

ReplicaResult run_replica(const SimConfig& cfg, long replica) {
    const int n = cfg.params.n_sites;
    Xoshiro256StarStar rng(replica_stream_seed(cfg.seed, replica));
    Configuration state = Configuration::zeros(n);

    ReplicaResult out;
    out.histogram.assign(static_cast<std::size_t>(n), {});
    out.occupation_time.assign(static_cast<std::size_t>(n), 0.0);

    const double t_end = cfg.t_burn + cfg.t_measure;
    double t = 0.0;
    while (t < t_end) {
        StepResult s = step(state, rng, cfg.params, cfg.pol);
        const double t_next = t + s.wait_time;

        // sojourn of the current state clipped to the measurement window
        const double overlap = std::min(t_next, t_end) - std::max(t, cfg.t_burn);
        if (overlap > 0.0) {
            for (int i = 0; i < n; ++i) {
                auto& hist = out.histogram[static_cast<std::size_t>(i)];
                const auto m = static_cast<std::size_t>(state[i]);
                if (hist.size() <= m) hist.resize(m + 1, 0.0);
                hist[m] += overlap;
                out.occupation_time[static_cast<std::size_t>(i)] += overlap * state[i];
            }
            out.measured_time += overlap;
        }
        if (t_next > cfg.t_burn && t_next <= t_end)
            ++out.event_counts[static_cast<std::size_t>(s.event.kind)];

        state = std::move(s.next);
        t = t_next;
    }
    return out;
}

}  // namespace

EmpiricalStats run(const SimConfig& cfg) {
    cfg.validate();
    const int n = cfg.params.n_sites;
    const int replicas = cfg.replicas;

    std::vector<ReplicaResult> results(static_cast<std::size_t>(replicas));
    parallel_for(replicas, cfg.threads,
                 [&](long r) { results[static_cast<std::size_t>(r)] = run_replica(cfg, r); });

    EmpiricalStats stats;
    stats.n_sites = n;
    stats.replicas = replicas;
    stats.histogram.assign(static_cast<std::size_t>(n), {});
    stats.replica_histogram.reserve(static_cast<std::size_t>(replicas));
    stats.mean_occupation.assign(static_cast<std::size_t>(n), 0.0);
    stats.mean_occupation_std_error.assign(static_cast<std::size_t>(n), 0.0);

    // merge in fixed replica order for determinism
    std::vector<std::vector<double>> replica_means(static_cast<std::size_t>(n));
    for (const ReplicaResult& r : results) {
        stats.total_time += r.measured_time;
        for (std::size_t kind = 0; kind < r.event_counts.size(); ++kind)
            stats.event_counts[kind] += r.event_counts[kind];
        for (int i = 0; i < n; ++i) {
            auto& merged = stats.histogram[static_cast<std::size_t>(i)];
            const auto& hist = r.histogram[static_cast<std::size_t>(i)];
            if (merged.size() < hist.size()) merged.resize(hist.size(), 0.0);
            for (std::size_t m = 0; m < hist.size(); ++m) merged[m] += hist[m];
            replica_means[static_cast<std::size_t>(i)].push_back(
                r.occupation_time[static_cast<std::size_t>(i)] / r.measured_time);
        }
        stats.replica_histogram.push_back(r.histogram);
    }

    for (int i = 0; i < n; ++i) {
        const auto& means = replica_means[static_cast<std::size_t>(i)];
        double mean = 0.0;
        for (double v : means) mean += v;
        mean /= static_cast<double>(replicas);
        stats.mean_occupation[static_cast<std::size_t>(i)] = mean;
        if (replicas > 1) {
            double ss = 0.0;
            for (double v : means) ss += (v - mean) * (v - mean);
            stats.mean_occupation_std_error[static_cast<std::size_t>(i)] =
                std::sqrt(ss / (replicas - 1.0) / replicas);
        }
    }
    return stats;
}

double EmpiricalStats::empirical_marginal(int site, int m) const {
    const auto& hist = histogram.at(static_cast<std::size_t>(site - 1));
    if (m < 0 || static_cast<std::size_t>(m) >= hist.size()) return 0.0;
    return hist[static_cast<std::size_t>(m)] / total_time;
}

std::vector<MarginalZ> compare_marginals(const EmpiricalStats& stats,
                                         const std::function<double(int, int)>& reference,
                                         double min_prob) {
    if (stats.replicas < 2)
        throw std::invalid_argument("compare_marginals: needs >= 2 replicas for error bars");
    std::vector<MarginalZ> out;
    const double replica_time = stats.total_time / stats.replicas;
    for (int site = 1; site <= stats.n_sites; ++site) {
        for (int m = 0; m <= 100'000; ++m) {
            const double exact = reference(site, m);
            if (exact < min_prob) {
                if (m > 0) break;  // marginals decay monotonically past the bulk of the mass
                continue;
            }
            double mean = 0.0;
            std::vector<double> per_replica;
            per_replica.reserve(static_cast<std::size_t>(stats.replicas));
            for (const auto& rh : stats.replica_histogram) {
                const auto& hist = rh[static_cast<std::size_t>(site - 1)];
                const double w =
                    static_cast<std::size_t>(m) < hist.size() ? hist[static_cast<std::size_t>(m)] : 0.0;
                per_replica.push_back(w / replica_time);
                mean += per_replica.back();
            }
            mean /= static_cast<double>(stats.replicas);
            double ss = 0.0;
            for (double v : per_replica) ss += (v - mean) * (v - mean);
            const double se = std::sqrt(ss / (stats.replicas - 1.0) / stats.replicas);
            const double z = se > 0.0 ? (mean - exact) / se
                                      : (mean == exact ? 0.0 : std::numeric_limits<double>::infinity());
            out.push_back({site, m, mean, exact, se, z});
        }
    }
    return out;
}

std::vector<MarginalZ> compare_marginals(const EmpiricalStats& stats,
                                         const SteadyStateEvaluator& exact, double min_prob) {
    return compare_marginals(
        stats, [&](int site, int m) { return exact.marginal(site, m); }, min_prob);
}

}  // namespace madm
