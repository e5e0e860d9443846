#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "madm/qcalc.hpp"

namespace madm {

/// Complete physical specification of the boundary-driven MADM: asymmetry
/// gamma, reservoir densities beta_l / beta_r in (0,1), lattice length.
struct ModelParams {
    QParam q;
    double beta_l;
    double beta_r;
    int n_sites;

    ModelParams(QParam q_, double beta_l_, double beta_r_, int n_sites_)
        : q(q_), beta_l(beta_l_), beta_r(beta_r_), n_sites(n_sites_) {
        if (!(beta_l > 0.0) || !(beta_l < 1.0))
            throw std::invalid_argument("ModelParams: beta_l must lie in (0,1)");
        if (!(beta_r > 0.0) || !(beta_r < 1.0))
            throw std::invalid_argument("ModelParams: beta_r must lie in (0,1)");
        if (n_sites < 1) throw std::invalid_argument("ModelParams: n_sites must be >= 1");
    }

    double gamma() const noexcept { return q.gamma(); }
    /// Effective density of the right reservoir, gamma*beta_r.
    double beta_r_eff() const noexcept { return q.gamma() * beta_r; }
};

/// Occupation vector (m_1,...,m_N); entries are unbounded non-negative
/// integers.  Value type, freely copyable and shareable across threads.
class Configuration {
  public:
    Configuration() = default;
    explicit Configuration(std::vector<int> occupations) : occ_(std::move(occupations)) {
        for (int m : occ_) {
            if (m < 0) throw std::invalid_argument("Configuration: occupations must be >= 0");
        }
    }

    static Configuration zeros(int n_sites) {
        return Configuration(std::vector<int>(static_cast<std::size_t>(n_sites), 0));
    }

    int n_sites() const noexcept { return static_cast<int>(occ_.size()); }
    int operator[](int site0) const { return occ_[static_cast<std::size_t>(site0)]; }
    const std::vector<int>& occupations() const noexcept { return occ_; }

    int total_particles() const {
        int total = 0;
        for (int m : occ_) total += m;
        return total;
    }

    /// Copy with occupation at 0-based site shifted by delta (>= 0 after the
    /// shift, enforced).
    Configuration with_delta(int site0, int delta) const {
        Configuration out = *this;
        int& m = out.occ_[static_cast<std::size_t>(site0)];
        m += delta;
        if (m < 0) throw std::invalid_argument("Configuration: occupation would become negative");
        return out;
    }

    friend bool operator==(const Configuration&, const Configuration&) = default;

  private:
    std::vector<int> occ_;
};

enum class EventKind {
    BulkRight,     // k particles from site i to i+1, rate 1/[k]
    BulkLeft,      // k particles from site i to i-1, rate gamma^k/[k]
    InjectLeft,    // reservoir -> site 1, rate beta_l^k/[k]
    ExtractLeft,   // site 1 -> reservoir, rate gamma^k/[k]
    InjectRight,   // reservoir -> site N, rate (gamma beta_r)^k/[k]
    ExtractRight,  // site N -> reservoir, rate 1/[k]
};

const char* to_string(EventKind kind);

/// One Markov transition.  site is 1-based (paper convention).  For the two
/// injection kinds, k == 0 marks a reservoir aggregate carrying the total
/// rate phi_0(beta_eff) over all jump sizes; the size is drawn separately
/// when the aggregate fires (see simulate).
struct Event {
    EventKind kind;
    int site;
    int k;
    double rate;

    bool is_injection_aggregate() const noexcept {
        return k == 0 && (kind == EventKind::InjectLeft || kind == EventKind::InjectRight);
    }
};

/// All finite-k events enabled at c (k <= occupation of the source site)
/// plus one aggregate event per reservoir with its total injection rate.
std::vector<Event> enabled_events(const Configuration& c, const ModelParams& p,
                                  const TruncationPolicy& pol);

/// Sum of all event rates leaving c; equals
/// sum_i sum_{k<=m_i} (1+gamma^k)/[k] + phi_0(beta_l) + phi_0(gamma beta_r).
double total_exit_rate(const Configuration& c, const ModelParams& p, const TruncationPolicy& pol);

/// Applies a concrete event (k >= 1) to c and returns the new configuration.
Configuration apply_event(const Configuration& c, const Event& e);

/// Action of the Markov generator on a function f of configurations,
/// (L f)(c).  The two injection series truncate under the stopping rule, so
/// f must grow sub-geometrically in each occupation.
double apply_generator(const std::function<double(const Configuration&)>& f,
                       const Configuration& c, const ModelParams& p, const TruncationPolicy& pol);

/// Master-equation rate matrix restricted to {m : m_i <= m_cap}, stored as
/// triplets with entry (target,source) = rate(source->target) and diagonal
/// (s,s) = -total_exit_rate(s).  Transitions leaving the truncated space are
/// dropped; their total rate per source state is recorded in lost_rate, so
/// column sums equal -lost_rate exactly.
struct TruncatedGenerator {
    int n_sites = 0;
    int m_cap = 0;
    std::int64_t n_states = 0;
    std::vector<std::int64_t> row;  // target state index
    std::vector<std::int64_t> col;  // source state index
    std::vector<double> value;
    std::vector<double> lost_rate;  // per source state

    /// Mixed-radix lexicographic index, m_1 most significant.
    std::int64_t state_index(const Configuration& c) const;
    Configuration state_at(std::int64_t index) const;

    /// y = M x with x indexed by source state.
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> column_sums() const;
    std::vector<double> diagonal() const;
};

/// Hard guard: errors out above 10^7 states.
TruncatedGenerator build_truncated_generator(const ModelParams& p, int m_cap,
                                             const TruncationPolicy& pol = {});

}  // namespace madm
