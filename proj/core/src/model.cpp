#include "madm/model.hpp"

#include <cmath>
#include <string>

namespace madm {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::BulkRight: return "bulk-right";
        case EventKind::BulkLeft: return "bulk-left";
        case EventKind::InjectLeft: return "inject-left";
        case EventKind::ExtractLeft: return "extract-left";
        case EventKind::InjectRight: return "inject-right";
        case EventKind::ExtractRight: return "extract-right";
    }
    return "unknown";
}

std::vector<Event> enabled_events(const Configuration& c, const ModelParams& p,
                                  const TruncationPolicy& pol) {
    if (c.n_sites() != p.n_sites)
        throw std::invalid_argument("enabled_events: configuration length mismatch");
    const double gamma = p.gamma();
    const int n = p.n_sites;

    std::vector<Event> events;
    for (int i = 0; i < n; ++i) {
        const int m = c[i];
        double gk = 1.0;  // gamma^k
        for (int k = 1; k <= m; ++k) {
            gk *= gamma;
            const double inv_qk = 1.0 / q_number(k, p.q);
            if (i + 1 < n) events.push_back({EventKind::BulkRight, i + 1, k, inv_qk});
            if (i > 0) events.push_back({EventKind::BulkLeft, i + 1, k, gk * inv_qk});
            if (i == 0) events.push_back({EventKind::ExtractLeft, 1, k, gk * inv_qk});
            if (i + 1 == n) events.push_back({EventKind::ExtractRight, n, k, inv_qk});
        }
    }
    events.push_back({EventKind::InjectLeft, 1, 0, phi(0, p.beta_l, p.q, pol)});
    events.push_back({EventKind::InjectRight, n, 0, phi(0, p.beta_r_eff(), p.q, pol)});
    return events;
}

double total_exit_rate(const Configuration& c, const ModelParams& p, const TruncationPolicy& pol) {
    if (c.n_sites() != p.n_sites)
        throw std::invalid_argument("total_exit_rate: configuration length mismatch");
    const double gamma = p.gamma();
    double total = 0.0;
    for (int i = 0; i < p.n_sites; ++i) {
        double gk = 1.0;
        for (int k = 1; k <= c[i]; ++k) {
            gk *= gamma;
            total += (1.0 + gk) / q_number(k, p.q);
        }
    }
    total += phi(0, p.beta_l, p.q, pol);
    total += phi(0, p.beta_r_eff(), p.q, pol);
    return total;
}

Configuration apply_event(const Configuration& c, const Event& e) {
    if (e.k < 1) throw std::invalid_argument("apply_event: event must carry a concrete size k >= 1");
    const int i = e.site - 1;
    switch (e.kind) {
        case EventKind::BulkRight: return c.with_delta(i, -e.k).with_delta(i + 1, e.k);
        case EventKind::BulkLeft: return c.with_delta(i, -e.k).with_delta(i - 1, e.k);
        case EventKind::InjectLeft:
        case EventKind::InjectRight: return c.with_delta(i, e.k);
        case EventKind::ExtractLeft:
        case EventKind::ExtractRight: return c.with_delta(i, -e.k);
    }
    throw std::invalid_argument("apply_event: unknown event kind");
}

double apply_generator(const std::function<double(const Configuration&)>& f,
                       const Configuration& c, const ModelParams& p, const TruncationPolicy& pol) {
    if (c.n_sites() != p.n_sites)
        throw std::invalid_argument("apply_generator: configuration length mismatch");
    const double gamma = p.gamma();
    const int n = p.n_sites;
    const double fc = f(c);
    double result = 0.0;

    // bulk density terms
    for (int i = 0; i + 1 < n; ++i) {
        double gk = 1.0;
        for (int k = 1; k <= c[i]; ++k) {
            result += (f(c.with_delta(i, -k).with_delta(i + 1, k)) - fc) / q_number(k, p.q);
        }
        for (int k = 1; k <= c[i + 1]; ++k) {
            gk *= gamma;
            result += gk * (f(c.with_delta(i, k).with_delta(i + 1, -k)) - fc) / q_number(k, p.q);
        }
    }

    // left boundary: extraction plus the infinite injection series
    {
        double gk = 1.0;
        for (int k = 1; k <= c[0]; ++k) {
            gk *= gamma;
            result += gk * (f(c.with_delta(0, -k)) - fc) / q_number(k, p.q);
        }
        double bk = 1.0;
        long k = 0;
        result += detail::sum_series(
            [&](long) {
                bk *= p.beta_l;
                ++k;
                return bk * (f(c.with_delta(0, static_cast<int>(k))) - fc) / q_number(k, p.q);
            },
            pol, "apply_generator: left injection series");
    }

    // right boundary
    {
        for (int k = 1; k <= c[n - 1]; ++k) {
            result += (f(c.with_delta(n - 1, -k)) - fc) / q_number(k, p.q);
        }
        const double beta_eff = p.beta_r_eff();
        double bk = 1.0;
        long k = 0;
        result += detail::sum_series(
            [&](long) {
                bk *= beta_eff;
                ++k;
                return bk * (f(c.with_delta(n - 1, static_cast<int>(k))) - fc) / q_number(k, p.q);
            },
            pol, "apply_generator: right injection series");
    }
    return result;
}

std::int64_t TruncatedGenerator::state_index(const Configuration& c) const {
    std::int64_t index = 0;
    for (int i = 0; i < n_sites; ++i) index = index * (m_cap + 1) + c[i];
    return index;
}

Configuration TruncatedGenerator::state_at(std::int64_t index) const {
    std::vector<int> occ(static_cast<std::size_t>(n_sites));
    for (int i = n_sites - 1; i >= 0; --i) {
        occ[static_cast<std::size_t>(i)] = static_cast<int>(index % (m_cap + 1));
        index /= (m_cap + 1);
    }
    return Configuration(std::move(occ));
}

std::vector<double> TruncatedGenerator::multiply(std::span<const double> x) const {
    if (static_cast<std::int64_t>(x.size()) != n_states)
        throw std::invalid_argument("TruncatedGenerator::multiply: size mismatch");
    std::vector<double> y(static_cast<std::size_t>(n_states), 0.0);
    for (std::size_t t = 0; t < value.size(); ++t) {
        y[static_cast<std::size_t>(row[t])] += value[t] * x[static_cast<std::size_t>(col[t])];
    }
    return y;
}

std::vector<double> TruncatedGenerator::column_sums() const {
    std::vector<double> sums(static_cast<std::size_t>(n_states), 0.0);
    for (std::size_t t = 0; t < value.size(); ++t)
        sums[static_cast<std::size_t>(col[t])] += value[t];
    return sums;
}

std::vector<double> TruncatedGenerator::diagonal() const {
    std::vector<double> diag(static_cast<std::size_t>(n_states), 0.0);
    for (std::size_t t = 0; t < value.size(); ++t)
        if (row[t] == col[t]) diag[static_cast<std::size_t>(row[t])] += value[t];
    return diag;
}

TruncatedGenerator build_truncated_generator(const ModelParams& p, int m_cap,
                                             const TruncationPolicy& pol) {
    if (m_cap < 0) throw std::invalid_argument("build_truncated_generator: m_cap must be >= 0");
    constexpr std::int64_t kMaxStates = 10'000'000;
    std::int64_t n_states = 1;
    for (int i = 0; i < p.n_sites; ++i) {
        n_states *= (m_cap + 1);
        if (n_states > kMaxStates)
            throw StateSpaceTooLargeError("build_truncated_generator: more than 1e7 states");
    }

    TruncatedGenerator gen;
    gen.n_sites = p.n_sites;
    gen.m_cap = m_cap;
    gen.n_states = n_states;
    gen.lost_rate.assign(static_cast<std::size_t>(n_states), 0.0);

    const int n = p.n_sites;
    for (std::int64_t s = 0; s < n_states; ++s) {
        const Configuration c = gen.state_at(s);
        double lost = 0.0;

        gen.row.push_back(s);
        gen.col.push_back(s);
        gen.value.push_back(-total_exit_rate(c, p, pol));

        const auto push = [&](const Configuration& target, double rate) {
            bool inside = true;
            for (int i = 0; i < n; ++i) inside = inside && target[i] <= m_cap;
            if (inside) {
                gen.row.push_back(gen.state_index(target));
                gen.col.push_back(s);
                gen.value.push_back(rate);
            } else {
                lost += rate;
            }
        };

        for (const Event& e : enabled_events(c, p, pol)) {
            if (e.is_injection_aggregate()) continue;
            push(apply_event(c, e), e.rate);
        }

        // injections: sizes up to the cap stay inside, the phi tail leaks out
        const double betas[2] = {p.beta_l, p.beta_r_eff()};
        const int sites[2] = {0, n - 1};
        for (int b = 0; b < 2; ++b) {
            const int room = m_cap - c[sites[b]];
            double bk = 1.0;
            for (int k = 1; k <= room; ++k) {
                bk *= betas[b];
                push(c.with_delta(sites[b], k), bk / q_number(k, p.q));
            }
            lost += phi(room, betas[b], p.q, pol);
        }

        gen.lost_rate[static_cast<std::size_t>(s)] = lost;
    }
    return gen;
}

}  // namespace madm
