#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "madm/simulate.hpp"

using namespace madm;

namespace {

const TruncationPolicy kPol{};

}  // namespace

TEST_CASE("replica stream derivation") {
    CHECK(replica_stream_seed(42, 0) == 42);  // mix(0) == 0
    std::map<std::uint64_t, int> seen;
    for (long i = 0; i < 64; ++i) ++seen[replica_stream_seed(42, i)];
    CHECK(seen.size() == 64);
}

TEST_CASE("sample_injection_size edge behaviour") {
    QParam q(0.5);
    CHECK(sample_injection_size(0.5, q, 0.0, kPol) == 1);
    CHECK(sample_injection_size(0.5, q, 1e-12, kPol) == 1);
    // p(1) -> 1 as beta -> 0
    CHECK(sample_injection_size(1e-9, q, 0.999, kPol) == 1);
    CHECK_THROWS_AS(sample_injection_size(1.5, q, 0.5, kPol), std::invalid_argument);
}

TEST_CASE("sample_injection_size inverts the hand-built CDF") {
    const double beta = 0.5;
    QParam q(0.5);

    // tabulate p(k) = beta^k/[k] / phi_0 to 100 terms and invert by scanning
    double norm = 0.0;
    std::vector<double> weight(101, 0.0);
    for (int k = 1; k <= 100; ++k) {
        weight[static_cast<std::size_t>(k)] = pow_int(beta, k) / q_number(k, q);
        norm += weight[static_cast<std::size_t>(k)];
    }
    const auto invert = [&](double u) {
        double cum = 0.0;
        for (int k = 1; k <= 100; ++k) {
            cum += weight[static_cast<std::size_t>(k)] / norm;
            if (cum >= u) return k;
        }
        return 101;
    };

    for (double u : {0.1, 0.45, 0.71, 0.9, 0.97, 0.999}) {
        CHECK(sample_injection_size(beta, q, u, kPol) == invert(u));
    }
    CHECK(sample_injection_size(beta, q, 0.9, kPol) == invert(0.9));
}

TEST_CASE("step from the empty lattice must inject") {
    ModelParams p(QParam(0.5), 0.2, 0.4, 2);
    Xoshiro256StarStar rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const StepResult s = step(Configuration::zeros(2), rng, p, kPol);
        CHECK((s.event.kind == EventKind::InjectLeft || s.event.kind == EventKind::InjectRight));
        CHECK(s.event.k >= 1);
        CHECK(s.wait_time >= 0.0);
        CHECK(s.next.total_particles() == s.event.k);
    }
}

TEST_CASE("bulk events conserve the particle number") {
    ModelParams p(QParam(0.6), 0.4, 0.6, 3);
    Xoshiro256StarStar rng(123);
    Configuration state = Configuration::zeros(3);
    for (int i = 0; i < 20'000; ++i) {
        const StepResult s = step(state, rng, p, kPol);
        const int before = state.total_particles();
        const int after = s.next.total_particles();
        switch (s.event.kind) {
            case EventKind::BulkRight:
            case EventKind::BulkLeft: CHECK(after == before); break;
            case EventKind::InjectLeft:
            case EventKind::InjectRight: CHECK(after == before + s.event.k); break;
            case EventKind::ExtractLeft:
            case EventKind::ExtractRight: CHECK(after == before - s.event.k); break;
        }
        state = s.next;
    }
}

TEST_CASE("left-injection size frequencies match the series law") {
    ModelParams p(QParam(0.5), 0.5, 0.4, 1);
    Xoshiro256StarStar rng(2024);
    Configuration state = Configuration::zeros(1);
    long lefts = 0;
    long lefts_k1 = 0;
    for (long i = 0; i < 100'000; ++i) {
        const StepResult s = step(state, rng, p, kPol);
        if (s.event.kind == EventKind::InjectLeft) {
            ++lefts;
            if (s.event.k == 1) ++lefts_k1;
        }
        state = s.next;
    }
    const double want = p.beta_l / (q_number(1, p.q) * phi(0, p.beta_l, p.q, kPol));
    const double got = static_cast<double>(lefts_k1) / static_cast<double>(lefts);
    const double sigma = std::sqrt(want * (1.0 - want) / static_cast<double>(lefts));
    CHECK(std::abs(got - want) < 3.0 * sigma);
}

TEST_CASE("event frequencies from the most-visited states match the rates") {
    ModelParams p(QParam(0.5), 0.3, 0.6, 2);
    Xoshiro256StarStar rng(5);
    Configuration state = Configuration::zeros(2);

    struct PerState {
        long visits = 0;
        std::map<std::pair<int, int>, long> event_counts;  // (kind, k or 0 for aggregates)
    };
    std::map<std::vector<int>, PerState> table;
    for (long i = 0; i < 200'000; ++i) {
        const StepResult s = step(state, rng, p, kPol);
        auto& entry = table[state.occupations()];
        ++entry.visits;
        const bool injection =
            s.event.kind == EventKind::InjectLeft || s.event.kind == EventKind::InjectRight;
        ++entry.event_counts[{static_cast<int>(s.event.kind), injection ? 0 : s.event.k}];
        state = s.next;
    }

    std::vector<std::pair<long, std::vector<int>>> ranked;
    for (const auto& [occ, st] : table) ranked.push_back({st.visits, occ});
    std::sort(ranked.rbegin(), ranked.rend());

    for (int rank = 0; rank < 5 && rank < static_cast<int>(ranked.size()); ++rank) {
        const auto& occ = ranked[static_cast<std::size_t>(rank)].second;
        const PerState& st = table.at(occ);
        const Configuration c = Configuration(occ);
        const double total = total_exit_rate(c, p, kPol);
        for (const Event& e : enabled_events(c, p, kPol)) {
            const double share = e.rate / total;
            const long n = st.visits;
            const auto key = std::pair{static_cast<int>(e.kind), e.k};
            const auto it = st.event_counts.find(key);
            const double observed = it == st.event_counts.end() ? 0.0 : static_cast<double>(it->second);
            const double sigma = std::sqrt(static_cast<double>(n) * share * (1.0 - share));
            CHECK(std::abs(observed - n * share) <= 4.0 * sigma + 3.0);
        }
    }
}

TEST_CASE("run is deterministic for a fixed seed") {
    SimConfig cfg{ModelParams(QParam(0.5), 0.3, 0.6, 2)};
    cfg.seed = 99;
    cfg.t_burn = 10.0;
    cfg.t_measure = 500.0;
    cfg.replicas = 3;
    cfg.threads = 2;

    const EmpiricalStats a = run(cfg);
    const EmpiricalStats b = run(cfg);
    CHECK(a.total_time == b.total_time);
    CHECK(a.histogram == b.histogram);
    CHECK(a.replica_histogram == b.replica_histogram);
    CHECK(a.event_counts == b.event_counts);
    CHECK(a.mean_occupation == b.mean_occupation);
    CHECK(a.mean_occupation_std_error == b.mean_occupation_std_error);
}

TEST_CASE("sojourn weights account for exactly the measured window") {
    SimConfig cfg{ModelParams(QParam(0.5), 0.3, 0.5, 2)};
    cfg.seed = 4;
    cfg.t_burn = 25.0;
    cfg.t_measure = 300.0;
    cfg.replicas = 2;
    cfg.threads = 1;

    const EmpiricalStats stats = run(cfg);
    CHECK(stats.total_time == doctest::Approx(2 * 300.0).epsilon(1e-12));
    for (int site = 0; site < 2; ++site) {
        double mass = 0.0;
        for (double w : stats.histogram[static_cast<std::size_t>(site)]) mass += w;
        CHECK(mass == doctest::Approx(stats.total_time).epsilon(1e-9));
    }
    // per-replica rows sum to the per-replica window as well
    for (const auto& rh : stats.replica_histogram) {
        for (const auto& row : rh) {
            double mass = 0.0;
            for (double w : row) mass += w;
            CHECK(mass == doctest::Approx(300.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("equilibrium histograms agree with the geometric law within 4 sigma") {
    SimConfig cfg{ModelParams(QParam(0.5), 0.3, 0.3, 2)};
    cfg.seed = 31;
    cfg.t_burn = 200.0;
    cfg.t_measure = 20'000.0;
    cfg.replicas = 4;

    const EmpiricalStats stats = run(cfg);
    const auto geometric = [](int, int m) { return pow_int(0.3, m) * 0.7; };
    const auto zs = compare_marginals(stats, geometric, 1e-3);
    CHECK(!zs.empty());
    for (const auto& z : zs) CHECK(std::abs(z.z) < 4.0);
}

TEST_CASE("driven-case histograms agree with the exact marginals within 4 sigma") {
    ModelParams p(QParam(0.6), 0.25, 0.75, 2);
    SimConfig cfg{p};
    cfg.seed = 17;
    cfg.t_burn = 200.0;
    cfg.t_measure = 20'000.0;
    cfg.replicas = 4;

    const EmpiricalStats stats = run(cfg);
    SteadyStateEvaluator exact(p, kPol);
    const auto zs = compare_marginals(stats, exact, 1e-3);
    CHECK(!zs.empty());
    for (const auto& z : zs) CHECK(std::abs(z.z) < 4.0);

    // mean occupation with replica error bars against the exact moment
    for (int site = 1; site <= 2; ++site) {
        const double want = exact.mean_occupation(site);
        const double got = stats.mean_occupation[static_cast<std::size_t>(site - 1)];
        const double se = stats.mean_occupation_std_error[static_cast<std::size_t>(site - 1)];
        CHECK(std::abs(got - want) < 4.0 * se);
    }
}

TEST_CASE("high-density run grows occupations without any cap") {
    SimConfig cfg{ModelParams(QParam(0.5), 0.9, 0.9, 1)};
    cfg.seed = 8;
    cfg.t_burn = 0.0;
    cfg.t_measure = 2'000.0;
    cfg.replicas = 1;

    const EmpiricalStats stats = run(cfg);
    CHECK(stats.histogram[0].size() > 30);  // excursions far beyond the mean of ~9
}

TEST_CASE("SimConfig validation") {
    SimConfig cfg{ModelParams(QParam(0.5), 0.2, 0.4, 1)};
    cfg.t_measure = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.t_measure = 1.0;
    cfg.t_burn = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.t_burn = 0.0;
    cfg.replicas = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
