#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "madm/steady.hpp"

using namespace madm;

namespace {

const TruncationPolicy kPol{};

Configuration conf(std::vector<int> occ) { return Configuration(std::move(occ)); }

double rel_err(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

double equilibrium_unnormalized(const std::vector<int>& m, double gamma, double beta) {
    double acc = pow_int(gamma - 1.0, static_cast<long>(m.size()));
    for (int mi : m) acc *= pow_int(beta, mi + 1) / (1.0 - beta);
    return acc;
}

void for_box(int n, int m_max, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> occ(static_cast<std::size_t>(n), 0);
    for (;;) {
        fn(occ);
        int i = n - 1;
        while (i >= 0 && occ[static_cast<std::size_t>(i)] == m_max) {
            occ[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) return;
        ++occ[static_cast<std::size_t>(i)];
    }
}

}  // namespace

TEST_CASE("steady_n1_sum against a direct 300-term series") {
    ModelParams p(QParam(0.5), 0.2, 0.8, 1);
    double oracle = 0.0;
    for (int k = 300; k >= 1; --k) oracle += (pow_int(0.4, k) - pow_int(0.2, k)) / q_number(k, p.q);
    CHECK(rel_err(steady_n1_sum(0, p, kPol), oracle) < 1e-13);
}

TEST_CASE("steady_n1_sum vanishes identically on the degenerate locus") {
    // 0.5 * 0.4 == 0.2 exactly in binary
    ModelParams p(QParam(0.5), 0.2, 0.4, 1);
    for (int m = 0; m <= 10; ++m) CHECK(steady_n1_sum(m, p, kPol) == 0.0);
}

TEST_CASE("steady_n1_sum equals the boundary Jackson integral") {
    // the 1e-12 agreement needs truncation tails below that level even at
    // gamma = 0.9, where a stopped series still carries ~9x its last term
    TruncationPolicy tight;
    tight.rel_tol = 1e-15;
    for (double gamma : {0.3, 0.6, 0.9}) {
        for (auto [bl, br] : {std::pair{0.2, 0.4}, {0.5, 0.5}, {0.7, 0.3}}) {
            ModelParams p(QParam(gamma), bl, br, 1);
            for (int m = 0; m <= 20; ++m) {
                const double series = steady_n1_sum(m, p, tight);
                const double integral = jackson_integral(
                    [m](double t) { return pow_int(t, m) / (1.0 - t); }, bl, gamma * br, p.q,
                    tight);
                CHECK(std::abs(series - integral) <= 1e-12 * std::abs(series));
            }
        }
    }
}

TEST_CASE("grid algorithm reduces to the N=1 series") {
    ModelParams p(QParam(0.6), 0.3, 0.7, 1);
    SteadyStateEvaluator ev(p, kPol);
    for (int m = 0; m <= 12; ++m) {
        CHECK(rel_err(ev.unnormalized_grid(conf({m})), steady_n1_sum(m, p, kPol)) < 1e-12);
    }
}

TEST_CASE("grid and recursion agree (spot checks)") {
    ModelParams p(QParam(0.6), 0.2, 0.8, 2);
    SteadyStateEvaluator ev(p, kPol);
    CHECK(rel_err(ev.unnormalized_grid(conf({0, 0})), ev.unnormalized(conf({0, 0}))) < 1e-10);

    ModelParams p3(QParam(0.6), 0.7, 0.3, 3);
    SteadyStateEvaluator ev3(p3, kPol);
    for_box(3, 2, [&](const std::vector<int>& m) {
        const Configuration c = conf(m);
        CHECK(rel_err(ev3.unnormalized_grid(c), ev3.unnormalized(c)) < 1e-10);
    });
}

TEST_CASE("grid algorithm vanishes on the degenerate locus") {
    ModelParams p(QParam(0.5), 0.2, 0.4, 2);
    SteadyStateEvaluator ev(p, kPol);
    CHECK(ev.unnormalized_grid(conf({0, 0})) == 0.0);
    CHECK(ev.unnormalized_grid(conf({2, 1})) == 0.0);
    CHECK(ev.normalization() == 0.0);
}

TEST_CASE("second-order resonance beta_l = gamma^2 beta_r degenerates for N=2") {
    // 0.2 == 0.5^2 * 0.8 exactly: the outer integral collapses onto the
    // single atom where the inner integral vanishes
    ModelParams p(QParam(0.5), 0.2, 0.8, 2);
    SteadyStateEvaluator ev(p, kPol);
    CHECK(ev.degenerate());
    const double scale = std::abs(steady_n1_sum(0, ModelParams(QParam(0.5), 0.2, 0.8, 1), kPol));
    CHECK(std::abs(ev.unnormalized(conf({0, 0}))) <= 1e-11 * scale);
    CHECK(ev.unnormalized_grid(conf({0, 0})) == 0.0);

    // the same parameters are regular for N=1
    ModelParams p1(QParam(0.5), 0.2, 0.8, 1);
    SteadyStateEvaluator ev1(p1, kPol);
    CHECK(!ev1.degenerate());

    // limit probabilities remain a proper distribution
    double sum = 0.0;
    for_box(2, 10, [&](const std::vector<int>& m) {
        const double prob = ev.probability(conf(m));
        CHECK(prob >= 0.0);
        sum += prob;
    });
    CHECK(sum <= 1.0 + 1e-5);
    CHECK(sum >= 0.99);
}

TEST_CASE("recursion base case is exactly the N=1 series") {
    ModelParams p(QParam(0.7), 0.4, 0.5, 1);
    SteadyStateEvaluator ev(p, kPol);
    for (int m = 0; m <= 8; ++m) CHECK(ev.unnormalized(conf({m})) == steady_n1_sum(m, p, kPol));
}

TEST_CASE("equilibrium closed forms") {
    for (double gamma : {0.4, 0.8}) {
        for (double beta : {0.3, 0.5}) {
            for (int n = 1; n <= 4; ++n) {
                ModelParams p(QParam(gamma), beta, beta, n);
                SteadyStateEvaluator ev(p, kPol);

                // c_N^eq = (gamma-1)^N beta^N / (1-beta)^{2N}
                const double c_eq = pow_int(gamma - 1.0, n) * pow_int(beta, n) /
                                    pow_int((1.0 - beta) * (1.0 - beta), n);
                CHECK(rel_err(ev.normalization(), c_eq) < 1e-10);

                for_box(n, 4, [&](const std::vector<int>& m) {
                    const Configuration c = conf(m);
                    CHECK(rel_err(ev.unnormalized(c), equilibrium_unnormalized(m, gamma, beta)) <
                          1e-10);
                    double product = 1.0;
                    for (int mi : m) product *= pow_int(beta, mi) * (1.0 - beta);
                    CHECK(rel_err(ev.probability(c), product) < 1e-10);
                });
            }
        }
    }
}

TEST_CASE("normalization matches direct summation for N=1") {
    ModelParams p(QParam(0.5), 0.2, 0.8, 1);
    SteadyStateEvaluator ev(p, kPol);
    double direct = 0.0;
    for (int m = 200; m >= 0; --m) direct += steady_n1_sum(m, p, kPol);
    CHECK(rel_err(ev.normalization(), direct) < 1e-11);
}

TEST_CASE("normalization and weights share sign, probabilities are positive") {
    // beta_l > gamma*beta_r flips the sign of every unnormalized quantity
    ModelParams p1(QParam(0.6), 0.7, 0.3, 1);
    SteadyStateEvaluator ev1(p1, kPol);
    CHECK(ev1.unnormalized(conf({0})) < 0.0);
    CHECK(ev1.normalization() < 0.0);
    CHECK(ev1.probability(conf({0})) > 0.0);
    CHECK(ev1.probability(conf({3})) > 0.0);

    ModelParams p2(QParam(0.6), 0.7, 0.3, 2);
    SteadyStateEvaluator ev2(p2, kPol);
    CHECK(ev2.unnormalized(conf({0, 0})) > 0.0);
    CHECK(ev2.normalization() > 0.0);
    CHECK(ev2.probability(conf({1, 2})) > 0.0);
}

TEST_CASE("probability box sum approaches one from below (driven case)") {
    ModelParams p(QParam(0.6), 0.2, 0.8, 2);
    SteadyStateEvaluator ev(p, kPol);
    double sum = 0.0;
    for_box(2, 8, [&](const std::vector<int>& m) { sum += ev.probability(conf(m)); });
    double tail_bound = 0.0;
    for (int site = 1; site <= 2; ++site) {
        double covered = 0.0;
        for (int m = 0; m <= 8; ++m) covered += ev.marginal(site, m);
        tail_bound += 1.0 - covered;
    }
    CHECK(sum <= 1.0 + 1e-10);
    CHECK(sum >= 1.0 - tail_bound - 1e-10);
}

TEST_CASE("probability at the degenerate built-in defaults") {
    ModelParams p(QParam(0.5), 0.2, 0.4, 2);
    SteadyStateEvaluator ev(p, kPol);
    CHECK(ev.degenerate());
    double sum = 0.0;
    for_box(2, 8, [&](const std::vector<int>& m) {
        const double prob = ev.probability(conf(m));
        CHECK(prob >= 0.0);
        CHECK(prob <= 1.0);
        sum += prob;
    });
    double tail_bound = 0.0;
    for (int site = 1; site <= 2; ++site) {
        double covered = 0.0;
        for (int m = 0; m <= 8; ++m) covered += ev.marginal(site, m);
        tail_bound += 1.0 - covered;
    }
    CHECK(sum <= 1.0 + 1e-5);
    CHECK(sum >= 1.0 - tail_bound - 1e-5);
}

TEST_CASE("rational-limit formula is approached as gamma -> 1") {
    const double bl = 0.3, br = 0.6;
    // normalized so the values sum to one; the series prefactor is
    // (1-beta_l)(1-beta_r)/(beta_r-beta_l)
    const auto limit = [&](int m) {
        double tail = 0.0;
        for (int k = 2000; k >= m + 1; --k) tail += (pow_int(br, k) - pow_int(bl, k)) / k;
        return (1.0 - bl) * (1.0 - br) / (br - bl) * tail;
    };
    TruncationPolicy pol;
    pol.max_terms = 200'000;
    ModelParams p(QParam(0.999), bl, br, 1);
    SteadyStateEvaluator ev(p, pol);
    for (int m = 0; m <= 6; ++m) {
        CHECK(std::abs(ev.probability(conf({m})) - limit(m)) < 1e-2);
    }
}

TEST_CASE("marginals: product law at equilibrium, unit mass, N=1 identity") {
    ModelParams p(QParam(0.6), 0.3, 0.3, 2);
    SteadyStateEvaluator ev(p, kPol);
    for (int site = 1; site <= 2; ++site) {
        double mass = 0.0;
        for (int m = 0; m <= 60; ++m) {
            const double got = ev.marginal(site, m);
            CHECK(rel_err(got, pow_int(0.3, m) * 0.7) < 1e-10);
            mass += got;
        }
        CHECK(std::abs(mass - 1.0) < 1e-10);
    }

    ModelParams p1(QParam(0.5), 0.2, 0.8, 1);
    SteadyStateEvaluator ev1(p1, kPol);
    for (int m = 0; m <= 6; ++m)
        CHECK(rel_err(ev1.marginal(1, m), ev1.probability(conf({m}))) < 1e-12);
}

TEST_CASE("marginal agrees with direct summation over the other site") {
    ModelParams p(QParam(0.6), 0.2, 0.8, 2);
    SteadyStateEvaluator ev(p, kPol);
    for (int m = 0; m <= 4; ++m) {
        double direct = 0.0;
        for (int other = 120; other >= 0; --other) direct += ev.probability(conf({m, other}));
        CHECK(rel_err(ev.marginal(1, m), direct) < 1e-9);
    }
}

TEST_CASE("mean occupation matches the marginal first moment") {
    ModelParams p(QParam(0.6), 0.2, 0.8, 2);
    SteadyStateEvaluator ev(p, kPol);
    for (int site = 1; site <= 2; ++site) {
        double moment = 0.0;
        for (int m = 120; m >= 1; --m) moment += m * ev.marginal(site, m);
        CHECK(rel_err(ev.mean_occupation(site), moment) < 1e-9);
    }
}

TEST_CASE("tails decay at least geometrically with the envelope ratio") {
    for (double gamma : {0.3, 0.6, 0.9}) {
        for (auto [bl, br] : {std::pair{0.2, 0.4}, {0.5, 0.5}, {0.7, 0.3}}) {
            ModelParams p(QParam(gamma), bl, br, 2);
            SteadyStateEvaluator ev(p, kPol);
            const double ratio_bound = std::max(gamma * br, bl);
            for (int site = 0; site < 2; ++site) {
                std::vector<int> occ{1, 1};
                for (int m = 1; m <= 6; ++m) {
                    occ[static_cast<std::size_t>(site)] = m;
                    const double lo = std::abs(ev.unnormalized(conf(occ)));
                    occ[static_cast<std::size_t>(site)] = m + 1;
                    const double hi = std::abs(ev.unnormalized(conf(occ)));
                    CHECK(hi <= ratio_bound * lo * (1.0 + 1e-9));
                }
            }
        }
    }
}

TEST_CASE("free-function wrappers") {
    ModelParams p(QParam(0.5), 0.2, 0.8, 2);
    const Configuration c = conf({1, 0});
    SteadyStateEvaluator ev(p, kPol);
    CHECK(steady_recursive(c, p, kPol) == ev.unnormalized(c));
    CHECK(rel_err(steady_unnormalized_grid(c, p, kPol), ev.unnormalized_grid(c)) < 1e-15);
    CHECK(normalization(p, kPol) == ev.normalization());
    CHECK(probability(c, p, kPol) == ev.probability(c));
    CHECK(marginal(1, 0, p, kPol) == ev.marginal(1, 0));
}
