#include "madm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "madm/nested_jackson.hpp"
#include "madm/parallel.hpp"
#include "madm/rng.hpp"

namespace madm {

namespace {

double f_lambda(double t, double lambda) { return 1.0 / ((1.0 - t) * (1.0 - lambda * t)); }

// q-antiderivative of f_lambda with integration constant C:
//   F_lambda(t) = (1/(1-lambda)) sum_{k>=1} t^k (1-lambda^k)/[k] + C
double F_lambda(double t, double lambda, QParam q, const TruncationPolicy& pol, double C = 0.0) {
    if (t == 0.0) return C;
    double tk = 1.0;
    double lk = 1.0;
    long k = 0;
    const double sum = detail::sum_series(
        [&](long) {
            tk *= t;
            lk *= lambda;
            ++k;
            return tk * (1.0 - lk) / q_number(k, q);
        },
        pol, "F_lambda");
    return sum / (1.0 - lambda) + C;
}

std::function<double(const Configuration&)> measure_function(const SteadyStateEvaluator& ev) {
    // Away from the degenerate locus the unnormalized weight is cheapest and
    // the balance is homogeneous in mu; on it only the limit probability is
    // meaningful.
    if (ev.degenerate()) {
        return [&ev](const Configuration& c) { return ev.probability(c); };
    }
    return [&ev](const Configuration& c) { return ev.unnormalized(c); };
}

}  // namespace

Residual stationarity_residual(const Configuration& c, const ModelParams& p,
                               const TruncationPolicy& pol,
                               const std::function<double(const Configuration&)>& mu) {
    const int n = p.n_sites;
    const double gamma = p.gamma();
    const double lhs = total_exit_rate(c, p, pol) * mu(c);

    double rhs = 0.0;

    // entry by extraction from configurations with more particles
    {
        double gk = 1.0;
        long k = 0;
        rhs += detail::sum_series(
            [&](long) {
                gk *= gamma;
                ++k;
                return gk * mu(c.with_delta(0, static_cast<int>(k))) / q_number(k, p.q);
            },
            pol, "stationarity: left entry series");
        k = 0;
        rhs += detail::sum_series(
            [&](long) {
                ++k;
                return mu(c.with_delta(n - 1, static_cast<int>(k))) / q_number(k, p.q);
            },
            pol, "stationarity: right entry series");
    }

    // entry by injection from configurations with fewer particles
    {
        double bk = 1.0;
        for (int k = 1; k <= c[0]; ++k) {
            bk *= p.beta_l;
            rhs += bk * mu(c.with_delta(0, -k)) / q_number(k, p.q);
        }
        bk = 1.0;
        const double beta_eff = p.beta_r_eff();
        for (int k = 1; k <= c[n - 1]; ++k) {
            bk *= beta_eff;
            rhs += bk * mu(c.with_delta(n - 1, -k)) / q_number(k, p.q);
        }
    }

    // entry by bulk moves
    for (int j = 0; j + 1 < n; ++j) {
        double gk = 1.0;
        for (int k = 1; k <= c[j]; ++k) {
            gk *= gamma;
            rhs += gk * mu(c.with_delta(j, -k).with_delta(j + 1, k)) / q_number(k, p.q);
        }
        for (int k = 1; k <= c[j + 1]; ++k) {
            rhs += mu(c.with_delta(j, k).with_delta(j + 1, -k)) / q_number(k, p.q);
        }
    }

    return {lhs - rhs, std::abs(lhs)};
}

Residual stationarity_residual(const Configuration& c, const SteadyStateEvaluator& evaluator) {
    return stationarity_residual(c, evaluator.params(), evaluator.policy(),
                                 measure_function(evaluator));
}

Residual master_identity_residual(const LambdaVector& lambda, const ModelParams& p,
                                  const TruncationPolicy& pol, double F_constant) {
    const int n = p.n_sites;
    if (static_cast<int>(lambda.lambdas.size()) != n)
        throw std::invalid_argument("master_identity_residual: lambda size must equal n_sites");
    const double gamma = p.gamma();
    const double a = p.beta_l;
    const double b = p.beta_r_eff();

    std::vector<std::function<double(double)>> base;
    base.reserve(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
        const double lam = lambda.lambdas[static_cast<std::size_t>(l)];
        base.push_back([lam](double t) { return f_lambda(t, lam); });
    }
    const auto integrate = [&](const std::vector<std::function<double(double)>>& w) {
        return nested_jackson_product(w, a, b, p.q, pol);
    };
    const double base_integral = integrate(base);

    double value = 0.0;
    double scale = 0.0;
    for (int j = 0; j < n; ++j) {
        const double lam = lambda.lambdas[static_cast<std::size_t>(j)];

        // F_lam(t_{j-1}); t_0 is the lower boundary parameter
        double piece_prev;
        if (j == 0) {
            piece_prev = F_lambda(a, lam, p.q, pol, F_constant) * base_integral;
        } else {
            auto w = base;
            const auto& fw = base[static_cast<std::size_t>(j - 1)];
            w[static_cast<std::size_t>(j - 1)] = [&, lam](double t) {
                return fw(t) * F_lambda(t, lam, p.q, pol, F_constant);
            };
            piece_prev = integrate(w);
        }

        // F_lam(gamma t_{j+1}); gamma t_{N+1} is the upper integration limit
        double piece_next;
        if (j == n - 1) {
            piece_next = F_lambda(b, lam, p.q, pol, F_constant) * base_integral;
        } else {
            auto w = base;
            const auto& fw = base[static_cast<std::size_t>(j + 1)];
            w[static_cast<std::size_t>(j + 1)] = [&, lam](double t) {
                return fw(t) * F_lambda(gamma * t, lam, p.q, pol, F_constant);
            };
            piece_next = integrate(w);
        }

        // F_lam(t_j) + F_lam(gamma t_j)
        double piece_self;
        {
            auto w = base;
            const auto& fw = base[static_cast<std::size_t>(j)];
            w[static_cast<std::size_t>(j)] = [&, lam](double t) {
                return fw(t) * (F_lambda(t, lam, p.q, pol, F_constant) +
                                F_lambda(gamma * t, lam, p.q, pol, F_constant));
            };
            piece_self = integrate(w);
        }

        const double prefactor = 1.0 - lam;
        value += prefactor * (piece_prev + piece_next - piece_self);
        scale = std::max(
            {scale, prefactor * std::abs(piece_prev), prefactor * std::abs(piece_next),
             prefactor * std::abs(piece_self)});
    }
    return {value, scale};
}

double interchange_correction(const std::function<double(double, double)>& g, double a, double b,
                              QParam q, const TruncationPolicy& pol) {
    const double upper = q.gamma() * b;
    return (1.0 - q.gamma()) *
           jackson_integral([&](double s) { return g(s, s) * s; }, a, upper, q, pol);
}

Residual interchange_residual(const std::function<double(double, double)>& g, double a, double b,
                              QParam q, const TruncationPolicy& pol) {
    const double upper = q.gamma() * b;
    const double lhs = jackson_integral(
        [&](double t) {
            return jackson_integral([&](double s) { return g(t, s); }, t, upper, q, pol);
        },
        a, upper, q, pol);
    const double swapped = jackson_integral(
        [&](double s) {
            return jackson_integral([&](double t) { return g(t, s); }, a, s, q, pol);
        },
        a, upper, q, pol);
    const double correction = interchange_correction(g, a, b, q, pol);
    const double value = lhs - (swapped - correction);
    const double scale = std::max({std::abs(lhs), std::abs(swapped), std::abs(correction)});
    return {value, scale};
}

Residual ibp_residual(const std::function<double(double)>& G, double a, double b, QParam q,
                      const TruncationPolicy& pol) {
    const double lhs = jackson_integral(
        [&](double t) { return (G(t) + G(q.gamma() * t)) * q_derivative(G, t, q); }, a, b, q, pol);
    const double rhs = G(b) * G(b) - G(a) * G(a);
    return {lhs - rhs, std::max(std::abs(lhs), std::abs(rhs))};
}

namespace {

// sum of (1/[k] - 1/[p-k]) over the symmetric index range [lo, p-lo],
// accumulated in cancelling pairs so the result is exactly zero
double symmetric_case_sum(int lo, int p, QParam q, double& scale) {
    double sum = 0.0;
    for (int k = lo; k <= p - lo; ++k) {
        const int twin = p - k;
        if (k > twin) break;
        const double left = 1.0 / q_number(k, q) - 1.0 / q_number(p - k, q);
        scale = std::max(scale, std::abs(1.0 / q_number(k, q)));
        if (k == twin) {
            sum += left;
        } else {
            const double right = 1.0 / q_number(twin, q) - 1.0 / q_number(p - twin, q);
            sum += left + right;
        }
    }
    return sum;
}

}  // namespace

std::vector<CoefficientCheck> n1_coefficient_checks(int m_max, int p_max, QParam q,
                                                    const TruncationPolicy& pol) {
    (void)pol;  // all sums here are finite
    if (m_max < 0 || p_max < 1)
        throw std::invalid_argument("n1_coefficient_checks: need m_max >= 0 and p_max >= 1");
    std::vector<CoefficientCheck> checks;
    const double gamma = q.gamma();

    for (int m = 0; m <= m_max; ++m) {
        // case formulas, each a symmetric sum that cancels in pairs
        {
            const int p = m + 1;
            double scale = 0.0;
            const double s = m >= 1 ? symmetric_case_sum(1, p, q, scale) : 0.0;
            checks.push_back({m, p, "case-p=m+1", s, scale, scale > 0.0 ? std::abs(s) / scale : 0.0});
        }
        for (int p = m + 2; p <= std::min(2 * m, p_max); ++p) {
            double scale = 0.0;
            const double s = symmetric_case_sum(p - m, p, q, scale);
            checks.push_back({m, p, "case-mid", s, scale, scale > 0.0 ? std::abs(s) / scale : 0.0});
        }
        for (int p = 2 * m + 2; p <= p_max; ++p) {
            double scale = 0.0;
            const double s = symmetric_case_sum(std::max(m, 1), p, q, scale);
            checks.push_back({m, p, "case-high", s, scale, scale > 0.0 ? std::abs(s) / scale : 0.0});
        }

        // assembled coefficient of beta^p, all four contributions summed as
        // they come out of the stationarity equation (genuine floating-point
        // cancellation, so checked relatively)
        for (int p = m + 1; p <= p_max; ++p) {
            double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
            const double inv_qp = 1.0 / q_number(p, q);
            for (int k = 1; k <= m; ++k)
                t1 += inv_qp * (1.0 + pow_int(gamma, k)) / q_number(k, q);
            for (int k = 1; k <= p - m - 1; ++k)
                t2 += 1.0 / (q_number(k, q) * q_number(p - k, q));
            for (int k = 1; k <= p - m - 1; ++k)
                t3 += inv_qp * (1.0 + pow_int(gamma, k)) / q_number(k, q);
            for (int k = 1; k <= std::min(m, p - 1); ++k)
                t4 += 1.0 / (q_number(k, q) * q_number(p - k, q));
            const double value = (t1 + t2) - (t3 + t4);
            const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
            checks.push_back(
                {m, p, "assembled", value, scale, scale > 0.0 ? std::abs(value) / scale : 0.0});
        }

        // mixed beta_l^p beta_r^q coefficients: four indicator terms of
        // identical magnitude gamma^q/([p][q]) with signs that cancel exactly
        for (int pw = 1; pw < p_max; ++pw) {
            for (int qw = 1; pw + qw <= p_max; ++qw) {
                const double mag = pow_int(gamma, qw) / (q_number(pw, q) * q_number(qw, q));
                double value = 0.0;
                double scale = 0.0;
                const auto add = [&](bool present, double signed_term) {
                    if (!present) return;
                    value += signed_term;
                    scale = std::max(scale, std::abs(signed_term));
                };
                add(pw > m, mag);
                add(qw > m, -mag);
                add(qw <= m && pw > m - qw, -mag);
                add(pw <= m && qw > m - pw, mag);
                checks.push_back({m, pw, "mixed-q=" + std::to_string(qw), value, scale,
                                  scale > 0.0 ? std::abs(value) / scale : 0.0});
            }
        }
    }
    return checks;
}

double n1_coefficient_cancellation(int p_max, QParam q, const TruncationPolicy& pol) {
    double worst = 0.0;
    for (const auto& check : n1_coefficient_checks(3, p_max, q, pol))
        worst = std::max(worst, check.relative);
    return worst;
}

KernelCheck kernel_check(const ModelParams& p, int m_cap, const TruncationPolicy& pol) {
    const TruncatedGenerator gen = build_truncated_generator(p, m_cap, pol);
    SteadyStateEvaluator evaluator(p, pol);

    std::vector<double> mu(static_cast<std::size_t>(gen.n_states));
    for (std::int64_t s = 0; s < gen.n_states; ++s)
        mu[static_cast<std::size_t>(s)] = evaluator.probability(gen.state_at(s));

    const std::vector<double> flow = gen.multiply(mu);
    const std::vector<double> diag = gen.diagonal();

    double value = 0.0;
    double scale = 0.0;
    double leak = 0.0;
    for (std::int64_t s = 0; s < gen.n_states; ++s) {
        const auto i = static_cast<std::size_t>(s);
        value = std::max(value, std::abs(flow[i]));
        scale = std::max(scale, std::abs(diag[i] * mu[i]));
        leak += gen.lost_rate[i] * mu[i];
    }
    return {{value, scale}, scale > 0.0 ? leak / scale : 0.0, m_cap};
}

// ---- battery ---------------------------------------------------------------

CheckSet check_set_from_name(const std::string& name) {
    if (name == "stationarity") return CheckSet::Stationarity;
    if (name == "master") return CheckSet::Master;
    if (name == "interchange") return CheckSet::Interchange;
    if (name == "ibp") return CheckSet::Ibp;
    if (name == "appendixB") return CheckSet::AppendixB;
    if (name == "kernel") return CheckSet::Kernel;
    if (name == "all") return CheckSet::All;
    throw std::invalid_argument("unknown check name: " + name);
}

namespace {

using nlohmann::json;

constexpr double kTolStationarity = 1e-8;
constexpr double kTolMaster = 1e-8;
constexpr double kTolInterchange = 1e-10;
constexpr double kTolIbp = 1e-11;
constexpr double kTolAppendixB = 1e-12;

struct ParameterCell {
    double gamma;
    double beta_l;
    double beta_r;
};

std::vector<ParameterCell> battery_cells() {
    std::vector<ParameterCell> cells;
    for (double gamma : {0.3, 0.6, 0.9})
        for (auto [bl, br] : {std::pair{0.2, 0.4}, {0.5, 0.5}, {0.7, 0.3}})
            cells.push_back({gamma, bl, br});
    return cells;
}

void enumerate_box(int n_sites, int m_max, const std::function<void(const Configuration&)>& fn) {
    std::vector<int> occ(static_cast<std::size_t>(n_sites), 0);
    for (;;) {
        fn(Configuration(occ));
        int i = n_sites - 1;
        while (i >= 0 && occ[static_cast<std::size_t>(i)] == m_max) {
            occ[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0) return;
        ++occ[static_cast<std::size_t>(i)];
    }
}

void run_stationarity(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    const auto cells = battery_cells();
    struct Cell {
        int n;
        ParameterCell params;
    };
    std::vector<Cell> work;
    for (int n : {1, 2, 3})
        for (const auto& cell : cells) work.push_back({n, cell});

    std::vector<CheckRecord> out(work.size());
    parallel_for(static_cast<long>(work.size()), options.threads, [&](long w) {
        const auto& [n, cell] = work[static_cast<std::size_t>(w)];
        ModelParams p(QParam(cell.gamma), cell.beta_l, cell.beta_r, n);
        SteadyStateEvaluator evaluator(p, options.pol);
        auto mu = measure_function(evaluator);
        if (options.perturb_mu != 0.0) {
            const double perturb = options.perturb_mu;
            const Configuration origin = Configuration::zeros(n);
            auto base = mu;
            mu = [base, perturb, origin](const Configuration& c) {
                return base(c) * (c == origin ? 1.0 + perturb : 1.0);
            };
        }

        double worst = -1.0;
        Residual worst_res;
        Configuration worst_m;
        enumerate_box(n, 3, [&](const Configuration& c) {
            const Residual r = stationarity_residual(c, p, options.pol, mu);
            if (r.relative() > worst) {
                worst = r.relative();
                worst_res = r;
                worst_m = c;
            }
        });

        json inputs = {{"n_sites", n},       {"gamma", cell.gamma}, {"beta_l", cell.beta_l},
                       {"beta_r", cell.beta_r}, {"m_box", 3},       {"worst_m", worst_m.occupations()}};
        out[static_cast<std::size_t>(w)] =
            {"stationarity", inputs.dump(), worst_res.value, worst_res.scale, worst,
             kTolStationarity, worst <= kTolStationarity};
    });
    records.insert(records.end(), out.begin(), out.end());
}

void run_master(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    const auto cells = battery_cells();
    constexpr int kDraws = 20;
    struct Cell {
        int n;
        int cell_index;
        int draw;
    };
    std::vector<Cell> work;
    for (int n : {1, 2, 3})
        for (int c = 0; c < static_cast<int>(cells.size()); ++c)
            for (int d = 0; d < kDraws; ++d) work.push_back({n, c, d});

    std::vector<CheckRecord> out(work.size());
    parallel_for(static_cast<long>(work.size()), options.threads, [&](long w) {
        const auto& [n, ci, draw] = work[static_cast<std::size_t>(w)];
        const ParameterCell& cell = cells[static_cast<std::size_t>(ci)];
        ModelParams p(QParam(cell.gamma), cell.beta_l, cell.beta_r, n);

        Xoshiro256StarStar rng(stream_seed(options.lambda_seed, w));
        std::vector<double> lambdas(static_cast<std::size_t>(n));
        for (auto& l : lambdas) l = 0.05 + 0.9 * rng.uniform01();

        const Residual r = master_identity_residual(LambdaVector(lambdas), p, options.pol);
        json inputs = {{"n_sites", n},        {"gamma", cell.gamma}, {"beta_l", cell.beta_l},
                       {"beta_r", cell.beta_r}, {"lambda", lambdas}};
        out[static_cast<std::size_t>(w)] = {"master",       inputs.dump(), r.value,
                                            r.scale,        r.relative(),  kTolMaster,
                                            r.relative() <= kTolMaster};
    });
    records.insert(records.end(), out.begin(), out.end());
}

void run_interchange(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    struct Combo {
        const char* name;
        std::function<double(double, double)> g;
        double a, b, gamma;
    };
    const std::vector<Combo> combos = {
        {"one", [](double, double) { return 1.0; }, 0.2, 0.4, 0.5},
        {"t+s", [](double t, double s) { return t + s; }, 0.2, 0.4, 0.5},
        {"t*s", [](double t, double s) { return t * s; }, 0.2, 0.4, 0.5},
        {"t^2*s", [](double t, double s) { return t * t * s; }, 0.1, 0.6, 0.7},
        {"1/(1-ts)", [](double t, double s) { return 1.0 / (1.0 - t * s); }, 0.3, 0.5, 0.6},
        {"(1+t)(2+s)", [](double t, double s) { return (1.0 + t) * (2.0 + s); }, 0.15, 0.45, 0.4},
        {"1/((1-t)(1-s))",
         [](double t, double s) { return 1.0 / ((1.0 - t) * (1.0 - s)); }, 0.2, 0.5, 0.8},
        {"s-t", [](double t, double s) { return s - t; }, 0.05, 0.7, 0.3},
        {"t^3+s^2", [](double t, double s) { return t * t * t + s * s; }, 0.25, 0.55, 0.9},
        {"exp(t s)", [](double t, double s) { return std::exp(t * s); }, 0.3, 0.35, 0.65},
    };
    for (const auto& combo : combos) {
        const Residual r =
            interchange_residual(combo.g, combo.a, combo.b, QParam(combo.gamma), options.pol);
        json inputs = {{"g", combo.name}, {"a", combo.a}, {"b", combo.b}, {"gamma", combo.gamma}};
        records.push_back({"interchange", inputs.dump(), r.value, r.scale, r.relative(),
                           kTolInterchange, r.relative() <= kTolInterchange});
    }

    // correction term scales linearly in (1-gamma): consecutive ratios track
    // the (1-gamma) ratio of 10 within a factor of 2
    const auto g = [](double t, double s) { return 1.0 / ((1.0 - t) * (1.0 - s)); };
    TruncationPolicy slow = options.pol;
    slow.max_terms = std::max<long>(slow.max_terms, 200'000);
    const double gammas[3] = {0.9, 0.99, 0.999};
    double corr[3];
    for (int i = 0; i < 3; ++i)
        corr[i] = interchange_correction(g, 0.2, 0.4, QParam(gammas[i]), slow);
    for (int i = 0; i + 1 < 3; ++i) {
        const double ratio = corr[i] / corr[i + 1];
        const double expected = (1.0 - gammas[i]) / (1.0 - gammas[i + 1]);
        const bool pass = ratio >= 5.0 && ratio <= 20.0;
        json inputs = {{"gamma_coarse", gammas[i]},
                       {"gamma_fine", gammas[i + 1]},
                       {"correction_coarse", corr[i]},
                       {"correction_fine", corr[i + 1]}};
        records.push_back({"interchange-correction-scaling", inputs.dump(), ratio, expected,
                           std::abs(ratio - expected) / expected, 1.0, pass});
    }
}

void run_ibp(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    struct Combo {
        const char* name;
        std::function<double(double)> G;
        double a, b, gamma;
    };
    const std::vector<Combo> combos = {
        {"t", [](double t) { return t; }, 0.1, 0.5, 0.5},
        {"t^2", [](double t) { return t * t; }, 0.1, 0.5, 0.5},
        {"t^3-t/2", [](double t) { return t * t * t - 0.5 * t; }, 0.2, 0.8, 0.6},
        {"1/(1-t)", [](double t) { return 1.0 / (1.0 - t); }, 0.1, 0.5, 0.5},
        {"(1+t)^2", [](double t) { return (1.0 + t) * (1.0 + t); }, 0.3, 0.7, 0.4},
        {"exp(t)", [](double t) { return std::exp(t); }, 0.2, 0.6, 0.7},
        {"1/(1-t)^2", [](double t) { return 1.0 / ((1.0 - t) * (1.0 - t)); }, 0.05, 0.45, 0.8},
        {"t^5", [](double t) { return pow_int(t, 5); }, 0.4, 0.9, 0.3},
        {"cos(t)", [](double t) { return std::cos(t); }, 0.1, 0.9, 0.9},
        {"t/(1-t)", [](double t) { return t / (1.0 - t); }, 0.25, 0.65, 0.55},
    };
    for (const auto& combo : combos) {
        const Residual r = ibp_residual(combo.G, combo.a, combo.b, QParam(combo.gamma), options.pol);
        json inputs = {{"G", combo.name}, {"a", combo.a}, {"b", combo.b}, {"gamma", combo.gamma}};
        records.push_back({"ibp", inputs.dump(), r.value, r.scale, r.relative(), kTolIbp,
                           r.relative() <= kTolIbp});
    }
}

void run_appendix_b(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    for (double gamma : {0.3, 0.6, 0.9}) {
        for (const auto& check : n1_coefficient_checks(3, 12, QParam(gamma), options.pol)) {
            json inputs = {{"gamma", gamma}, {"m", check.m}, {"p", check.p}, {"case", check.kind}};
            records.push_back({"appendixB", inputs.dump(), check.value, check.scale, check.relative,
                               kTolAppendixB, check.relative <= kTolAppendixB});
        }
    }
}

void run_kernel(const BatteryOptions& options, std::vector<CheckRecord>& records) {
    ModelParams p(QParam(0.5), 0.2, 0.4, 2);
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int m_cap : {2, 4, 6, 8}) {
        const KernelCheck check = kernel_check(p, m_cap, options.pol);
        const double rel = check.residual.relative();
        const bool within_leak = rel <= check.leak_relative * 1.0001 + 1e-12;
        monotone = monotone && rel < previous;
        previous = rel;
        json inputs = {{"n_sites", 2}, {"gamma", 0.5},     {"beta_l", 0.2},
                       {"beta_r", 0.4}, {"m_cap", m_cap}, {"leak_relative", check.leak_relative}};
        records.push_back({"kernel", inputs.dump(), check.residual.value, check.residual.scale, rel,
                           check.leak_relative, within_leak});
    }
    json inputs = {{"m_caps", {2, 4, 6, 8}}};
    records.push_back({"kernel-monotone", inputs.dump(), monotone ? 0.0 : 1.0, 1.0,
                       monotone ? 0.0 : 1.0, 0.5, monotone});
}

}  // namespace

VerificationReport run_battery(const BatteryOptions& options) {
    options.pol.validate();
    VerificationReport report;
    const CheckSet set = options.set;
    const auto selected = [&](CheckSet s) { return set == CheckSet::All || set == s; };

    if (selected(CheckSet::Stationarity)) run_stationarity(options, report.records);
    if (selected(CheckSet::Master)) run_master(options, report.records);
    if (selected(CheckSet::Interchange)) run_interchange(options, report.records);
    if (selected(CheckSet::Ibp)) run_ibp(options, report.records);
    if (selected(CheckSet::AppendixB)) run_appendix_b(options, report.records);
    if (selected(CheckSet::Kernel)) run_kernel(options, report.records);

    for (const auto& record : report.records) report.all_pass = report.all_pass && record.pass;
    return report;
}

std::string report_to_json(const VerificationReport& report) {
    json checks = json::array();
    std::size_t failed = 0;
    for (const auto& record : report.records) {
        checks.push_back({{"check", record.check},
                          {"inputs", json::parse(record.inputs)},
                          {"value", record.value},
                          {"scale", record.scale},
                          {"relative", record.relative},
                          {"tolerance", record.tolerance},
                          {"pass", record.pass}});
        if (!record.pass) ++failed;
    }
    json doc = {{"all_pass", report.all_pass},
                {"checks_total", report.records.size()},
                {"checks_failed", failed},
                {"checks", checks}};
    return doc.dump(2);
}

}  // namespace madm
