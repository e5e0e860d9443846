// madm: exact steady states, Monte Carlo simulation and identity
// verification for the boundary-driven multiparticle asymmetric diffusion
// model.
//
// Exit codes: 0 success, 1 usage error, 2 numerical non-convergence,
// 3 verification/assertion failure.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "madm/parallel.hpp"
#include "madm/simulate.hpp"
#include "madm/steady.hpp"
#include "madm/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitVerification = 3;

// 17 significant digits, '.' decimal separator, locale-independent
std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

struct CommonOptions {
    double gamma = 0.5;
    double beta_l = 0.2;
    double beta_r = 0.4;
    int n_sites = 2;
    double rel_tol = 1e-13;
    double abs_tol = 1e-300;
    long max_terms = 10'000;
    int threads = 0;

    // simulate
    std::uint64_t seed = 42;
    double t_burn = 1e3;
    double t_measure = 1e5;
    int replicas = 8;

    madm::ModelParams params() const {
        return {madm::QParam(gamma), beta_l, beta_r, n_sites};
    }
    madm::TruncationPolicy policy() const {
        madm::TruncationPolicy pol;
        pol.rel_tol = rel_tol;
        pol.abs_tol = abs_tol;
        pol.max_terms = max_terms;
        pol.validate();
        return pol;
    }
    int resolved_threads() const {
        // MADM_THREADS wins over --threads; --threads 0 means machine parallelism
        if (const char* env = std::getenv("MADM_THREADS")) {
            const int n = std::atoi(env);
            if (n > 0) return n;
        }
        return madm::resolve_threads(threads);
    }
};

// config file (JSON) sits between built-in defaults and command-line flags
void load_config(const std::string& path, CommonOptions& opt) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    json doc;
    in >> doc;
    if (doc.contains("gamma")) opt.gamma = doc["gamma"].get<double>();
    if (doc.contains("beta_l")) opt.beta_l = doc["beta_l"].get<double>();
    if (doc.contains("beta_r")) opt.beta_r = doc["beta_r"].get<double>();
    if (doc.contains("n_sites")) opt.n_sites = doc["n_sites"].get<int>();
    if (doc.contains("rel_tol")) opt.rel_tol = doc["rel_tol"].get<double>();
    if (doc.contains("abs_tol")) opt.abs_tol = doc["abs_tol"].get<double>();
    if (doc.contains("max_terms")) opt.max_terms = doc["max_terms"].get<long>();
    if (doc.contains("threads")) opt.threads = doc["threads"].get<int>();
    if (doc.contains("seed")) opt.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("t_burn")) opt.t_burn = doc["t_burn"].get<double>();
    if (doc.contains("t_measure")) opt.t_measure = doc["t_measure"].get<double>();
    if (doc.contains("replicas")) opt.replicas = doc["replicas"].get<int>();
}

void add_model_options(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--gamma", opt.gamma, "asymmetry parameter in (0,1)")->capture_default_str();
    cmd->add_option("--beta-l", opt.beta_l, "left reservoir density in (0,1)")
        ->capture_default_str();
    cmd->add_option("--beta-r", opt.beta_r, "right reservoir density in (0,1)")
        ->capture_default_str();
    cmd->add_option("-N,--sites", opt.n_sites, "lattice length")->capture_default_str();
}

void add_policy_options(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--rel-tol", opt.rel_tol, "series stopping: relative floor")
        ->capture_default_str();
    cmd->add_option("--abs-tol", opt.abs_tol, "series stopping: absolute floor")
        ->capture_default_str();
    cmd->add_option("--max-terms", opt.max_terms, "series term cap")->capture_default_str();
    cmd->add_option("--threads", opt.threads, "worker threads (0 = machine parallelism)")
        ->capture_default_str();
}

std::string infer_format(const std::string& requested, const std::string& output) {
    if (!requested.empty()) return requested;
    if (output.size() >= 5 && output.substr(output.size() - 5) == ".json") return "json";
    return "csv";
}

void write_output(const std::string& output, const std::string& text) {
    if (output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) throw CLI::ValidationError("--output", "cannot write " + output);
    out << text;
}

void enumerate_box(int n, int m_max, const std::function<void(const std::vector<int>&)>& fn) {
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

// ---- exact ------------------------------------------------------------

int cmd_exact(const CommonOptions& opt, int m_max, const std::string& output,
              const std::string& format_flag) {
    const auto params = opt.params();
    const auto pol = opt.policy();
    madm::SteadyStateEvaluator evaluator(params, pol);
    const std::string format = infer_format(format_flag, output);

    double box_size = 1.0;
    for (int i = 0; i < params.n_sites; ++i) box_size *= m_max + 1.0;
    if (box_size > 2e6) throw CLI::ValidationError("--m-max", "joint table would exceed 2e6 rows");

    // marginals, means and tail mass per site
    std::vector<std::vector<double>> marginals(static_cast<std::size_t>(params.n_sites));
    std::vector<double> means(static_cast<std::size_t>(params.n_sites));
    double tail_bound = 0.0;
    for (int site = 1; site <= params.n_sites; ++site) {
        double covered = 0.0;
        for (int m = 0; m <= m_max; ++m) {
            const double p = evaluator.marginal(site, m);
            marginals[static_cast<std::size_t>(site - 1)].push_back(p);
            covered += p;
        }
        tail_bound += std::max(0.0, 1.0 - covered);
        means[static_cast<std::size_t>(site - 1)] = evaluator.mean_occupation(site);
    }

    double coverage = 0.0;
    std::vector<std::pair<std::vector<int>, double>> joint;
    enumerate_box(params.n_sites, m_max, [&](const std::vector<int>& m) {
        const double p = evaluator.probability(madm::Configuration(m));
        coverage += p;
        joint.push_back({m, p});
    });

    // smallest box with per-site tail mass below 1e-6
    int recommended = m_max;
    for (int trial = 0; trial <= 200; ++trial) {
        double tail = 0.0;
        for (int site = 1; site <= params.n_sites; ++site) {
            double covered = 0.0;
            for (int m = 0; m <= trial; ++m) covered += evaluator.marginal(site, m);
            tail += std::max(0.0, 1.0 - covered);
        }
        if (tail <= 1e-6) {
            recommended = trial;
            break;
        }
        recommended = trial;
    }

    if (format == "json") {
        json doc;
        doc["params"] = {{"gamma", opt.gamma},
                         {"beta_l", opt.beta_l},
                         {"beta_r", opt.beta_r},
                         {"n_sites", opt.n_sites}};
        doc["m_max"] = m_max;
        json rows = json::array();
        for (const auto& [m, p] : joint) rows.push_back({{"m", m}, {"mu", p}});
        doc["joint"] = rows;
        json marg = json::array();
        for (int site = 1; site <= params.n_sites; ++site)
            for (int m = 0; m <= m_max; ++m)
                marg.push_back(
                    {{"site", site},
                     {"m", m},
                     {"probability", marginals[static_cast<std::size_t>(site - 1)]
                                              [static_cast<std::size_t>(m)]}});
        doc["marginals"] = marg;
        json mean_rows = json::array();
        for (int site = 1; site <= params.n_sites; ++site)
            mean_rows.push_back(
                {{"site", site}, {"mean_occupation", means[static_cast<std::size_t>(site - 1)]}});
        doc["means"] = mean_rows;
        doc["coverage"] = coverage;
        doc["tail_bound"] = tail_bound;
        doc["recommended_m_max"] = recommended;
        write_output(output, doc.dump(2) + "\n");
        return 0;
    }

    std::ostringstream csv;
    csv << "# joint steady-state probabilities\n";
    for (int i = 1; i <= params.n_sites; ++i) csv << "m_" << i << ",";
    csv << "mu\n";
    for (const auto& [m, p] : joint) {
        for (int mi : m) csv << mi << ",";
        csv << fmt(p) << "\n";
    }
    csv << "\n# per-site marginals\nsite,m,probability\n";
    for (int site = 1; site <= params.n_sites; ++site)
        for (int m = 0; m <= m_max; ++m)
            csv << site << "," << m << ","
                << fmt(marginals[static_cast<std::size_t>(site - 1)][static_cast<std::size_t>(m)])
                << "\n";
    csv << "\n# per-site mean occupation\nsite,mean_occupation\n";
    for (int site = 1; site <= params.n_sites; ++site)
        csv << site << "," << fmt(means[static_cast<std::size_t>(site - 1)]) << "\n";
    csv << "\n# coverage=" << fmt(coverage) << " tail_bound=" << fmt(tail_bound)
        << " recommended_m_max=" << recommended << "\n";
    write_output(output, csv.str());
    return 0;
}

// ---- simulate ---------------------------------------------------------

int cmd_simulate(const CommonOptions& opt, double min_prob, const std::string& output,
                 const std::string& format_flag) {
    const auto params = opt.params();
    madm::SimConfig cfg{params};
    cfg.seed = opt.seed;
    cfg.t_burn = opt.t_burn;
    cfg.t_measure = opt.t_measure;
    cfg.replicas = opt.replicas;
    cfg.threads = opt.resolved_threads();
    cfg.pol = opt.policy();
    cfg.validate();

    const madm::EmpiricalStats stats = madm::run(cfg);
    madm::SteadyStateEvaluator exact(params, cfg.pol);
    const auto zs = madm::compare_marginals(stats, exact, min_prob);

    double max_abs_z = 0.0;
    for (const auto& z : zs) max_abs_z = std::max(max_abs_z, std::abs(z.z));

    const std::string format = infer_format(format_flag, output);
    if (format == "json") {
        json doc;
        doc["config"] = {{"gamma", opt.gamma},   {"beta_l", opt.beta_l},
                         {"beta_r", opt.beta_r}, {"n_sites", opt.n_sites},
                         {"seed", opt.seed},     {"t_burn", opt.t_burn},
                         {"t_measure", opt.t_measure}, {"replicas", opt.replicas}};
        doc["total_time"] = stats.total_time;
        json counts;
        for (int kind = 0; kind < 6; ++kind)
            counts[madm::to_string(static_cast<madm::EventKind>(kind))] =
                stats.event_counts[static_cast<std::size_t>(kind)];
        doc["event_counts"] = counts;
        json hist = json::array();
        for (int site = 1; site <= stats.n_sites; ++site) {
            const auto& row = stats.histogram[static_cast<std::size_t>(site - 1)];
            for (std::size_t m = 0; m < row.size(); ++m)
                hist.push_back({{"site", site},
                                {"m", m},
                                {"time_weight", row[m]},
                                {"empirical", row[m] / stats.total_time}});
        }
        doc["histogram"] = hist;
        json ztab = json::array();
        for (const auto& z : zs)
            ztab.push_back({{"site", z.site},
                            {"m", z.m},
                            {"empirical", z.empirical},
                            {"exact", z.exact},
                            {"std_error", z.std_error},
                            {"z", z.z}});
        doc["comparison"] = ztab;
        json means = json::array();
        for (int site = 1; site <= stats.n_sites; ++site)
            means.push_back(
                {{"site", site},
                 {"mean_occupation", stats.mean_occupation[static_cast<std::size_t>(site - 1)]},
                 {"std_error",
                  stats.mean_occupation_std_error[static_cast<std::size_t>(site - 1)]}});
        doc["mean_occupation"] = means;
        doc["max_abs_z"] = max_abs_z;
        write_output(output, doc.dump(2) + "\n");
        return 0;
    }

    std::ostringstream csv;
    csv << "# per-site sojourn-weighted histogram\nsite,m,time_weight,empirical\n";
    for (int site = 1; site <= stats.n_sites; ++site) {
        const auto& row = stats.histogram[static_cast<std::size_t>(site - 1)];
        for (std::size_t m = 0; m < row.size(); ++m)
            csv << site << "," << m << "," << fmt(row[m]) << "," << fmt(row[m] / stats.total_time)
                << "\n";
    }
    csv << "\n# comparison against the exact marginals (bins with exact >= " << fmt(min_prob)
        << ")\nsite,m,empirical,exact,std_error,z\n";
    for (const auto& z : zs)
        csv << z.site << "," << z.m << "," << fmt(z.empirical) << "," << fmt(z.exact) << ","
            << fmt(z.std_error) << "," << fmt(z.z) << "\n";
    csv << "\n# per-site mean occupation\nsite,mean,std_error\n";
    for (int site = 1; site <= stats.n_sites; ++site)
        csv << site << "," << fmt(stats.mean_occupation[static_cast<std::size_t>(site - 1)]) << ","
            << fmt(stats.mean_occupation_std_error[static_cast<std::size_t>(site - 1)]) << "\n";
    csv << "\n# total_time=" << fmt(stats.total_time);
    for (int kind = 0; kind < 6; ++kind)
        csv << " " << madm::to_string(static_cast<madm::EventKind>(kind)) << "="
            << stats.event_counts[static_cast<std::size_t>(kind)];
    csv << " max_abs_z=" << fmt(max_abs_z) << "\n";
    write_output(output, csv.str());
    return 0;
}

// ---- verify -----------------------------------------------------------

int cmd_verify(const CommonOptions& opt, const std::string& check, double perturb_mu,
               const std::string& output) {
    madm::BatteryOptions options;
    if (!check.empty()) options.set = madm::check_set_from_name(check);
    options.perturb_mu = perturb_mu;
    options.threads = opt.resolved_threads();
    options.pol = opt.policy();

    const madm::VerificationReport report = madm::run_battery(options);
    write_output(output, madm::report_to_json(report) + "\n");

    std::size_t failed = 0;
    for (const auto& record : report.records)
        if (!record.pass) ++failed;
    std::cerr << "verify: " << (report.records.size() - failed) << "/" << report.records.size()
              << " checks passed\n";
    return report.all_pass ? 0 : kExitVerification;
}

// ---- equilibrium -------------------------------------------------------

int cmd_equilibrium(const CommonOptions& opt, double beta, int m_max, double tol) {
    madm::ModelParams params(madm::QParam(opt.gamma), beta, beta, opt.n_sites);
    madm::SteadyStateEvaluator evaluator(params, opt.policy());

    const double gamma = opt.gamma;
    const int n = opt.n_sites;
    double max_dev_mu = 0.0;
    double max_dev_unnorm = 0.0;
    enumerate_box(n, m_max, [&](const std::vector<int>& m) {
        double product = 1.0;
        double closed = madm::pow_int(gamma - 1.0, n);
        for (int mi : m) {
            product *= madm::pow_int(beta, mi) * (1.0 - beta);
            closed *= madm::pow_int(beta, mi + 1) / (1.0 - beta);
        }
        const madm::Configuration c{m};
        max_dev_mu = std::max(max_dev_mu,
                              std::abs(evaluator.probability(c) - product) / product);
        max_dev_unnorm = std::max(
            max_dev_unnorm, std::abs(evaluator.unnormalized(c) - closed) / std::abs(closed));
    });

    const double c_eq = madm::pow_int(gamma - 1.0, n) * madm::pow_int(beta, n) /
                        madm::pow_int((1.0 - beta) * (1.0 - beta), n);
    const double dev_norm = std::abs(evaluator.normalization() - c_eq) / std::abs(c_eq);

    std::cout << "equilibrium check (beta=" << fmt(beta) << ", gamma=" << fmt(gamma)
              << ", N=" << n << ", box m<=" << m_max << ")\n";
    std::cout << "max relative deviation, normalized measure vs geometric product: "
              << fmt(max_dev_mu) << "\n";
    std::cout << "max relative deviation, unnormalized weights vs closed form:     "
              << fmt(max_dev_unnorm) << "\n";
    std::cout << "relative deviation, normalization constant vs closed form:       "
              << fmt(dev_norm) << "\n";

    const double worst = std::max({max_dev_mu, max_dev_unnorm, dev_norm});
    if (worst > tol) {
        std::cerr << "equilibrium: max deviation " << fmt(worst) << " exceeds tolerance "
                  << fmt(tol) << "\n";
        return kExitVerification;
    }
    std::cout << "PASS (tolerance " << fmt(tol) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-driven MADM: exact steady state, simulation, verification"};
    app.require_subcommand(1);

    CommonOptions opt;

    // the config file provides defaults, flags override: scan for --config
    // before CLI11 fills option values
    try {
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string(argv[i]) == "--config") load_config(argv[i + 1], opt);
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");

    // exact
    auto* exact = app.add_subcommand("exact", "tabulate the exact stationary measure");
    int m_max = 8;
    std::string output, format;
    add_model_options(exact, opt);
    add_policy_options(exact, opt);
    exact->add_option("--m-max", m_max, "occupation box bound per site")->capture_default_str();
    exact->add_option("-o,--output", output, "output file (default stdout)");
    exact->add_option("--format", format, "csv or json (default: from extension, else csv)")
        ->check(CLI::IsMember({"csv", "json"}));

    // simulate
    auto* simulate = app.add_subcommand("simulate", "continuous-time Monte Carlo run");
    double min_prob = 1e-4;
    add_model_options(simulate, opt);
    add_policy_options(simulate, opt);
    simulate->add_option("--seed", opt.seed, "base RNG seed")->capture_default_str();
    simulate->add_option("--t-burn", opt.t_burn, "burn-in time discarded per replica")
        ->capture_default_str();
    simulate->add_option("--t-measure", opt.t_measure, "measured time per replica")
        ->capture_default_str();
    simulate->add_option("--replicas", opt.replicas, "independent replicas")
        ->capture_default_str();
    simulate->add_option("--min-prob", min_prob, "smallest exact marginal compared")
        ->capture_default_str();
    simulate->add_option("-o,--output", output, "output file (default stdout)");
    simulate->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // verify
    auto* verify = app.add_subcommand("verify", "run the identity verification battery");
    std::string check;
    double perturb_mu = 0.0;
    add_policy_options(verify, opt);
    verify->add_option("--check", check,
                       "stationarity|master|interchange|ibp|appendixB|kernel (default: all)");
    verify->add_option("-o,--output", output, "report file (default stdout)");
    verify->add_option("--perturb-mu", perturb_mu, "fault injection for detector tests")
        ->group("");  // hidden

    // equilibrium
    auto* equilibrium =
        app.add_subcommand("equilibrium", "assert the geometric product measure at beta_l=beta_r");
    double beta = 0.3;
    double eq_tol = 1e-10;
    int eq_m_max = 6;
    equilibrium->add_option("--beta", beta, "common reservoir density")->required();
    equilibrium->add_option("--gamma", opt.gamma, "asymmetry parameter")->capture_default_str();
    equilibrium->add_option("-N,--sites", opt.n_sites, "lattice length")->capture_default_str();
    equilibrium->add_option("--m-max", eq_m_max, "occupation box bound")->capture_default_str();
    equilibrium->add_option("--tol", eq_tol, "pass tolerance")->capture_default_str();
    add_policy_options(equilibrium, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (exact->parsed()) return cmd_exact(opt, m_max, output, format);
        if (simulate->parsed()) return cmd_simulate(opt, min_prob, output, format);
        if (verify->parsed()) return cmd_verify(opt, check, perturb_mu, output);
        if (equilibrium->parsed()) return cmd_equilibrium(opt, beta, eq_m_max, eq_tol);
    } catch (const madm::NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
