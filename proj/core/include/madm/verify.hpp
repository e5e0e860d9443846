#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "madm/model.hpp"
#include "madm/steady.hpp"

namespace madm {

/// Projection parameters for the lambda-projected master identity; each
/// component must lie in (0,1) to keep every series absolutely convergent.
struct LambdaVector {
    std::vector<double> lambdas;

    explicit LambdaVector(std::vector<double> ls) : lambdas(std::move(ls)) {
        for (double l : lambdas) {
            if (!(l > 0.0) || !(l < 1.0))
                throw std::invalid_argument("LambdaVector: components must lie in (0,1)");
        }
    }
};

/// Signed residual of an identity together with the magnitude of the
/// largest contributing term.  The relative residual |value|/scale is the
/// pass/fail quantity; scale == 0 with value == 0 counts as relative 0.
struct Residual {
    double value = 0.0;
    double scale = 0.0;

    double relative() const {
        if (scale == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::abs(value) / scale;
    }
};

/// Pointwise stationarity residual (balance of exit and entry flows at c)
/// with mu supplied explicitly; scale is the exit-side magnitude.
Residual stationarity_residual(const Configuration& c, const ModelParams& p,
                               const TruncationPolicy& pol,
                               const std::function<double(const Configuration&)>& mu);

/// Same, with mu taken from an exact evaluator (unnormalized weights away
/// from the degenerate locus, limit probabilities on it).
Residual stationarity_residual(const Configuration& c, const SteadyStateEvaluator& evaluator);

/// Residual of the lambda-projected master identity: the sum over sites of
/// the bracketed antiderivative differences integrated against prod
/// f_lambda, which vanishes identically.  scale is the largest single
/// bracket-piece integral.  The antiderivative's integration constant
/// F_constant drops out of the identity; it is exposed so that invariance
/// can be asserted.
Residual master_identity_residual(const LambdaVector& lambda, const ModelParams& p,
                                  const TruncationPolicy& pol, double F_constant = 0.0);

/// Residual of the q-integral interchange relation for a two-variable
/// integrand: swapping the nested integration order costs a correction term
/// -(1-gamma) int g(s,s) s.
Residual interchange_residual(const std::function<double(double, double)>& g, double a, double b,
                              QParam q, const TruncationPolicy& pol);

/// The correction term alone, (1-gamma) int_a^{gamma b} g(s,s) s d_gamma s.
double interchange_correction(const std::function<double(double, double)>& g, double a, double b,
                              QParam q, const TruncationPolicy& pol);

/// Residual of the q-integration-by-parts square identity
/// int_a^b (G(t)+G(gamma t)) (D_gamma G)(t) d_gamma t = G(b)^2 - G(a)^2.
Residual ibp_residual(const std::function<double(double)>& G, double a, double b, QParam q,
                      const TruncationPolicy& pol);

/// One checked coefficient in the N=1 power-by-power cancellation.
struct CoefficientCheck {
    int m;
    int p;           // beta power (q power for mixed checks)
    std::string kind;  // which case formula produced it
    double value;
    double scale;
    double relative;
};

/// Verifies that the coefficient of every boundary-parameter power in the
/// N=1 stationarity equation vanishes, case by case, for m <= m_max and
/// total power <= p_max.  Case formulas with pairwise symmetric summands
/// are summed in cancelling pairs and come out exactly zero; the assembled
/// coefficients carry floating-point cancellation and are checked
/// relatively.
std::vector<CoefficientCheck> n1_coefficient_checks(int m_max, int p_max, QParam q,
                                                    const TruncationPolicy& pol);

/// Convenience: max relative residual over n1_coefficient_checks(3, p_max).
double n1_coefficient_cancellation(int p_max, QParam q, const TruncationPolicy& pol);

/// Truncated-kernel check: residual of the exact measure under the
/// truncated master-equation matrix, reported against the max diagonal
/// flow, plus the exact truncation-leak bound sum_s lost(s) mu(s) on the
/// same scale.  The residual is always explainable by (bounded by) the
/// leak.
struct KernelCheck {
    Residual residual;      // value = ||M mu||_inf, scale = ||diag mu||_inf
    double leak_relative;   // (sum_s lost(s) mu(s)) / scale
    int m_cap;
};

KernelCheck kernel_check(const ModelParams& p, int m_cap, const TruncationPolicy& pol = {});

/// ---- Verification battery -------------------------------------------------

enum class CheckSet { All, Stationarity, Master, Interchange, Ibp, AppendixB, Kernel };

/// Parses "stationarity|master|interchange|ibp|appendixB|kernel".
CheckSet check_set_from_name(const std::string& name);

struct BatteryOptions {
    CheckSet set = CheckSet::All;
    std::uint64_t lambda_seed = 0x6D61646D2D763155ULL;  // fixed: deterministic battery
    double perturb_mu = 0.0;  // fault injection: scales mu(0) by (1+perturb_mu)
    int threads = 0;
    TruncationPolicy pol{};
};

struct CheckRecord {
    std::string check;
    std::string inputs;  // compact JSON object text
    double value;
    double scale;
    double relative;
    double tolerance;
    bool pass;
};

struct VerificationReport {
    std::vector<CheckRecord> records;
    bool all_pass = true;
};

/// Runs the full battery (or the named subset) over the fixed parameter
/// grid: every identity at its pinned tolerance, one record per check.
VerificationReport run_battery(const BatteryOptions& options = {});

/// Machine-readable JSON rendering of a report.
std::string report_to_json(const VerificationReport& report);

}  // namespace madm
