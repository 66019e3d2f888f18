#pragma once

#include <optional>
#include <vector>

#include "hankelid/model.hpp"
#include "hankelid/solver.hpp"

namespace hankelid {

/// Residual inflation rules for the validation-criterion constraint
/// V_N(theta) <= V_N(theta_LS)(1 + eps).
enum class EpsilonRule {
    Pec,  // (1/(1 - n/N)) * n/N
    Aic,  // 2n/N
    Bic,  // log(N) * n/N
};

const char* epsilon_rule_name(EpsilonRule rule);

/// eps value of a rule for n parameters and N data points; requires 0 < n < N.
double epsilon(EpsilonRule rule, int n, int big_n);

struct ReweightOptions {
    /// Reweighting floor scale: the per-block delta is
    /// max(delta * sigma_max(H(theta_LS block)), 1e-8).
    double delta = 1e-2;
    int max_rounds = 5;
    double round_tol = 1e-3;  // relative theta change that stops the loop
};

/// Candidate grid for the cross-validation lambda search. An empty grid
/// defaults to 12 log-spaced points on [1e-4, 1e2] scaled to the data,
/// followed by a golden-section refinement around the best grid point.
struct LambdaSearch {
    std::vector<double> grid;
    int refine_evals = 8;
};

struct EstimateResult {
    Vec theta;
    ModelStructure structure;
    std::vector<SolverReport> reports;
    std::optional<double> epsilon_used;
    std::optional<double> lambda_used;
    double wall_seconds = 0.0;
    bool ls_ridge_fallback = false;
    /// log det(W1 + delta I) + log det(W2 + delta I) summed over blocks,
    /// one entry per reweighting round (reweighted estimator only).
    std::vector<double> reweight_surrogate;

    /// Impulse response of the estimate over n taps (FIR taps directly,
    /// B/A expansion for ARX).
    Vec impulse(int n) const;
};

/// Ordinary least squares on an already-built regression.
Vec least_squares(const RegressionData& reg, bool* ridge_used = nullptr);

/// Least squares packaged as an estimator (the "LS" benchmark column).
EstimateResult estimate_least_squares(const DataRecord& data, const ModelStructure& structure);

/// Nuclear-norm SPARSEVA: minimize the (block) Hankel nuclear norm subject
/// to V_N(theta) <= V_N(theta_LS)(1 + eps), identity weights.
EstimateResult sparseva_nuclear(const DataRecord& data, const ModelStructure& structure,
                                EpsilonRule rule, const SolverOptions& opts = {});

/// Reweighted nuclear-norm SPARSEVA: repeats the constrained solve with
/// weights refreshed from the previous optimum until theta stops moving or
/// max_rounds is hit.
EstimateResult sparseva_reweighted(const DataRecord& data, const ModelStructure& structure,
                                   EpsilonRule rule, const ReweightOptions& rw = {},
                                   const SolverOptions& opts = {});

/// Penalized nuclear-norm estimate with lambda chosen by chronological
/// cross-validation (one-step-ahead squared error on the held-out tail),
/// then refit on the full record. ARX ties lambda_a = lambda_b.
EstimateResult cv_nuclear(const DataRecord& data, const ModelStructure& structure,
                          double split_fraction = 2.0 / 3.0, const LambdaSearch& search = {},
                          const SolverOptions& opts = {});

}  // namespace hankelid
