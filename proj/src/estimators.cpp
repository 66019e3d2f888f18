#include "hankelid/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace hankelid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double log_det_shifted(const Mat& w, double delta) {
    Eigen::SelfAdjointEigenSolver<Mat> es(w, Eigen::EigenvaluesOnly);
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        acc += std::log(std::max(es.eigenvalues()[i], 0.0) + delta);
    }
    return acc;
}

double sigma_max(const Mat& x) {
    return Eigen::JacobiSVD<Mat>(x).singularValues()[0];
}

RegressionData slice_columns(const RegressionData& reg, int begin, int count) {
    RegressionData out;
    out.structure = reg.structure;
    out.data_length = reg.data_length;
    out.y = reg.y.segment(begin, count);
    out.phi = reg.phi.middleCols(begin, count);
    return out;
}

}  // namespace

const char* epsilon_rule_name(EpsilonRule rule) {
    switch (rule) {
        case EpsilonRule::Pec: return "PEC";
        case EpsilonRule::Aic: return "AIC";
        case EpsilonRule::Bic: return "BIC";
    }
    return "?";
}

double epsilon(EpsilonRule rule, int n, int big_n) {
    if (n <= 0 || n >= big_n) {
        throw std::invalid_argument("epsilon: need 0 < n < N");
    }
    const double ratio = static_cast<double>(n) / static_cast<double>(big_n);
    switch (rule) {
        case EpsilonRule::Pec: return ratio / (1.0 - ratio);
        case EpsilonRule::Aic: return 2.0 * ratio;
        case EpsilonRule::Bic: return std::log(static_cast<double>(big_n)) * ratio;
    }
    throw std::invalid_argument("epsilon: unknown rule");
}

Vec EstimateResult::impulse(int n) const {
    if (structure.kind == ModelStructure::Kind::Fir) {
        Vec g = Vec::Zero(n);
        const int taps = std::min<int>(n, static_cast<int>(theta.size()));
        g.head(taps) = theta.head(taps);
        return g;
    }
    return arx_impulse_response(theta.head(structure.na), theta.tail(structure.nb), n);
}

Vec least_squares(const RegressionData& reg, bool* ridge_used) {
    return least_squares_theta(reg.phi, reg.y, ridge_used);
}

EstimateResult estimate_least_squares(const DataRecord& data, const ModelStructure& structure) {
    const auto t0 = Clock::now();
    const RegressionData reg = build_regression(data, structure);
    EstimateResult res;
    res.structure = structure;
    res.theta = least_squares(reg, &res.ls_ridge_fallback);
    res.wall_seconds = seconds_since(t0);
    return res;
}

EstimateResult sparseva_nuclear(const DataRecord& data, const ModelStructure& structure,
                                EpsilonRule rule, const SolverOptions& opts) {
    const auto t0 = Clock::now();
    const RegressionData reg = build_regression(data, structure);

    EstimateResult res;
    res.structure = structure;
    const Vec theta_ls = least_squares(reg, &res.ls_ridge_fallback);
    const double eps = epsilon(rule, structure.param_count(), data.length());
    const double rho = residual_sq(reg, theta_ls) * (1.0 + eps);

    ProblemSpec spec{reg, default_blocks(structure)};
    SolveResult sol = solve_constrained(spec, rho, opts);

    res.theta = std::move(sol.theta);
    res.reports.push_back(std::move(sol.report));
    res.epsilon_used = eps;
    res.wall_seconds = seconds_since(t0);
    return res;
}

EstimateResult sparseva_reweighted(const DataRecord& data, const ModelStructure& structure,
                                   EpsilonRule rule, const ReweightOptions& rw,
                                   const SolverOptions& opts) {
    if (!(rw.delta > 0.0) || rw.max_rounds < 1) {
        throw std::invalid_argument("ReweightOptions: delta must be positive, max_rounds >= 1");
    }
    const auto t0 = Clock::now();
    const RegressionData reg = build_regression(data, structure);

    EstimateResult res;
    res.structure = structure;
    const Vec theta_ls = least_squares(reg, &res.ls_ridge_fallback);
    const double eps = epsilon(rule, structure.param_count(), data.length());
    const double rho = residual_sq(reg, theta_ls) * (1.0 + eps);
    res.epsilon_used = eps;

    ProblemSpec spec{reg, default_blocks(structure)};

    // Per-block delta scaled to the least-squares Hankel spectrum.
    std::vector<double> deltas;
    for (const auto& blk : spec.blocks) {
        const Mat h_ls = hankel(theta_ls.segment(blk.offset, blk.spec.n), blk.spec);
        deltas.push_back(std::max(rw.delta * sigma_max(h_ls), 1e-8));
    }

    Vec theta = theta_ls;
    for (int round = 0; round < rw.max_rounds; ++round) {
        const Vec* warm = round == 0 ? nullptr : &theta;
        SolveResult sol = solve_constrained(spec, rho, opts, warm);
        const Vec theta_prev = theta;
        theta = std::move(sol.theta);
        res.reports.push_back(std::move(sol.report));

        double surrogate = 0.0;
        for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
            auto& blk = spec.blocks[b];
            const Mat h_opt = hankel(theta.segment(blk.offset, blk.spec.n), blk.spec);
            WeightUpdate upd = weight_update(h_opt, blk.weights, deltas[b]);
            surrogate += log_det_shifted(upd.w1, deltas[b]) + log_det_shifted(upd.w2, deltas[b]);
            blk.weights = std::move(upd.next);
        }
        res.reweight_surrogate.push_back(surrogate);

        if (round > 0) {
            const double change = (theta - theta_prev).norm();
            if (change <= rw.round_tol * std::max(theta_prev.norm(), 1e-12)) {
                break;
            }
        }
    }

    res.theta = std::move(theta);
    res.wall_seconds = seconds_since(t0);
    return res;
}

EstimateResult cv_nuclear(const DataRecord& data, const ModelStructure& structure,
                          double split_fraction, const LambdaSearch& search,
                          const SolverOptions& opts) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw std::invalid_argument("cv_nuclear: split_fraction must lie in (0, 1)");
    }
    const auto t0 = Clock::now();
    const RegressionData reg = build_regression(data, structure);

    const int cols = reg.cols();
    const int n_est = static_cast<int>(std::lround(split_fraction * cols));
    const int n_val = cols - n_est;
    if (n_est <= reg.structure.param_count() || n_val < 1) {
        throw std::invalid_argument("cv_nuclear: split leaves too few samples in one part");
    }
    const RegressionData est = slice_columns(reg, 0, n_est);
    const RegressionData val = slice_columns(reg, n_est, n_val);

    EstimateResult res;
    res.structure = structure;
    const Vec theta_ls_est = least_squares(est, &res.ls_ridge_fallback);

    std::vector<double> grid = search.grid;
    if (grid.empty()) {
        double nuclear_ls = 0.0;
        for (const auto& blk : default_blocks(structure)) {
            nuclear_ls += nuclear_norm(hankel(theta_ls_est.segment(blk.offset, blk.spec.n), blk.spec));
        }
        const double scale = residual_sq(est, theta_ls_est) / std::max(1.0, nuclear_ls);
        grid.reserve(12);
        for (int i = 0; i < 12; ++i) {
            const double expo = -4.0 + 6.0 * static_cast<double>(i) / 11.0;
            grid.push_back(scale * std::pow(10.0, expo));
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    ProblemSpec est_spec{est, default_blocks(structure)};
    auto score_lambda = [&](double lambda) {
        SolveResult sol = solve_penalized(est_spec, lambda, opts);
        const double score = residual_sq(val, sol.theta);
        return std::make_pair(score, std::move(sol));
    };

    double best_lambda = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    Vec best_theta;
    for (double lambda : grid) {
        auto [score, sol] = score_lambda(lambda);
        res.reports.push_back(std::move(sol.report));
        if (score < best_score) {
            best_score = score;
            best_lambda = lambda;
            best_theta = std::move(sol.theta);
        }
    }

    // Golden-section refinement in log-lambda between the neighbours of the
    // best grid point; ties keep the smaller lambda.
    const auto it = std::find(grid.begin(), grid.end(), best_lambda);
    const std::size_t idx = static_cast<std::size_t>(it - grid.begin());
    if (grid.size() >= 3 && search.refine_evals > 0) {
        double lo = std::log(grid[idx == 0 ? 0 : idx - 1]);
        double hi = std::log(grid[std::min(idx + 1, grid.size() - 1)]);
        if (hi > lo) {
            const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = hi - inv_phi * (hi - lo);
            double x2 = lo + inv_phi * (hi - lo);
            auto eval = [&](double lx) {
                const double lambda = std::exp(lx);
                auto [score, sol] = score_lambda(lambda);
                res.reports.push_back(std::move(sol.report));
                if (score < best_score || (score == best_score && lambda < best_lambda)) {
                    best_score = score;
                    best_lambda = lambda;
                    best_theta = std::move(sol.theta);
                }
                return score;
            };
            double f1 = eval(x1);
            double f2 = eval(x2);
            for (int k = 2; k < search.refine_evals; ++k) {
                if (f1 <= f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - inv_phi * (hi - lo);
                    f1 = eval(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + inv_phi * (hi - lo);
                    f2 = eval(x2);
                }
            }
        }
    }

    // Refit on the full record at the chosen lambda.
    ProblemSpec full_spec{reg, default_blocks(structure)};
    SolveResult refit = solve_penalized(full_spec, best_lambda, opts,
                                        best_theta.size() == reg.phi.rows() ? &best_theta : nullptr);
    res.theta = std::move(refit.theta);
    res.reports.push_back(std::move(refit.report));
    res.lambda_used = best_lambda;
    res.wall_seconds = seconds_since(t0);
    return res;
}

}  // namespace hankelid
