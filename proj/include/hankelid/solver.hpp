#pragma once

#include <vector>

#include "hankelid/hankel.hpp"
#include "hankelid/model.hpp"

namespace hankelid {

/// One Hankel-regularized slice of the parameter vector.
struct HankelBlock {
    int offset;          // first theta index of the block
    HankelSpec spec;     // block length spec.n
    WeightPair weights;  // reweighting factors, identity on the first round
    double multiplier = 1.0;
};

/// Regression plus the Hankel block layout. Blocks must be disjoint and
/// cover the parameter vector exactly; FIR uses one block, ARX two.
struct ProblemSpec {
    RegressionData regression;
    std::vector<HankelBlock> blocks;
};

/// Blocks covering theta for a model structure with identity weights.
std::vector<HankelBlock> default_blocks(const ModelStructure& structure);

struct SolverOptions {
    double beta = 1.0;      // initial splitting penalty
    double abs_tol = 1e-6;
    double rel_tol = 1e-5;
    int max_iter = 2000;
    double mu_tol = 1e-10;  // relative tolerance of the multiplier search
};

struct SolverReport {
    int iterations = 0;
    std::vector<double> primal_residuals;
    std::vector<double> dual_residuals;
    double objective = 0.0;    // mode objective at the returned theta
    double achieved_vn = 0.0;  // ||Y - Phi^T theta||^2 at the returned theta
    bool converged = false;
    double wall_seconds = 0.0;
};

struct SolveResult {
    Vec theta;
    SolverReport report;
    /// Scaled dual variables beta*U per block at exit. For a converged
    /// penalized solve, dual[b] / (lambda * mult_b) is a nuclear-norm
    /// subgradient witness certifying first-order optimality.
    std::vector<Mat> duals;
};

/// min ||Y - Phi^T theta||^2 + lambda * sum_b mult_b ||L1 H(theta_b) L2||_*
/// by operator splitting: one auxiliary matrix per block updated by svt, a
/// linear theta step against the fixed normal-equations-plus-Gram matrix,
/// and dual ascent on the coupling.
SolveResult solve_penalized(const ProblemSpec& spec, double lambda,
                            const SolverOptions& opts = {}, const Vec* warm_start = nullptr);

/// min sum_b mult_b ||L1 H(theta_b) L2||_*  s.t.  ||Y - Phi^T theta||^2 <= rho.
/// Same splitting with the theta step replaced by the ball-constrained
/// quadratic minimizer.
SolveResult solve_constrained(const ProblemSpec& spec, double rho,
                              const SolverOptions& opts = {}, const Vec* warm_start = nullptr);

struct QcqpResult {
    Vec theta;
    double mu = 0.0;  // KKT multiplier of the residual ball
};

/// min 1/2 theta^T P theta + q^T theta  s.t.  ||y - phi^T theta||^2 <= rho,
/// P symmetric positive definite. Returns the unconstrained minimizer when
/// feasible; otherwise finds the KKT multiplier by safeguarded Newton with
/// bisection fallback on the monotone residual function, using a single
/// eigendecomposition of the (P, phi phi^T) pencil.
QcqpResult qcqp_ball_step(const Mat& p, const Vec& q, const Mat& phi, const Vec& y, double rho,
                          double tol = 1e-10);

/// Ordinary least squares theta via the normal equations, with a ridge of
/// 1e-10 * trace(phi phi^T)/n added only when the factorization is unusable.
Vec least_squares_theta(const Mat& phi, const Vec& y, bool* ridge_used = nullptr);

/// V_N(theta) = ||Y - Phi^T theta||^2.
double residual_sq(const RegressionData& reg, const Vec& theta);

}  // namespace hankelid
