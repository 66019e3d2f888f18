#include "hankelid/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hankelid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Factorization of the pair (G, C) with G symmetric PD and C = phi phi^T:
// G = L L^T and L^{-1} C L^{-T} = Q diag(lam) Q^T. Every matrix the solver
// needs has the form s G + t C = (L Q) (s I + t diag(lam)) (L Q)^T, so one
// decomposition serves all beta values and the whole multiplier search.
class QuadraticPencil {
public:
    QuadraticPencil(const Mat& g, const Mat& phi, const Vec& y) {
        Eigen::LLT<Mat> llt(g);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("QuadraticPencil: quadratic term is not positive definite");
        }
        lower_ = llt.matrixL();
        Mat c = phi * phi.transpose();
        Mat x = lower_.triangularView<Eigen::Lower>().solve(c);
        Mat b = lower_.triangularView<Eigen::Lower>().solve(x.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (b + b.transpose()));
        q_ = es.eigenvectors();
        lam_ = es.eigenvalues().cwiseMax(0.0);
        wd_ = forward(phi * y);
        y_sq_ = y.squaredNorm();
    }

    // Q^T L^{-1} r
    Vec forward(const Vec& r) const {
        return q_.transpose() * lower_.triangularView<Eigen::Lower>().solve(r);
    }

    // theta = L^{-T} Q tt
    Vec from_coords(const Vec& tt) const {
        return lower_.transpose().triangularView<Eigen::Upper>().solve((q_ * tt).eval());
    }

    // (s G + t C)^{-1} r
    Vec solve(double s, double t, const Vec& r) const {
        Vec tt = forward(r).array() / (s + t * lam_.array());
        return from_coords(tt);
    }

    // ||y - phi^T theta||^2 expressed in pencil coordinates
    double value_at(const Vec& tt) const {
        return y_sq_ - 2.0 * wd_.dot(tt) + (lam_.array() * tt.array().square()).sum();
    }

    const Vec& lam() const { return lam_; }
    const Vec& wd() const { return wd_; }
    double y_sq() const { return y_sq_; }

private:
    Mat lower_;
    Mat q_;
    Vec lam_;
    Vec wd_;
    double y_sq_ = 0.0;
};

// Ball-constrained quadratic step: minimize (s/2) ||theta||_G^2 + q^T theta
// subject to V(theta) <= rho, with wp = forward(-q). The KKT point is
// tt_i(mu) = (2 mu wd_i + wp_i) / (s + 2 mu lam_i) in pencil coordinates and
// g(mu) = V(tt(mu)) - rho decreases monotonically, so a bracketed Newton
// search finds the multiplier.
//
// The O(n) pencil expression for V cancels catastrophically once
// V << ||Y||^2, so when rho sits near that floor the gap is evaluated as the
// residual in the original variables and the search ends on the feasible
// side of the bracket. For ill-conditioned regressors the factored path may
// not reach the least-squares residual at any finite mu; the mu -> inf limit
// point supplied in `fallback` (the least-squares solution, feasible after
// the rho clamp) then stands in for the capped bracket.
struct BallSolution {
    Vec theta;
    double mu = 0.0;
};

BallSolution ball_step(const QuadraticPencil& pencil, double s, const Vec& wp, double rho,
                       double tol_rel, const std::function<double(const Vec&)>& value_of,
                       const Vec* fallback) {
    const Vec& lam = pencil.lam();
    const Vec& wd = pencil.wd();
    const double eps = std::numeric_limits<double>::epsilon();
    const bool exact = rho < 1e-8 * (pencil.y_sq() + 1.0);

    auto coords_at = [&](double mu) -> Vec {
        return ((2.0 * mu) * wd + wp).array() / (s + 2.0 * mu * lam.array());
    };
    auto solution_at = [&](double mu) -> BallSolution {
        return {pencil.from_coords(coords_at(mu)), mu};
    };
    auto gap_at = [&](double mu) {
        const Vec tt = coords_at(mu);
        return (exact ? value_of(pencil.from_coords(tt)) : pencil.value_at(tt)) - rho;
    };
    auto slope_at = [&](double mu) {
        const Vec tt = coords_at(mu);
        double acc = 0.0;
        for (int i = 0; i < tt.size(); ++i) {
            const double den = s + 2.0 * mu * lam[i];
            const double dtt = 2.0 * (s * wd[i] - lam[i] * wp[i]) / (den * den);
            acc += (-2.0 * wd[i] + 2.0 * lam[i] * tt[i]) * dtt;
        }
        return acc;
    };

    // In exact mode insist on a feasible endpoint; the floor covers targets
    // (such as rho = 0) that the residual arithmetic cannot reach exactly.
    const double floor_g = exact ? 1e-24 * (pencil.y_sq() + 1.0)
                                 : 16.0 * eps * (pencil.y_sq() + rho);
    const double tol_g = std::max(tol_rel * rho, floor_g);
    const double target = exact ? 0.0 : tol_g;

    if (gap_at(0.0) <= 0.0) {
        return solution_at(0.0);
    }

    // Bracket the root by doubling. g tends to V_N(theta_LS) - rho <= 0, but
    // may only reach it in the limit; accept the cap when the gap closed.
    const double mu_cap = 1e18 * (s + 1.0);
    double lo = 0.0;
    double hi = std::max(1.0, s);
    double g_hi = gap_at(hi);
    while (g_hi > target && hi < mu_cap) {
        lo = hi;
        hi *= 4.0;
        g_hi = gap_at(hi);
    }
    if (g_hi > target) {
        if (g_hi <= tol_g) {
            return solution_at(hi);
        }
        if (fallback != nullptr && value_of(*fallback) <= rho) {
            return {*fallback, hi};
        }
        std::ostringstream msg;
        msg << "qcqp ball step: failed to bracket the multiplier (mu=" << hi
            << ", residual gap=" << g_hi << ", rho=" << rho << ")";
        throw std::runtime_error(msg.str());
    }
    if (std::abs(g_hi) <= tol_g) {
        return solution_at(hi);
    }

    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = gap_at(mu);
        if (std::abs(g) <= tol_g && (!exact || g <= 0.0)) {
            return solution_at(mu);
        }
        if (g > 0.0) {
            lo = mu;
        } else {
            hi = mu;
        }
        const double gp = slope_at(mu);
        double next = gp < 0.0 ? mu - g / gp : mu;
        if (!std::isfinite(next) || next <= lo || next >= hi) {
            next = 0.5 * (lo + hi);
        }
        mu = next;
        if (hi - lo <= 1e-14 * hi) {
            break;
        }
    }
    return solution_at(hi);  // feasible end of the bracket
}

// Per-block workspace: precomputed weight products and ADMM state.
struct BlockWork {
    explicit BlockWork(const HankelBlock& b) : blk(b) {}

    HankelBlock blk;
    bool ident = false;
    Mat l1sq;
    Mat l2sq;
    Mat z;
    Mat u;
};

Mat block_map(const BlockWork& b, const Vec& theta_blk) {
    Mat h = hankel(theta_blk, b.blk.spec);
    if (b.ident) {
        return h;
    }
    return b.blk.weights.l1 * h * b.blk.weights.l2;
}

Vec block_adjoint(const BlockWork& b, const Mat& m) {
    if (b.ident) {
        return hankel_adjoint(m, b.blk.spec);
    }
    return hankel_adjoint(b.blk.weights.l1 * m * b.blk.weights.l2, b.blk.spec);
}

// Gram of theta_blk -> L1 H(theta_blk) L2; diagonal anti-diagonal counts for
// identity weights, dense otherwise.
Mat block_gram(const BlockWork& b) {
    const int n = b.blk.spec.n;
    if (b.ident) {
        return hankel_antidiag_counts(b.blk.spec).asDiagonal();
    }
    Mat g(n, n);
    Vec e = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        e[k] = 1.0;
        g.col(k) = hankel_adjoint(b.l1sq * hankel(e, b.blk.spec) * b.l2sq, b.blk.spec);
        e[k] = 0.0;
    }
    return 0.5 * (g + g.transpose());
}

std::vector<BlockWork> prepare_blocks(const ProblemSpec& spec) {
    const int nparams = static_cast<int>(spec.regression.phi.rows());
    if (spec.blocks.empty()) {
        throw std::invalid_argument("ProblemSpec: at least one Hankel block is required");
    }
    std::vector<BlockWork> work;
    work.reserve(spec.blocks.size());
    for (const auto& blk : spec.blocks) {
        if (blk.multiplier < 0.0) {
            throw std::invalid_argument("ProblemSpec: block multiplier must be nonnegative");
        }
        const int m = blk.spec.m();
        if (blk.weights.l1.rows() != m || blk.weights.l1.cols() != m ||
            blk.weights.l2.rows() != m || blk.weights.l2.cols() != m) {
            throw std::invalid_argument("ProblemSpec: weight dimensions do not match the block");
        }
        BlockWork w(blk);
        w.ident = blk.weights.is_identity();
        if (!w.ident) {
            w.l1sq = blk.weights.l1 * blk.weights.l1;
            w.l2sq = blk.weights.l2 * blk.weights.l2;
        }
        work.push_back(std::move(w));
    }
    std::sort(work.begin(), work.end(),
              [](const BlockWork& a, const BlockWork& b) { return a.blk.offset < b.blk.offset; });
    int expect = 0;
    for (const auto& w : work) {
        if (w.blk.offset != expect) {
            throw std::invalid_argument("ProblemSpec: blocks must be disjoint and cover theta");
        }
        expect += w.blk.spec.n;
    }
    if (expect != nparams) {
        throw std::invalid_argument("ProblemSpec: blocks must cover theta exactly");
    }
    return work;
}

Mat assemble_gram(const std::vector<BlockWork>& work, int nparams) {
    Mat g = Mat::Zero(nparams, nparams);
    for (const auto& w : work) {
        const int n = w.blk.spec.n;
        g.block(w.blk.offset, w.blk.offset, n, n) = block_gram(w);
    }
    return g;
}

enum class Mode { Penalized, Constrained };

double block_objective(const std::vector<BlockWork>& work, const Vec& theta) {
    double acc = 0.0;
    for (const auto& w : work) {
        acc += w.blk.multiplier * nuclear_norm(block_map(w, theta.segment(w.blk.offset, w.blk.spec.n)));
    }
    return acc;
}

SolveResult admm_solve(const ProblemSpec& spec, Mode mode, double level, const SolverOptions& opts,
                       const Vec* warm_start) {
    const auto t0 = Clock::now();
    if (opts.max_iter < 1 || opts.abs_tol <= 0.0 || opts.rel_tol <= 0.0 || opts.beta <= 0.0 ||
        opts.mu_tol <= 0.0) {
        throw std::invalid_argument("SolverOptions: tolerances, beta and max_iter must be positive");
    }

    const RegressionData& reg = spec.regression;
    const int nparams = static_cast<int>(reg.phi.rows());
    std::vector<BlockWork> work = prepare_blocks(spec);

    bool ridge_used = false;
    const Vec theta_ls = least_squares_theta(reg.phi, reg.y, &ridge_used);
    const double v_ls = residual_sq(reg, theta_ls);

    double rho = 0.0;
    if (mode == Mode::Constrained) {
        rho = level;
        if (rho < v_ls * (1.0 - 1e-12) - 16.0 * std::numeric_limits<double>::epsilon()) {
            throw std::invalid_argument("solve_constrained: rho is below the least-squares residual");
        }
        rho = std::max(rho, v_ls);

        // Zero is feasible and attains the objective lower bound.
        if (reg.y.squaredNorm() <= rho) {
            SolveResult res;
            res.theta = Vec::Zero(nparams);
            res.report.converged = true;
            res.report.objective = 0.0;
            res.report.achieved_vn = reg.y.squaredNorm();
            res.report.wall_seconds = seconds_since(t0);
            return res;
        }
    } else if (level < 0.0) {
        throw std::invalid_argument("solve_penalized: lambda must be nonnegative");
    }

    const Mat gram = assemble_gram(work, nparams);
    const QuadraticPencil pencil(gram, reg.phi, reg.y);
    const Vec d = reg.phi * reg.y;
    const auto value_of = [&](const Vec& theta_probe) { return residual_sq(reg, theta_probe); };

    Vec theta = theta_ls;
    if (warm_start != nullptr) {
        if (warm_start->size() != nparams) {
            throw std::invalid_argument("warm start has the wrong dimension");
        }
        theta = *warm_start;
    }
    for (auto& w : work) {
        w.z = block_map(w, theta.segment(w.blk.offset, w.blk.spec.n));
        w.u = Mat::Zero(w.blk.spec.m(), w.blk.spec.m());
    }

    double beta = opts.beta;
    double sq_m_total = 0.0;
    for (const auto& w : work) {
        const double m = static_cast<double>(w.blk.spec.m());
        sq_m_total += m * m;
    }

    SolverReport report;
    report.primal_residuals.reserve(static_cast<std::size_t>(opts.max_iter));
    report.dual_residuals.reserve(static_cast<std::size_t>(opts.max_iter));

    Vec coupling = Vec::Zero(nparams);
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        // theta step
        coupling.setZero();
        for (const auto& w : work) {
            coupling.segment(w.blk.offset, w.blk.spec.n) = block_adjoint(w, w.z - w.u);
        }
        if (mode == Mode::Penalized) {
            theta = pencil.solve(beta, 2.0, 2.0 * d + beta * coupling);
        } else {
            const Vec wp = pencil.forward(beta * coupling);
            theta = ball_step(pencil, beta, wp, rho, opts.mu_tol, value_of, &theta_ls).theta;
        }

        // matrix step and dual ascent
        double prim_sq = 0.0;
        double ax_sq = 0.0;
        double z_sq = 0.0;
        Vec dual_change = Vec::Zero(nparams);
        Vec scaled_dual = Vec::Zero(nparams);
        for (auto& w : work) {
            const Mat v = block_map(w, theta.segment(w.blk.offset, w.blk.spec.n));
            const double tau = (mode == Mode::Penalized ? level * w.blk.multiplier : w.blk.multiplier) / beta;
            const Mat z_old = w.z;
            w.z = svt(v + w.u, tau);
            w.u += v - w.z;
            prim_sq += (v - w.z).squaredNorm();
            ax_sq += v.squaredNorm();
            z_sq += w.z.squaredNorm();
            dual_change.segment(w.blk.offset, w.blk.spec.n) = block_adjoint(w, w.z - z_old);
            scaled_dual.segment(w.blk.offset, w.blk.spec.n) = block_adjoint(w, w.u);
        }

        const double r_norm = std::sqrt(prim_sq);
        const double s_norm = beta * dual_change.norm();
        const double eps_pri = std::sqrt(sq_m_total) * opts.abs_tol +
                               opts.rel_tol * std::max(std::sqrt(ax_sq), std::sqrt(z_sq));
        const double eps_dual =
            std::sqrt(static_cast<double>(nparams)) * opts.abs_tol +
            opts.rel_tol * beta * scaled_dual.norm();

        report.primal_residuals.push_back(r_norm);
        report.dual_residuals.push_back(s_norm);
        report.iterations = iter;

        if (r_norm <= eps_pri && s_norm <= eps_dual) {
            report.converged = true;
            break;
        }

        // residual balancing keeps the two residuals within a decade
        if (r_norm > 10.0 * s_norm && beta < 1e6) {
            beta *= 2.0;
            for (auto& w : work) {
                w.u *= 0.5;
            }
        } else if (s_norm > 10.0 * r_norm && beta > 1e-6) {
            beta *= 0.5;
            for (auto& w : work) {
                w.u *= 2.0;
            }
        }
    }

    SolveResult res;
    res.theta = theta;
    res.duals.reserve(work.size());
    for (const auto& w : work) {
        res.duals.push_back(beta * w.u);
    }
    report.achieved_vn = residual_sq(reg, theta);
    const double nuclear_part = block_objective(work, theta);
    report.objective =
        mode == Mode::Penalized ? report.achieved_vn + level * nuclear_part : nuclear_part;
    report.wall_seconds = seconds_since(t0);
    res.report = std::move(report);
    return res;
}

}  // namespace

std::vector<HankelBlock> default_blocks(const ModelStructure& structure) {
    std::vector<HankelBlock> blocks;
    if (structure.kind == ModelStructure::Kind::Fir) {
        const HankelSpec spec(structure.n);
        blocks.push_back({0, spec, WeightPair::identity(spec.m()), 1.0});
    } else {
        const HankelSpec spec_a(structure.na);
        const HankelSpec spec_b(structure.nb);
        blocks.push_back({0, spec_a, WeightPair::identity(spec_a.m()), 1.0});
        blocks.push_back({structure.na, spec_b, WeightPair::identity(spec_b.m()), 1.0});
    }
    return blocks;
}

SolveResult solve_penalized(const ProblemSpec& spec, double lambda, const SolverOptions& opts,
                            const Vec* warm_start) {
    return admm_solve(spec, Mode::Penalized, lambda, opts, warm_start);
}

SolveResult solve_constrained(const ProblemSpec& spec, double rho, const SolverOptions& opts,
                              const Vec* warm_start) {
    return admm_solve(spec, Mode::Constrained, rho, opts, warm_start);
}

QcqpResult qcqp_ball_step(const Mat& p, const Vec& q, const Mat& phi, const Vec& y, double rho,
                          double tol) {
    if (rho < 0.0) {
        throw std::invalid_argument("qcqp_ball_step: rho must be nonnegative");
    }
    const QuadraticPencil pencil(p, phi, y);
    const auto value_of = [&](const Vec& theta_probe) {
        return (y - phi.transpose() * theta_probe).squaredNorm();
    };
    const Vec theta_ls = least_squares_theta(phi, y);
    const BallSolution sol = ball_step(pencil, 1.0, pencil.forward(-q), rho, tol, value_of, &theta_ls);
    return {sol.theta, sol.mu};
}

Vec least_squares_theta(const Mat& phi, const Vec& y, bool* ridge_used) {
    const int n = static_cast<int>(phi.rows());
    if (ridge_used != nullptr) {
        *ridge_used = false;
    }
    Mat c = phi * phi.transpose();
    const Vec d = phi * y;
    if (c.trace() <= 0.0) {
        return Vec::Zero(n);
    }
    Eigen::LDLT<Mat> ldlt(c);
    Vec x = ldlt.solve(d);
    bool ok = ldlt.info() == Eigen::Success && x.allFinite();
    if (ok) {
        const double scale = c.norm() * x.norm() + d.norm();
        ok = (c * x - d).norm() <= 1e-8 * scale;
    }
    if (!ok) {
        const double ridge = 1e-10 * c.trace() / static_cast<double>(n);
        c.diagonal().array() += ridge;
        x = Eigen::LDLT<Mat>(c).solve(d);
        if (ridge_used != nullptr) {
            *ridge_used = true;
        }
    }
    return x;
}

double residual_sq(const RegressionData& reg, const Vec& theta) {
    return (reg.y - reg.phi.transpose() * theta).squaredNorm();
}

}  // namespace hankelid
