#include "hankelid/hankel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace hankelid {

HankelSpec::HankelSpec(int n_) : n(n_) {
    if (n <= 0 || n % 2 == 0) {
        throw std::invalid_argument("HankelSpec: block length must be a positive odd integer");
    }
}

WeightPair WeightPair::identity(int m) {
    return WeightPair{Mat::Identity(m, m), Mat::Identity(m, m)};
}

bool WeightPair::is_identity() const {
    return l1.isIdentity(0.0) && l2.isIdentity(0.0);
}

Mat hankel(const Vec& theta, const HankelSpec& spec) {
    if (theta.size() != spec.n) {
        throw std::invalid_argument("hankel: parameter length does not match the spec");
    }
    const int m = spec.m();
    Mat h(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            h(i, j) = theta[i + j];
        }
    }
    return h;
}

Vec hankel_adjoint(const Mat& m, const HankelSpec& spec) {
    if (m.rows() != spec.m() || m.cols() != spec.m()) {
        throw std::invalid_argument("hankel_adjoint: matrix does not match the spec");
    }
    Vec out = Vec::Zero(spec.n);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            out[i + j] += m(i, j);
        }
    }
    return out;
}

Vec hankel_antidiag_counts(const HankelSpec& spec) {
    const int m = spec.m();
    Vec c(spec.n);
    for (int k = 1; k <= spec.n; ++k) {
        c[k - 1] = static_cast<double>(m - std::abs(k - m));
    }
    return c;
}

double nuclear_norm(const Mat& x) {
    return Eigen::JacobiSVD<Mat>(x).singularValues().sum();
}

Mat svt(const Mat& x, double tau) {
    if (tau < 0.0) {
        throw std::invalid_argument("svt: threshold must be nonnegative");
    }
    if (tau == 0.0) {
        return x;
    }
    Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec s = (svd.singularValues().array() - tau).max(0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Mat inv_sqrt_psd(const Mat& w, double delta) {
    if (w.rows() != w.cols()) {
        throw std::invalid_argument("inv_sqrt_psd: matrix must be square");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("inv_sqrt_psd: delta must be positive");
    }
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
        throw std::invalid_argument("inv_sqrt_psd: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()));
    Vec inv_sqrt = (es.eigenvalues().array().max(0.0) + delta).rsqrt();
    Mat r = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (r + r.transpose());
}

Mat sqrt_psd(const Mat& w) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()));
    Vec sqrt = es.eigenvalues().array().max(0.0).sqrt();
    Mat r = es.eigenvectors() * sqrt.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (r + r.transpose());
}

WeightUpdate weight_update(const Mat& h_opt, const WeightPair& l, double delta) {
    Eigen::JacobiSVD<Mat> svd(l.l1 * h_opt * l.l2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec s = svd.singularValues();

    // L1, L2 are SPD, so L^{-1} U is a plain triangular solve pair.
    Eigen::LLT<Mat> llt1(l.l1);
    Eigen::LLT<Mat> llt2(l.l2);
    const Mat a = llt1.solve(svd.matrixU());
    const Mat b = llt2.solve(svd.matrixV());

    WeightUpdate out;
    out.w1 = a * s.asDiagonal() * a.transpose();
    out.w1 = 0.5 * (out.w1 + out.w1.transpose()).eval();
    out.w2 = b * s.asDiagonal() * b.transpose();
    out.w2 = 0.5 * (out.w2 + out.w2.transpose()).eval();
    out.next = WeightPair{inv_sqrt_psd(out.w1, delta), inv_sqrt_psd(out.w2, delta)};
    return out;
}

}  // namespace hankelid
