#pragma once

#include <Eigen/Core>

#include "hankelid/model.hpp"

namespace hankelid {

/// Square Hankel embedding of an odd-length parameter block:
/// entry (i, j) of the m x m matrix is theta_{i+j-1} with m = (n+1)/2.
struct HankelSpec {
    explicit HankelSpec(int n);

    int n;
    int m() const { return (n + 1) / 2; }
};

/// Pair of symmetric positive-definite reweighting factors; identity on the
/// first round, (W + delta I)^{-1/2} afterwards.
struct WeightPair {
    Mat l1;
    Mat l2;

    static WeightPair identity(int m);
    bool is_identity() const;
};

Mat hankel(const Vec& theta, const HankelSpec& spec);

/// Adjoint of the Hankel map under the Frobenius pairing: component k is the
/// plain (unaveraged) sum over the anti-diagonal i+j-1 = k.
Vec hankel_adjoint(const Mat& m, const HankelSpec& spec);

/// Anti-diagonal entry counts c_k = m - |k - m|; the Gram of the Hankel map
/// is diag(c), which the solver folds into its normal equations.
Vec hankel_antidiag_counts(const HankelSpec& spec);

/// Sum of singular values.
double nuclear_norm(const Mat& x);

/// Singular value thresholding: U max(S - tau, 0) V^T, the proximal operator
/// of tau * nuclear norm.
Mat svt(const Mat& x, double tau);

/// (W + delta I)^{-1/2} for symmetric PSD W; the result R satisfies
/// R (W + delta I) R = I.
Mat inv_sqrt_psd(const Mat& w, double delta);

/// Symmetric PSD square root, used to turn SDP weight matrices A into the
/// factor form L = A^{1/2} the solver consumes.
Mat sqrt_psd(const Mat& w);

/// Result of one reweighting step at the Hankel-matrix point h_opt.
struct WeightUpdate {
    Mat w1;           // optimal SDP weights at h_opt
    Mat w2;
    WeightPair next;  // (w + delta I)^{-1/2} factors for the following round
};

/// Closed-form minimizer of 1/2 [Tr(L1^2 W1) + Tr(L2^2 W2)] over the LMI
/// [[W1, H],[H^T, W2]] >= 0: with U S V^T = svd(L1 H L2), the optimum is
/// W1 = L1^{-1} U S U^T L1^{-1}, W2 = L2^{-1} V S V^T L2^{-1}, achieving
/// objective ||L1 H L2||_*.
WeightUpdate weight_update(const Mat& h_opt, const WeightPair& l, double delta);

}  // namespace hankelid
