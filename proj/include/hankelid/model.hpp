#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "hankelid/rng.hpp"

namespace hankelid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Stable discrete-time SISO system described by poles, zeros and a gain.
/// The transfer function is strictly proper:
///   G(q) = gain * q^{-1} * prod_j (1 - z_j q^{-1}) / prod_i (1 - p_i q^{-1})
/// so the impulse response starts at lag one. Complex poles and zeros come
/// in conjugate pairs and the system order equals the number of poles.
struct LinearSystem {
    std::vector<std::complex<double>> poles;
    std::vector<std::complex<double>> zeros;
    double gain = 1.0;

    int order() const { return static_cast<int>(poles.size()); }

    /// Denominator coefficients a_1..a_p of A(q) = 1 + a_1 q^{-1} + ...
    Vec denominator() const;
    /// Numerator coefficients b_1..b_{z+1} of B(q) = b_1 q^{-1} + ...
    Vec numerator() const;
};

/// One input/output record of length N, plus the noise level and the seed
/// that produced it.
struct DataRecord {
    Vec u;
    Vec y;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    int length() const { return static_cast<int>(u.size()); }
};

/// FIR(n) or ARX(nA, nB) regression structure. Every Hankel-embedded block
/// length must be odd, which the factories enforce.
struct ModelStructure {
    enum class Kind { Fir, Arx };

    Kind kind = Kind::Fir;
    int n = 0;   // FIR taps
    int na = 0;  // ARX autoregressive order
    int nb = 0;  // ARX exogenous order

    static ModelStructure fir(int n);
    static ModelStructure arx(int na, int nb);

    int param_count() const { return kind == Kind::Fir ? n : na + nb; }
    int max_lag() const { return kind == Kind::Fir ? n : std::max(na, nb); }
    const char* name() const { return kind == Kind::Fir ? "FIR" : "ARX"; }
};

/// Linear regression Y = Phi^T theta + e. Phi is parameters x N_eff and the
/// columns run over t = max_lag+1 .. N, so only observed samples are used.
struct RegressionData {
    Vec y;
    Mat phi;
    ModelStructure structure;
    int data_length = 0;  // raw N of the record the regression was built from

    int cols() const { return static_cast<int>(phi.cols()); }
};

/// Random stable system: poles drawn as conjugate pairs with probability 0.5
/// per pair, magnitudes uniform on [0.1, pole_radius_max], angles uniform on
/// [0, pi]; order-1 zeros with the same recipe capped at magnitude 0.95; the
/// gain is scaled so the 2-norm of the first 35 impulse-response taps lands
/// uniformly in [0.5, 2].
LinearSystem generate_random_system(int order, double pole_radius_max, Rng& rng);

/// First n impulse-response coefficients g_1..g_n of the system.
Vec impulse_response(const LinearSystem& sys, int n);

/// First n impulse-response coefficients of B(q)/A(q) with
/// A(q) = 1 + a_1 q^{-1} + ... and B(q) = b_1 q^{-1} + ...; computed by the
/// long-division recursion g_k = b_k - sum_j a_j g_{k-j}.
Vec arx_impulse_response(const Vec& a, const Vec& b, int n);

/// Unit-variance Gaussian white noise filtered through
/// F_u(q) = 0.436 / (1 - 0.9 q^{-1}) from zero initial state.
Vec lowpass_input(int n, Rng& rng);

/// Simulate y = G0 u + H0 e with e iid N(0, sigma_e^2) and zero initial
/// conditions. A missing noise system means H0 = 1 (white output noise).
DataRecord simulate(const LinearSystem& sys_g, const std::optional<LinearSystem>& sys_h,
                    const Vec& u, double sigma_e, Rng& rng);

/// Noise level sigma_e that hits the requested output SNR:
/// var(G0 u) / (sigma_e^2 * sum_k h_k^2) = 10^(snr_db/10), with the noise
/// gain of H0 truncated at 200 taps. Targets above 1e6 dB collapse to
/// sigma_e = 0.
double calibrate_noise(const LinearSystem& sys_g, const std::optional<LinearSystem>& sys_h,
                       const Vec& u, double target_snr_db);

/// Build the FIR or ARX regression problem from a record. FIR rows are
/// u(t-k); ARX rows are -y(t-k) for the first nA rows, then u(t-k).
RegressionData build_regression(const DataRecord& data, const ModelStructure& structure);

}  // namespace hankelid
