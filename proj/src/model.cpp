#include "hankelid/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hankelid {

namespace {

// Expand prod_i (1 - r_i q^{-1}) into monic coefficients [1, c_1, ..., c_k].
// Roots must close under conjugation so the coefficients are real.
Vec poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> c(roots.size() + 1, 0.0);
    c[0] = 1.0;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        for (std::size_t j = i + 1; j > 0; --j) {
            c[j] -= roots[i] * c[j - 1];
        }
    }
    Vec out(static_cast<int>(c.size()));
    for (std::size_t j = 0; j < c.size(); ++j) {
        out[static_cast<int>(j)] = c[j].real();
    }
    return out;
}

// Draw `count` roots: conjugate pairs with probability 0.5 while two or more
// slots remain, real roots otherwise. Magnitudes uniform on [0.1, radius_max],
// pair angles uniform on [0, pi], real roots get a random sign.
std::vector<std::complex<double>> draw_roots(int count, double radius_max, Rng& rng) {
    std::vector<std::complex<double>> roots;
    roots.reserve(static_cast<std::size_t>(count));
    int remaining = count;
    while (remaining > 0) {
        const bool pair = remaining >= 2 && rng.bernoulli(0.5);
        const double mag = rng.uniform(0.1, radius_max);
        if (pair) {
            const double ang = rng.uniform(0.0, std::numbers::pi);
            const std::complex<double> r = std::polar(mag, ang);
            roots.push_back(r);
            roots.push_back(std::conj(r));
            remaining -= 2;
        } else {
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            roots.emplace_back(sign * mag, 0.0);
            remaining -= 1;
        }
    }
    return roots;
}

// Direct-form filter for strictly proper B(q)/A(q): out(t) = sum_k b_k in(t-k)
// - sum_j a_j out(t-j), zero initial conditions, 1-based time.
Vec filter_strictly_proper(const Vec& a, const Vec& b, const Vec& in) {
    const int n = static_cast<int>(in.size());
    Vec out = Vec::Zero(n);
    for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        for (int k = 1; k <= b.size() && k <= t; ++k) {
            acc += b[k - 1] * in[t - k];
        }
        for (int j = 1; j <= a.size() && j <= t; ++j) {
            acc -= a[j - 1] * out[t - j];
        }
        out[t] = acc;
    }
    return out;
}

double population_variance(const Vec& x) {
    const double mean = x.mean();
    return (x.array() - mean).square().sum() / static_cast<double>(x.size());
}

constexpr int kGainNormTaps = 35;
constexpr int kNoiseGainTaps = 200;

}  // namespace

Vec LinearSystem::denominator() const {
    const Vec full = poly_from_roots(poles);
    return full.size() > 1 ? full.tail(full.size() - 1).eval() : Vec{};
}

Vec LinearSystem::numerator() const {
    return gain * poly_from_roots(zeros);
}

ModelStructure ModelStructure::fir(int n) {
    if (n <= 0 || n % 2 == 0) {
        throw std::invalid_argument("ModelStructure::fir: n must be a positive odd integer");
    }
    ModelStructure s;
    s.kind = Kind::Fir;
    s.n = n;
    return s;
}

ModelStructure ModelStructure::arx(int na, int nb) {
    if (na <= 0 || na % 2 == 0 || nb <= 0 || nb % 2 == 0) {
        throw std::invalid_argument("ModelStructure::arx: nA and nB must be positive odd integers");
    }
    ModelStructure s;
    s.kind = Kind::Arx;
    s.na = na;
    s.nb = nb;
    return s;
}

LinearSystem generate_random_system(int order, double pole_radius_max, Rng& rng) {
    if (order < 1 || order > 10) {
        throw std::invalid_argument("generate_random_system: order must lie in [1, 10]");
    }
    if (!(pole_radius_max > 0.0 && pole_radius_max < 1.0)) {
        throw std::invalid_argument("generate_random_system: pole_radius_max must lie in (0, 1)");
    }

    LinearSystem sys;
    sys.poles = draw_roots(order, pole_radius_max, rng);
    sys.zeros = draw_roots(order - 1, 0.95, rng);
    sys.gain = 1.0;

    const double norm = impulse_response(sys, kGainNormTaps).norm();
    const double target = rng.uniform(0.5, 2.0);
    sys.gain = target / norm;
    return sys;
}

Vec impulse_response(const LinearSystem& sys, int n) {
    if (n < 1) {
        throw std::invalid_argument("impulse_response: n must be >= 1");
    }
    return arx_impulse_response(sys.denominator(), sys.numerator(), n);
}

Vec arx_impulse_response(const Vec& a, const Vec& b, int n) {
    if (n < 1) {
        throw std::invalid_argument("arx_impulse_response: n must be >= 1");
    }
    Vec g = Vec::Zero(n);
    for (int k = 1; k <= n; ++k) {
        double acc = k <= b.size() ? b[k - 1] : 0.0;
        const int jmax = std::min<int>(k - 1, static_cast<int>(a.size()));
        for (int j = 1; j <= jmax; ++j) {
            acc -= a[j - 1] * g[k - 1 - j];
        }
        g[k - 1] = acc;
    }
    return g;
}

Vec lowpass_input(int n, Rng& rng) {
    if (n < 1) {
        throw std::invalid_argument("lowpass_input: n must be >= 1");
    }
    Vec out(n);
    double state = 0.0;
    for (int t = 0; t < n; ++t) {
        state = 0.436 * rng.gaussian() + 0.9 * state;
        out[t] = state;
    }
    return out;
}

DataRecord simulate(const LinearSystem& sys_g, const std::optional<LinearSystem>& sys_h,
                    const Vec& u, double sigma_e, Rng& rng) {
    if (u.size() == 0) {
        throw std::invalid_argument("simulate: input signal is empty");
    }
    if (sigma_e < 0.0) {
        throw std::invalid_argument("simulate: sigma_e must be nonnegative");
    }
    const int n = static_cast<int>(u.size());

    Vec e(n);
    for (int t = 0; t < n; ++t) {
        e[t] = sigma_e * rng.gaussian();
    }

    DataRecord rec;
    rec.u = u;
    rec.noise_sigma = sigma_e;
    rec.y = filter_strictly_proper(sys_g.denominator(), sys_g.numerator(), u);
    if (sys_h) {
        rec.y += filter_strictly_proper(sys_h->denominator(), sys_h->numerator(), e);
    } else {
        rec.y += e;
    }
    return rec;
}

double calibrate_noise(const LinearSystem& sys_g, const std::optional<LinearSystem>& sys_h,
                       const Vec& u, double target_snr_db) {
    const Vec y0 = filter_strictly_proper(sys_g.denominator(), sys_g.numerator(), u);
    const double var_y0 = population_variance(y0);
    if (var_y0 <= 0.0) {
        throw std::runtime_error("calibrate_noise: noise-free output is identically zero");
    }
    const double noise_gain =
        sys_h ? impulse_response(*sys_h, kNoiseGainTaps).squaredNorm() : 1.0;
    const double snr_db = std::min(target_snr_db, 1e6);
    const double ratio = std::pow(10.0, snr_db / 10.0);
    return std::sqrt(var_y0 / (ratio * noise_gain));
}

RegressionData build_regression(const DataRecord& data, const ModelStructure& structure) {
    if (data.u.size() != data.y.size() || data.u.size() == 0) {
        throw std::invalid_argument("build_regression: u and y must have equal nonzero length");
    }
    const int n_data = data.length();
    const int lag = structure.max_lag();
    if (n_data <= lag) {
        throw std::invalid_argument("build_regression: record shorter than the maximum lag");
    }

    const int cols = n_data - lag;
    const int rows = structure.param_count();
    RegressionData reg;
    reg.structure = structure;
    reg.data_length = n_data;
    reg.y.resize(cols);
    reg.phi.resize(rows, cols);

    for (int c = 0; c < cols; ++c) {
        const int t = lag + c;  // zero-based index of y(t), t = lag+1 .. N in 1-based terms
        reg.y[c] = data.y[t];
        if (structure.kind == ModelStructure::Kind::Fir) {
            for (int k = 1; k <= structure.n; ++k) {
                reg.phi(k - 1, c) = data.u[t - k];
            }
        } else {
            for (int k = 1; k <= structure.na; ++k) {
                reg.phi(k - 1, c) = -data.y[t - k];
            }
            for (int k = 1; k <= structure.nb; ++k) {
                reg.phi(structure.na + k - 1, c) = data.u[t - k];
            }
        }
    }
    return reg;
}

}  // namespace hankelid
