#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "covertaoi/common.hpp"

namespace covertaoi {

// Relative width of the equal-power band routed through analytic limits.
inline constexpr double kEqualPowerBand = 1e-6;

/// Warden-side view of one slot. The warden models each beamformer entry as
/// a zero-mean complex Gaussian; only the per-antenna variance sums B and C
/// (covert / public) reach the received-power scales:
///   varpi_k = mu0 * {B,C} / d_e^2.
struct EveModel {
    double varpi_b = 0.0;   // covert received-power scale (W)
    double varpi_c = 0.0;   // public received-power scale (W)
    double sigma_e2 = 0.0;  // noise power at the warden (W)
    double d_e = 0.0;       // transmitter-warden distance (m)
    double B_sum = 0.0;     // sum of covert per-antenna variances (W)
    double C_sum = 0.0;     // sum of public per-antenna variances (W)

    static EveModel from_power_sums(double B_sum, double C_sum, double d_e,
                                    double mu0, double sigma_e2) {
        if (B_sum <= 0 || C_sum <= 0 || d_e <= 0 || mu0 <= 0 || sigma_e2 <= 0)
            throw std::domain_error("EveModel: all parameters must be positive");
        EveModel e;
        e.B_sum = B_sum;
        e.C_sum = C_sum;
        e.d_e = d_e;
        e.sigma_e2 = sigma_e2;
        e.varpi_b = mu0 * B_sum / (d_e * d_e);
        e.varpi_c = mu0 * C_sum / (d_e * d_e);
        return e;
    }
};

/// Radiometer outcome at the optimal threshold.
struct DetectionReport {
    double tau_star = 0.0;
    double xi_star = 0.0;
    double p_fa = 0.0;
    double p_md = 0.0;
};

/// False alarm of the energy detector. Below the noise floor the warden
/// always raises the alarm, so the boundary tau = sigma_e2 sits on the
/// value-1 branch.
inline double p_fa(double tau, const EveModel& eve) {
    if (tau <= eve.sigma_e2) return 1.0;
    return std::exp((eve.sigma_e2 - tau) / eve.varpi_c);
}

/// Miss detection: the two received powers are independent exponentials, so
/// their sum has the two-scale hypoexponential law; near equal scales the
/// Erlang-2 limit applies.
inline double p_md(double tau, const EveModel& eve) {
    if (tau <= eve.sigma_e2) return 0.0;
    const double wb = eve.varpi_b, wc = eve.varpi_c;
    const double x = tau - eve.sigma_e2;
    if (std::abs(wc - wb) <= kEqualPowerBand * std::max(wb, wc)) {
        const double y = 2.0 * x / (wb + wc);
        return 1.0 - std::exp(-y) * (1.0 + y);
    }
    return (wb * std::exp(-x / wb) - wc * std::exp(-x / wc)) / (wc - wb) + 1.0;
}

/// Total detection error rate; equals 1 whenever the threshold cannot even
/// separate noise from the public transmission.
inline double xi(double tau, const EveModel& eve) {
    if (tau <= eve.sigma_e2) return 1.0;
    return p_fa(tau, eve) + p_md(tau, eve);
}

/// Threshold minimizing xi. Strictly above the noise floor for any positive
/// power pair; symmetric in B and C.
inline double optimal_tau(const EveModel& eve) {
    const double wb = eve.varpi_b, wc = eve.varpi_c;
    if (std::abs(wc - wb) <= kEqualPowerBand * std::max(wb, wc))
        return eve.sigma_e2 + 0.5 * (wb + wc);
    // wb*wc*ln(wc/wb)/(wc-wb), written via log1p for near-equal scales
    const double d = wc / wb - 1.0;
    return eve.sigma_e2 + wb * (wc / wb) * std::log1p(d) / d;
}

namespace detail {

// Shared kernel for the minimum detection error rate and its complement.
// With r = C/B the two power terms reduce to A = r^{-1/(r-1)} and
// E = r^{-r/(r-1)}; the detectability is (A - E)/(r - 1), evaluated through
// expm1 so the removable singularity at r = 1 stays benign.
inline double detectability_of_ratio(double r) {
    const double d = r - 1.0;
    if (std::abs(d) <= 1e-12) return std::exp(-1.0);
    const double t = std::log1p(d) / d;  // -> 1 as r -> 1
    return std::exp(-t) * (-std::expm1(-d * t)) / d;
}

}  // namespace detail

/// Minimum detection error rate over all thresholds. Depends only on the
/// ratio C/B, hence independent of distance, path gain and noise power.
inline double xi_star(double B_sum, double C_sum) {
    if (B_sum <= 0 || C_sum <= 0)
        throw std::domain_error("xi_star: power sums must be positive");
    return 1.0 - detail::detectability_of_ratio(C_sum / B_sum);
}

/// Detectability of the covert stream, 1 - xi_star(p_b, p_c). Zero covert
/// power is undetectable; equal powers give the Erlang limit 1/e.
inline double upsilon(double p_b, double p_c) {
    if (p_c <= 0) throw std::domain_error("upsilon: public power must be positive");
    if (p_b < 0) throw std::domain_error("upsilon: covert power must be non-negative");
    if (p_b == 0.0) return 0.0;
    return detail::detectability_of_ratio(p_c / p_b);
}

/// Closed-form partial derivatives of upsilon. Inside a narrow band around
/// p_b = p_c the closed forms are 0/0, so central differences straddling the
/// band take over there.
inline std::pair<double, double> upsilon_grad(double p_b, double p_c) {
    if (p_b <= 0 || p_c <= 0)
        throw std::domain_error("upsilon_grad: powers must be positive");
    const double scale = std::max(p_b, p_c);
    if (std::abs(p_c - p_b) <= kEqualPowerBand * scale) {
        const double h = 1e-3 * scale;
        const double db = (upsilon(p_b + h, p_c) - upsilon(p_b - h, p_c)) / (2 * h);
        const double dc = (upsilon(p_b, p_c + h) - upsilon(p_b, p_c - h)) / (2 * h);
        return {db, dc};
    }
    const double r = p_c / p_b;
    const double lr = std::log(r);
    const double A = std::exp(-lr / (r - 1.0));
    const double E = std::exp(-r * lr / (r - 1.0));
    const double gap = p_c - p_b;
    const double bracket = A - (1.0 + lr) * E;
    return {p_c / (gap * gap) * bracket, -p_b / (gap * gap) * bracket};
}

inline DetectionReport detection_report(const EveModel& eve) {
    DetectionReport r;
    r.tau_star = optimal_tau(eve);
    r.p_fa = p_fa(r.tau_star, eve);
    r.p_md = p_md(r.tau_star, eve);
    r.xi_star = r.p_fa + r.p_md;
    return r;
}

struct McDetectionResult {
    double p_fa = 0.0;
    double p_md = 0.0;
    double se_fa = 0.0;
    double se_md = 0.0;
};

/// Sampling oracle for the closed forms above. Per trial it draws the
/// beamformer entries antenna by antenna from the warden's Gaussian model,
/// forms the received-power average over G channel uses and thresholds it.
///
/// For G above a cutoff the per-symbol loop is replaced by one draw from the
/// conditional law of the average: given the beamformers, each channel-use
/// sample is |CN(0, v)|^2, so their mean is exactly Gamma(G, v/G). This is a
/// distributional identity for Gaussian signalling, not an approximation,
/// and keeps the antenna-level sampling that the closed forms are about.
inline McDetectionResult mc_detection_oracle(const EveModel& eve, double tau,
                                             long trials, long G,
                                             std::uint64_t seed,
                                             int antennas = 4,
                                             long symbol_loop_max_G = 4096) {
    if (trials < 1 || G < 1)
        throw std::domain_error("mc_detection_oracle: trials and G must be >= 1");
    auto rng = make_rng(seed, /*tag=*/0xe7e);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int M = antennas;
    // Per-antenna gains: |h_m|^2 = varpi_b / B_sum (equal across antennas for
    // a steering-type channel); phases are immaterial for the statistic but
    // sampled anyway to keep the oracle literal.
    const double gain = std::sqrt(eve.varpi_b / eve.B_sum);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);
    const double sd_b = std::sqrt(eve.B_sum / M / 2.0);
    const double sd_c = std::sqrt(eve.C_sum / M / 2.0);

    auto draw_alpha = [&](double sd) {
        cplx alpha(0.0, 0.0);
        for (int m = 0; m < M; ++m) {
            const cplx h = std::polar(gain, phase(rng));
            const cplx w(sd * gauss(rng), sd * gauss(rng));
            alpha += std::conj(h) * w;
        }
        return alpha;
    };

    const double sd_n = std::sqrt(eve.sigma_e2 / 2.0);
    const double sd_x = std::sqrt(0.5);  // unit-power Gaussian symbols
    auto draw_cn = [&](double sd) { return cplx(sd * gauss(rng), sd * gauss(rng)); };

    // Average received power over G channel uses; alpha_b is zero under the
    // null hypothesis.
    auto sample_T = [&](cplx alpha_c, cplx alpha_b) {
        if (G <= symbol_loop_max_G) {
            double acc = 0.0;
            for (long i = 0; i < G; ++i) {
                const cplx y = alpha_c * draw_cn(sd_x) + alpha_b * draw_cn(sd_x) +
                               draw_cn(sd_n);
                acc += std::norm(y);
            }
            return acc / static_cast<double>(G);
        }
        const double v = std::norm(alpha_c) + std::norm(alpha_b) + eve.sigma_e2;
        std::gamma_distribution<double> gamma_T(static_cast<double>(G),
                                                v / static_cast<double>(G));
        return gamma_T(rng);
    };

    long fa = 0, md = 0;
    for (long t = 0; t < trials; ++t) {
        // Null hypothesis: public stream only.
        if (sample_T(draw_alpha(sd_c), cplx(0, 0)) > tau) ++fa;
        // Alternative: both streams superimposed.
        if (sample_T(draw_alpha(sd_c), draw_alpha(sd_b)) <= tau) ++md;
    }

    McDetectionResult r;
    const double T = static_cast<double>(trials);
    r.p_fa = fa / T;
    r.p_md = md / T;
    r.se_fa = std::sqrt(r.p_fa * (1.0 - r.p_fa) / T);
    r.se_md = std::sqrt(r.p_md * (1.0 - r.p_md) / T);
    return r;
}

}  // namespace covertaoi
