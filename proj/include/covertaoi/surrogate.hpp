#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covertaoi/channel.hpp"
#include "covertaoi/covertness.hpp"
#include "covertaoi/common.hpp"

namespace covertaoi {

/// Phase-aligned received-power bound mu0 * (sum_m |w_m|)^2 / d^2. Tight when
/// the beamformer phases conjugate the steering vector (MRT), an upper bound
/// for every other phase profile by the triangle inequality.
inline double aligned_power_bound(const Eigen::VectorXcd& w, double d, double mu0) {
    if (d <= 0) throw std::domain_error("aligned_power_bound: distance must be positive");
    const double s = w.cwiseAbs().sum();
    return mu0 * s * s / (d * d);
}

inline double aligned_power_scalar(const Eigen::VectorXcd& w) {
    const double s = w.cwiseAbs().sum();
    return s * s;
}

/// Expansion state for one trajectory refinement round: reference positions,
/// their squared horizontal distances to each user, and the aligned-power
/// scalars of the beamformers held fixed during the round.
struct TrajectoryLinearization {
    std::vector<Position2D> q_ref;
    std::vector<double> j_b_ref, j_c_ref;  // ||q_ref - u_k||^2
    std::vector<double> z_b, z_c;          // (sum_m |w_k,m|)^2
    double eta_b = 0.0, eta_c = 0.0;       // mu0 / sigma_k^2
    double H2 = 0.0;
};

/// Concave-in-j minorants of the aligned-power rates, obtained by replacing
/// the subtracted concave log with its tangent at j_ref. Equal to the exact
/// aligned-power rate at the expansion point, never above it elsewhere.
inline std::pair<double, double> traj_rate_surrogates(const TrajectoryLinearization& lin,
                                                      int n, double j_b, double j_c) {
    const auto idx = static_cast<size_t>(n);
    const double zb = lin.z_b[idx], zc = lin.z_c[idx];
    const double jb0 = lin.j_b_ref[idx], jc0 = lin.j_c_ref[idx];
    const double H2 = lin.H2;

    const double den_b0 = jb0 + H2;
    const double rb = std::log2(lin.eta_b * zb + j_b + H2) - std::log2(den_b0) -
                      kLog2E / den_b0 * (j_b - jb0);

    const double den_c0 = lin.eta_c * zb + jc0 + H2;
    const double rc = std::log2(lin.eta_c * (zb + zc) + j_c + H2) - std::log2(den_c0) -
                      kLog2E / den_c0 * (j_c - jc0);
    return {rb, rc};
}

/// First-order minorant of the squared horizontal distance ||q - u||^2 at
/// q_ref; requiring j <= bound therefore implies j <= ||q - u||^2.
inline double slack_distance_bound(const Position2D& q, const Position2D& q_ref,
                                   const Position2D& u) {
    const Eigen::Vector2d r = q_ref - u;
    return r.squaredNorm() + 2.0 * r.dot(q - q_ref);
}

/// Tangent of the jointly convex map (f, g) -> log2(1 + 1/(f g)) at the
/// anchors; affine in (f, g) and never above the exact value.
inline double sinr_rate_surrogate(double f, double g, double f_ref, double g_ref) {
    if (f <= 0 || g <= 0 || f_ref <= 0 || g_ref <= 0)
        throw std::domain_error("sinr_rate_surrogate: arguments must be positive");
    const double prod = f_ref * g_ref;
    return std::log2(1.0 + 1.0 / prod) -
           kLog2E * (f - f_ref) / (f_ref * (1.0 + prod)) -
           kLog2E * (g - g_ref) / (g_ref * (1.0 + prod));
}

/// Affine-in-powers covertness restriction: the detectability linearized at
/// the anchor powers, constrained below epsilon.
///   lhs(p) = upsilon(anchor) + grad(anchor) . (p - anchor) <= epsilon
struct CovertnessHalfspace {
    double base = 0.0;          // upsilon at the anchors
    double grad_b = 0.0, grad_c = 0.0;
    double p_b_ref = 0.0, p_c_ref = 0.0;
    double epsilon = 0.0;

    double lhs(double p_b, double p_c) const {
        return base + grad_b * (p_b - p_b_ref) + grad_c * (p_c - p_c_ref);
    }
    bool satisfied(double p_b, double p_c) const { return lhs(p_b, p_c) <= epsilon; }
};

inline CovertnessHalfspace covertness_halfspace(double p_b_ref, double p_c_ref,
                                                double epsilon) {
    if (p_b_ref <= 0 || p_c_ref <= 0)
        throw std::domain_error("covertness_halfspace: anchors must be positive");
    CovertnessHalfspace h;
    h.base = upsilon(p_b_ref, p_c_ref);
    auto g = upsilon_grad(p_b_ref, p_c_ref);
    h.grad_b = g.first;
    h.grad_c = g.second;
    h.p_b_ref = p_b_ref;
    h.p_c_ref = p_c_ref;
    h.epsilon = epsilon;
    return h;
}

/// Anchors of the SINR-rate tangent per slot and user: f is the reciprocal
/// signal power, g the interference-plus-noise power.
struct RateLinearization {
    std::vector<double> f_b, g_b, f_c, g_c;
};

}  // namespace covertaoi
