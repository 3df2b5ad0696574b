#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "covertaoi/common.hpp"

namespace covertaoi {

using Position2D = Eigen::Vector2d;

/// Uniform-linear-array response toward a target. Every entry has unit
/// modulus and the first entry is 1 by construction.
struct SteeringVector {
    Eigen::VectorXcd entries;
};

/// Free-space line-of-sight channel: scaled steering vector. All entries
/// share the modulus sqrt(mu0)/d.
struct ChannelVector {
    Eigen::VectorXcd entries;
    double source_distance = 0.0;
};

/// 3-D separation between a hovering transmitter above `q` and a target at
/// ground offset `u`, with vertical offset `delta_alt`.
inline double distance(const Position2D& q, const Position2D& u, double delta_alt) {
    return std::sqrt((q - u).squaredNorm() + delta_alt * delta_alt);
}

/// Array response with phase step set by the departure-angle sine
/// delta_alt / distance. Computed from the sine directly; no angle
/// extraction, so there is no branch cut to hit.
inline SteeringVector steering_vector(const Position2D& q, const Position2D& target,
                                      double delta_alt, int M, double spacing_ratio) {
    const double d = distance(q, target, delta_alt);
    if (d <= 0.0) throw std::domain_error("steering_vector: degenerate geometry (zero distance)");
    const double sin_theta = delta_alt / d;
    const double phase_step = -2.0 * std::numbers::pi * spacing_ratio * sin_theta;
    SteeringVector a;
    a.entries.resize(M);
    for (int m = 0; m < M; ++m)
        a.entries[m] = std::polar(1.0, phase_step * m);
    return a;
}

inline ChannelVector channel_gain(const Position2D& q, const Position2D& target,
                                  double delta_alt, int M, double spacing_ratio,
                                  double mu0) {
    const double d = distance(q, target, delta_alt);
    if (d <= 0.0) throw std::domain_error("channel_gain: degenerate geometry (zero distance)");
    ChannelVector h;
    h.entries = (std::sqrt(mu0) / d) * steering_vector(q, target, delta_alt, M, spacing_ratio).entries;
    h.source_distance = d;
    return h;
}

/// Bob decodes the public signal first and cancels it, so only noise remains.
inline double rate_bob(const ChannelVector& h_b, const Eigen::VectorXcd& w_b,
                       double sigma_b2) {
    const double sig = std::norm(h_b.entries.dot(w_b));  // dot() conjugates h_b
    return std::log2(1.0 + sig / sigma_b2);
}

/// Carol decodes her own signal directly; the covert stream is interference.
inline double rate_carol(const ChannelVector& h_c, const Eigen::VectorXcd& w_c,
                         const Eigen::VectorXcd& w_b, double sigma_c2) {
    const double sig = std::norm(h_c.entries.dot(w_c));
    const double intf = std::norm(h_c.entries.dot(w_b));
    return std::log2(1.0 + sig / (intf + sigma_c2));
}

/// Beamformer whose phases conjugate the channel, achieving the
/// phase-aligned power bound with equality. `power` is ||w||^2.
inline Eigen::VectorXcd mrt_beamformer(const ChannelVector& h, double power) {
    const double n = h.entries.norm();
    if (n <= 0.0 || power <= 0.0) return Eigen::VectorXcd::Zero(h.entries.size());
    return std::sqrt(power) / n * h.entries;
}

}  // namespace covertaoi
