#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "covertaoi/common.hpp"

namespace covertaoi {

/// Full parameter set for one experiment. Immutable by convention after
/// validation; every module reads from it and nothing writes back.
/// All powers are linear watts, distances meters, sizes bits, rates b/s/Hz.
struct Scenario {
    int M = 10;                 // transmit antennas at the UAV
    int N = 50;                 // time slots
    double slot_len = 1.0;      // seconds per slot
    double H = 100.0;           // UAV altitude (m)
    double h_eve = 50.0;        // warden altitude (m), below H
    double d_min = 20.0;        // minimum UAV-warden separation (m)
    double V_max = 30.0;        // maximum horizontal speed (m/s)
    double Gamma = 10.0;        // per-slot transmit power budget (W)
    double P_max = 30.0;        // hard ceiling on Gamma (W)
    double epsilon = 0.1;       // covertness requirement, 0 < eps < 1
    double mu0 = 1e-3;          // channel power at 1 m reference, linear
    double sigma_b2 = 1e-10;    // noise power at Bob (W)
    double sigma_c2 = 1e-10;    // noise power at Carol (W)
    double sigma_e2 = 1e-10;    // noise power at the warden (W)
    double B_hz = 1e6;          // bandwidth (Hz)
    double S_b = 45e6;          // Bob total packet size (bits)
    std::vector<double> S_c;    // Carol per-slot packet size (bits), length N
    Eigen::Vector2d u_b{0, 0};  // Bob ground position (m)
    Eigen::Vector2d u_c{0, 0};  // Carol ground position (m)
    Eigen::Vector2d q_start{0, 0};
    Eigen::Vector2d q_end{1000, 1000};
    double spacing_ratio = 0.5;     // antenna spacing over wavelength
    int bob_window_lo = 1;          // 1-based inclusive request window
    int bob_window_hi = 50;
    double tol_feas = 1e-6;         // feasibility tolerance (solver + exact checks)
    double tol_obj = 1e-4;          // outer-loop objective tolerance
    int max_outer_iters = 30;
    long mc_trials = 100000;        // Monte-Carlo oracle sample count
    long mc_G = 10000;              // finite channel-use count for the oracle
    std::uint64_t seed = 1;

    double carol_bits(int n) const { return S_c.at(static_cast<size_t>(n)); }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

}  // namespace detail

/// Optimistic single-user rate bound: UAV directly overhead, full budget,
/// perfectly phase-aligned beam. Used only to reject configurations whose
/// per-slot QoS cannot be met even in the best case.
inline double best_case_rate(const Scenario& s, double noise) {
    return std::log2(1.0 + s.mu0 * s.M * s.Gamma / (s.H * s.H * noise));
}

inline void validate(const Scenario& s) {
    using detail::require;
    require(s.M >= 2, "M: antenna count must be >= 2");
    require(s.N >= 1, "N: slot count must be >= 1");
    require(s.slot_len > 0, "slot_len: must be positive");
    require(s.H > 0, "H: altitude must be positive");
    require(s.h_eve > 0, "h: warden altitude must be positive");
    require(s.h_eve < s.H, "h: warden altitude must be below H");
    require(s.d_min > 0, "d_min: must be positive");
    require(s.V_max >= 0, "V_max: must be non-negative");
    require(s.Gamma > 0, "Gamma: power budget must be positive");
    require(s.P_max > 0, "P_max: must be positive");
    require(s.Gamma <= s.P_max, "Gamma: exceeds P_max ceiling");
    require(s.epsilon > 0 && s.epsilon < 1, "epsilon: must lie in (0, 1)");
    require(s.mu0 > 0, "mu0: must be positive");
    require(s.sigma_b2 > 0, "sigma_b2: must be positive");
    require(s.sigma_c2 > 0, "sigma_c2: must be positive");
    require(s.sigma_e2 > 0, "sigma_e2: must be positive");
    require(s.B_hz > 0, "B_hz: must be positive");
    require(s.S_b >= 0, "S_b: must be non-negative");
    require(static_cast<int>(s.S_c.size()) == s.N, "S_c: needs one entry per slot");
    require(s.spacing_ratio > 0, "spacing_ratio: must be positive");
    require(s.bob_window_lo >= 1 && s.bob_window_hi <= s.N &&
                s.bob_window_lo <= s.bob_window_hi,
            "bob_request_window: must satisfy 1 <= lo <= hi <= N");
    require(s.tol_feas > 0, "tol_feas: must be positive");
    require(s.tol_obj > 0, "tol_obj: must be positive");
    require(s.max_outer_iters >= 1, "max_outer_iters: must be >= 1");
    require(s.mc_trials >= 1, "mc_trials: must be >= 1");
    require(s.mc_G >= 1, "mc_G: must be >= 1");
    require(s.u_b.allFinite() && s.u_c.allFinite(), "u_b/u_c: must be finite");
    require(s.q_start.allFinite() && s.q_end.allFinite(), "q_start/q_end: must be finite");

    // Carol must be servable within one slot even at the best-case rate,
    // otherwise the per-slot QoS is structurally impossible.
    const double r_best = best_case_rate(s, s.sigma_c2);
    for (int n = 0; n < s.N; ++n) {
        require(s.S_c[static_cast<size_t>(n)] > 0, "S_c: must be positive");
        if (s.S_c[static_cast<size_t>(n)] / s.B_hz > s.slot_len * r_best) {
            std::ostringstream os;
            os << "S_c: slot " << (n + 1) << " needs " << s.S_c[static_cast<size_t>(n)]
               << " bits but the best-case rate admits only "
               << s.slot_len * r_best * s.B_hz << " bits per slot";
            throw ValidationError(os.str());
        }
    }
}

/// Defaults documented in the README; user positions are drawn uniformly in
/// a 1x1 km square from the scenario seed so that repeated runs see the same
/// geometry.
inline Scenario default_scenario(std::uint64_t seed = 1) {
    Scenario s;
    s.seed = seed;
    s.S_c.assign(static_cast<size_t>(s.N), 5e6);
    s.bob_window_lo = 1;
    s.bob_window_hi = s.N;
    auto rng = make_rng(seed, /*tag=*/0x9a5e);
    std::uniform_real_distribution<double> pos(0.0, 1000.0);
    s.u_b = Eigen::Vector2d(pos(rng), pos(rng));
    s.u_c = Eigen::Vector2d(pos(rng), pos(rng));
    return s;
}

namespace detail {

inline double num_field(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) throw ParseError(key + ": expected a number");
    return j.get<double>();
}

inline Eigen::Vector2d vec2_field(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(key + ": expected [x, y]");
    return Eigen::Vector2d(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail

/// Parse a scenario from JSON text. Keys match Scenario field names; power
/// and gain keys accept a *_db variant converted to linear scale at load.
/// Unknown keys are rejected so typos surface instead of silently falling
/// back to defaults.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("scenario: top level must be an object");

    // Defaults first; N-dependent fields are resolved after N is known.
    std::uint64_t seed = 1;
    if (auto it = j.find("seed"); it != j.end()) seed = it->get<std::uint64_t>();
    Scenario s = default_scenario(seed);
    bool explicit_window = false;
    std::optional<nlohmann::json> sc_json;

    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const nlohmann::json& v = it.value();
        using detail::num_field;
        using detail::vec2_field;
        if (k == "M") s.M = static_cast<int>(num_field(v, k));
        else if (k == "N") s.N = static_cast<int>(num_field(v, k));
        else if (k == "slot_len") s.slot_len = num_field(v, k);
        else if (k == "H") s.H = num_field(v, k);
        else if (k == "h") s.h_eve = num_field(v, k);
        else if (k == "d_min") s.d_min = num_field(v, k);
        else if (k == "V_max") s.V_max = num_field(v, k);
        else if (k == "Gamma") s.Gamma = num_field(v, k);
        else if (k == "Gamma_db") s.Gamma = db_to_linear(num_field(v, k));
        else if (k == "P_max") s.P_max = num_field(v, k);
        else if (k == "P_max_db") s.P_max = db_to_linear(num_field(v, k));
        else if (k == "epsilon") s.epsilon = num_field(v, k);
        else if (k == "mu0") s.mu0 = num_field(v, k);
        else if (k == "mu0_db") s.mu0 = db_to_linear(num_field(v, k));
        else if (k == "sigma_b2") s.sigma_b2 = num_field(v, k);
        else if (k == "sigma_b2_db") s.sigma_b2 = db_to_linear(num_field(v, k));
        else if (k == "sigma_c2") s.sigma_c2 = num_field(v, k);
        else if (k == "sigma_c2_db") s.sigma_c2 = db_to_linear(num_field(v, k));
        else if (k == "sigma_e2") s.sigma_e2 = num_field(v, k);
        else if (k == "sigma_e2_db") s.sigma_e2 = db_to_linear(num_field(v, k));
        else if (k == "B_hz") s.B_hz = num_field(v, k);
        else if (k == "S_b") s.S_b = num_field(v, k);
        else if (k == "S_c") sc_json = v;
        else if (k == "u_b") s.u_b = vec2_field(v, k);
        else if (k == "u_c") s.u_c = vec2_field(v, k);
        else if (k == "q_start") s.q_start = vec2_field(v, k);
        else if (k == "q_end") s.q_end = vec2_field(v, k);
        else if (k == "spacing_ratio") s.spacing_ratio = num_field(v, k);
        else if (k == "bob_request_window") {
            if (!v.is_array() || v.size() != 2) throw ParseError(k + ": expected [lo, hi]");
            s.bob_window_lo = v[0].get<int>();
            s.bob_window_hi = v[1].get<int>();
            explicit_window = true;
        }
        else if (k == "tol_feas") s.tol_feas = num_field(v, k);
        else if (k == "tol_obj") s.tol_obj = num_field(v, k);
        else if (k == "max_outer_iters") s.max_outer_iters = static_cast<int>(num_field(v, k));
        else if (k == "mc_trials") s.mc_trials = static_cast<long>(num_field(v, k));
        else if (k == "mc_G") s.mc_G = static_cast<long>(num_field(v, k));
        else if (k == "seed") { /* consumed above */ }
        else throw ParseError(k + ": unknown scenario key");
    }

    // Resolve N-dependent defaults.
    if (sc_json) {
        if (sc_json->is_number()) {
            s.S_c.assign(static_cast<size_t>(s.N), sc_json->get<double>());
        } else if (sc_json->is_array()) {
            s.S_c.clear();
            for (const auto& e : *sc_json) s.S_c.push_back(detail::num_field(e, "S_c"));
        } else {
            throw ParseError("S_c: expected a number or an array");
        }
    } else {
        s.S_c.assign(static_cast<size_t>(s.N), 5e6);
    }
    if (!explicit_window) {
        s.bob_window_lo = 1;
        s.bob_window_hi = s.N;
    }

    validate(s);
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open scenario file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["M"] = s.M;
    j["N"] = s.N;
    j["slot_len"] = s.slot_len;
    j["H"] = s.H;
    j["h"] = s.h_eve;
    j["d_min"] = s.d_min;
    j["V_max"] = s.V_max;
    j["Gamma"] = s.Gamma;
    j["P_max"] = s.P_max;
    j["epsilon"] = s.epsilon;
    j["mu0"] = s.mu0;
    j["sigma_b2"] = s.sigma_b2;
    j["sigma_c2"] = s.sigma_c2;
    j["sigma_e2"] = s.sigma_e2;
    j["B_hz"] = s.B_hz;
    j["S_b"] = s.S_b;
    j["S_c"] = s.S_c;
    j["u_b"] = {s.u_b.x(), s.u_b.y()};
    j["u_c"] = {s.u_c.x(), s.u_c.y()};
    j["q_start"] = {s.q_start.x(), s.q_start.y()};
    j["q_end"] = {s.q_end.x(), s.q_end.y()};
    j["spacing_ratio"] = s.spacing_ratio;
    j["bob_request_window"] = {s.bob_window_lo, s.bob_window_hi};
    j["tol_feas"] = s.tol_feas;
    j["tol_obj"] = s.tol_obj;
    j["max_outer_iters"] = s.max_outer_iters;
    j["mc_trials"] = s.mc_trials;
    j["mc_G"] = s.mc_G;
    j["seed"] = s.seed;
    return j;
}

inline bool operator==(const Scenario& a, const Scenario& b) {
    return scenario_to_json(a) == scenario_to_json(b);
}

}  // namespace covertaoi
