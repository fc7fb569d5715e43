#ifndef FSO_RELAY_LINK_PARAMS_HPP
#define FSO_RELAY_LINK_PARAMS_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "json.hpp"

#include "errors.hpp"

namespace fso_relay {

/**
 * Physical constants and system parameters of the triple-hop link.
 *
 * Quantities that the configuration file expresses in non-SI units
 * (wavelength in nm, divergence in mrad, transmit powers in dBm) are stored
 * in those units so that a serialized configuration reloads bit-for-bit.
 * The SI view is available through the accessor functions.
 */
struct SystemParams {
    double lambda_nm = 1550.0;
    double visibility_km = 1.5;
    double cn2 = 1e-15;                                  // m^(-2/3)
    double aperture_area_m2 = std::numbers::pi * 0.1 * 0.1;
    double divergence_mrad = 1.0;
    double symbol_rate_hz = 2e9;
    double n_sp = 1.0;
    int dof = 100;
    double eta = 0.8;
    double p_source_dbm = 5.0;
    double p_relay1_dbm = 5.0;
    double p_relay2_dbm = 5.0;
    double p_bg_relay1_w = 5e-9;
    double p_bg_relay2_w = 5e-9;
    double p_bg_dest_w = 5e-9;
    double d_sd_m = 5000.0;
    double receiver_load_ohm = 100.0;
    double receiver_temp_k = 300.0;
    double planck = 6.6e-34;
    double boltzmann = 1.38e-23;
    double light_speed = 3e8;
    double electron_charge = 1.602176634e-19;

    double wavelength_m() const { return lambda_nm * 1e-9; }
    double divergence_rad() const { return divergence_mrad * 1e-3; }
    double symbol_duration_s() const { return 1.0 / symbol_rate_hz; }
    double p_source_w() const;
    double p_relay1_w() const;
    double p_relay2_w() const;

    /// Sets the filtered background power at both relays and the destination.
    SystemParams& with_background(double p_b_w) {
        p_bg_relay1_w = p_bg_relay2_w = p_bg_dest_w = p_b_w;
        return *this;
    }

    bool operator==(const SystemParams&) const = default;
};

inline double dbm_to_watts(double p_dbm) {
    detail::require_finite(p_dbm, "p_dbm");
    return 1e-3 * std::pow(10.0, p_dbm / 10.0);
}

inline double watts_to_dbm(double p_w) {
    detail::require_positive(p_w, "p_w");
    return 10.0 * std::log10(p_w / 1e-3);
}

inline double SystemParams::p_source_w() const { return dbm_to_watts(p_source_dbm); }
inline double SystemParams::p_relay1_w() const { return dbm_to_watts(p_relay1_dbm); }
inline double SystemParams::p_relay2_w() const { return dbm_to_watts(p_relay2_dbm); }

/// Mean photon count per symbol carried by an optical power, P T_s / (h_p nu)
/// with nu = c / lambda.
inline double photons_per_symbol(double power_w, const SystemParams& params) {
    detail::require_non_negative(power_w, "power");
    return power_w * params.symbol_duration_s() * params.wavelength_m() /
           (params.planck * params.light_speed);
}

/// Mean photon counts per symbol at every terminal.
struct PhotonBudget {
    double m_s = 0;    // transmitted by the source
    double m_r1 = 0;   // transmitted by relay 1
    double m_r2 = 0;   // transmitted by relay 2
    double m_br1 = 0;  // background collected at relay 1
    double m_br2 = 0;  // background collected at relay 2
    double m_bd = 0;   // background collected at the destination
};

inline PhotonBudget photon_budget(const SystemParams& params) {
    return {photons_per_symbol(params.p_source_w(), params),
            photons_per_symbol(params.p_relay1_w(), params),
            photons_per_symbol(params.p_relay2_w(), params),
            photons_per_symbol(params.p_bg_relay1_w, params),
            photons_per_symbol(params.p_bg_relay2_w, params),
            photons_per_symbol(params.p_bg_dest_w, params)};
}

/// Throws validation_error naming the first field that violates its constraint.
inline void validate(const SystemParams& p) {
    using detail::require_finite;
    using detail::require_non_negative;
    using detail::require_positive;
    require_positive(p.lambda_nm, "lambda_nm");
    require_positive(p.visibility_km, "visibility_km");
    require_non_negative(p.cn2, "cn2");
    require_positive(p.aperture_area_m2, "aperture_area_m2");
    require_positive(p.divergence_mrad, "divergence_mrad");
    require_positive(p.symbol_rate_hz, "symbol_rate_hz");
    require_non_negative(p.n_sp, "n_sp");
    if (p.dof < 1) throw validation_error("dof", "must be an integer >= 1");
    require_finite(p.eta, "eta");
    if (!(p.eta > 0.0 && p.eta <= 1.0)) throw validation_error("eta", "must lie in (0, 1]");
    require_finite(p.p_source_dbm, "p_source_dbm");
    require_finite(p.p_relay1_dbm, "p_relay1_dbm");
    require_finite(p.p_relay2_dbm, "p_relay2_dbm");
    require_non_negative(p.p_bg_relay1_w, "p_bg_relay1_w");
    require_non_negative(p.p_bg_relay2_w, "p_bg_relay2_w");
    require_non_negative(p.p_bg_dest_w, "p_bg_dest_w");
    require_positive(p.d_sd_m, "d_sd_m");
    require_positive(p.receiver_load_ohm, "receiver_load_ohm");
    require_non_negative(p.receiver_temp_k, "receiver_temp_k");
    require_positive(p.planck, "planck");
    require_positive(p.boltzmann, "boltzmann");
    require_positive(p.light_speed, "light_speed");
    require_positive(p.electron_charge, "electron_charge");
}

namespace detail {

template <class F>
void for_each_real_field(SystemParams& p, F&& f) {
    f("lambda_nm", p.lambda_nm);
    f("visibility_km", p.visibility_km);
    f("cn2", p.cn2);
    f("aperture_area_m2", p.aperture_area_m2);
    f("divergence_mrad", p.divergence_mrad);
    f("symbol_rate_hz", p.symbol_rate_hz);
    f("n_sp", p.n_sp);
    f("eta", p.eta);
    f("p_source_dbm", p.p_source_dbm);
    f("p_relay1_dbm", p.p_relay1_dbm);
    f("p_relay2_dbm", p.p_relay2_dbm);
    f("p_bg_relay1_w", p.p_bg_relay1_w);
    f("p_bg_relay2_w", p.p_bg_relay2_w);
    f("p_bg_dest_w", p.p_bg_dest_w);
    f("d_sd_m", p.d_sd_m);
    f("receiver_load_ohm", p.receiver_load_ohm);
    f("receiver_temp_k", p.receiver_temp_k);
    f("planck", p.planck);
    f("boltzmann", p.boltzmann);
    f("light_speed", p.light_speed);
    f("electron_charge", p.electron_charge);
}

} // namespace detail

inline nlohmann::ordered_json to_json(const SystemParams& params) {
    nlohmann::ordered_json j;
    SystemParams copy = params;
    detail::for_each_real_field(copy, [&](const char* key, double& v) { j[key] = v; });
    j["dof"] = params.dof;
    return j;
}

inline std::string serialize(const SystemParams& params) { return to_json(params).dump(2); }

/// Builds validated parameters from a parsed JSON object. Missing keys keep
/// their defaults; unknown keys and wrongly typed values are rejected.
inline SystemParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw validation_error("config", "top-level value must be a JSON object");
    SystemParams p;
    std::size_t consumed = 0;
    detail::for_each_real_field(p, [&](const char* key, double& v) {
        auto it = j.find(key);
        if (it == j.end()) return;
        if (!it->is_number()) throw validation_error(key, "must be a number");
        v = it->get<double>();
        ++consumed;
    });
    if (auto it = j.find("dof"); it != j.end()) {
        if (it->is_number_integer()) {
            const auto v = it->get<long long>();
            if (v < 1 || v > 1'000'000'000) throw validation_error("dof", "must be an integer >= 1");
            p.dof = static_cast<int>(v);
        } else {
            throw validation_error("dof", "must be an integer >= 1");
        }
        ++consumed;
    }
    if (consumed != j.size()) {
        SystemParams probe;
        for (const auto& [key, _] : j.items()) {
            bool known = key == "dof";
            detail::for_each_real_field(probe, [&](const char* k, double&) { known = known || key == k; });
            if (!known) throw validation_error(key, "unknown configuration key");
        }
    }
    validate(p);
    return p;
}

inline SystemParams load_params(std::string_view config_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(config_text.begin(), config_text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("config", std::string("malformed JSON: ") + e.what());
    }
    return params_from_json(j);
}

} // namespace fso_relay

#endif
