#ifndef FSO_RELAY_RELAY_CHAIN_HPP
#define FSO_RELAY_RELAY_CHAIN_HPP

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "channel_model.hpp"
#include "errors.hpp"
#include "link_params.hpp"

namespace fso_relay {

/// Photon count Lag(a, b, D): noncentrality a, per-mode noise b, D modes.
struct LaguerreParams {
    double a = 0;
    double b = 0;
    int dof = 1;
};

struct LaguerreMoments {
    double mean = 0;
    double variance = 0;
};

inline LaguerreMoments laguerre_moments(const LaguerreParams& p) {
    const double d = p.dof;
    return {p.a + d * p.b, p.a + d * (p.b + p.b * p.b) + 2.0 * p.a * p.b};
}

/// Photodetection with quantum efficiency eta thins both parameters.
inline LaguerreParams apply_detector(const LaguerreParams& p, double eta) {
    return {eta * p.a, eta * p.b, p.dof};
}

/**
 * Variable amplifier gain that keeps the relay output mean at m_target:
 * G = m_target / (m_signal_in + D (m_bg + n_sp)).
 *
 * The ASE noise factor n_sp (G - 1) is taken as n_sp G, which is what makes
 * the output mean exactly m_target.
 */
inline double full_csi_gain(double m_target, double m_signal_in, double m_bg, double n_sp, int dof) {
    const double denom = m_signal_in + dof * (m_bg + n_sp);
    if (!(denom > 0.0)) throw degenerate_input_error("full-CSI gain denominator is zero");
    return m_target / denom;
}

/// Which noise variance enters the electrical SNR.
enum class VarianceMode {
    AsPrinted,          ///< the nine-term closed form, literally
    MomentComposition,  ///< Laguerre variance of the detected count
    LowBackground,      ///< signal-ASE beat terms only
    ThermalLimited,     ///< receiver thermal noise only
};

inline constexpr std::array<VarianceMode, 4> kAllModes = {
    VarianceMode::MomentComposition, VarianceMode::AsPrinted, VarianceMode::LowBackground,
    VarianceMode::ThermalLimited};

inline std::string_view to_string(VarianceMode mode) {
    switch (mode) {
    case VarianceMode::AsPrinted: return "printed";
    case VarianceMode::MomentComposition: return "composed";
    case VarianceMode::LowBackground: return "low-bg";
    case VarianceMode::ThermalLimited: return "thermal";
    }
    return "?";
}

inline std::optional<VarianceMode> parse_mode(std::string_view name) {
    for (auto m : kAllModes)
        if (to_string(m) == name) return m;
    return std::nullopt;
}

/// sigma_th^2 = 2 K_B T_R T_s / (R_L e^2), in photoelectron counts squared.
inline double thermal_noise_variance(const SystemParams& params) {
    const double e = params.electron_charge;
    return 2.0 * params.boltzmann * params.receiver_temp_k * params.symbol_duration_s() /
           (params.receiver_load_ohm * e * e);
}

struct RelayGains {
    double g1 = 0;
    double g2 = 0;
};

struct DestinationStats {
    double mean = 0;
    double var_signal = 0;
    double var_thermal = 0;
    double var_total = 0;
    double snr = 0;
    /// The nine additive terms of the closed-form destination variance, in
    /// the order: signal shot, relay-1 ASE shot, relay-2 ASE shot, relay-1
    /// ASE-ASE, relay-2 ASE-ASE, relay-1 x relay-2 ASE beat, signal x relay-1
    /// ASE beat, signal x relay-2 ASE beat, destination background.
    std::array<double, 9> breakdown{};
    RelayGains gains;
    VarianceMode mode = VarianceMode::MomentComposition;
};

/**
 * Two full-CSI EDFA relays followed by a direct-detection receiver.
 *
 * Construction caches the photon budget and thermal variance so that
 * evaluating many fading realizations costs only the per-draw algebra.
 */
class RelayChain {
public:
    explicit RelayChain(const SystemParams& params)
        : budget_(photon_budget(params)),
          eta_(params.eta),
          n_sp_(params.n_sp),
          dof_(params.dof),
          var_thermal_(thermal_noise_variance(params)) {
        validate(params);
    }

    const PhotonBudget& budget() const { return budget_; }
    double thermal_variance() const { return var_thermal_; }

    RelayGains gains(const FadingRealization& h) const {
        check(h);
        const double g1 = full_csi_gain(budget_.m_r1, budget_.m_s * h.h_sr, budget_.m_br1, n_sp_, dof_);
        const double g2 = full_csi_gain(budget_.m_r2, budget_.m_r1 * h.h_rr, budget_.m_br2, n_sp_, dof_);
        return {g1, g2};
    }

    /// Photon count leaving relay 1.
    LaguerreParams relay1_output(const FadingRealization& h) const {
        const auto g = gains(h);
        return {g.g1 * budget_.m_s * h.h_sr, g.g1 * (budget_.m_br1 + n_sp_), dof_};
    }

    /// Photon count leaving relay 2.
    LaguerreParams relay2_output(const FadingRealization& h) const {
        const auto g = gains(h);
        const double b1 = budget_.m_br1 + n_sp_;
        const double b2 = budget_.m_br2 + n_sp_;
        return {g.g1 * g.g2 * budget_.m_s * h.h_sr * h.h_rr, g.g1 * g.g2 * b1 * h.h_rr + g.g2 * b2, dof_};
    }

    /// Photon count impinging on the photodetector (before quantum efficiency).
    LaguerreParams detector_input(const FadingRealization& h) const {
        return detector_input(h, gains(h));
    }

    DestinationStats stats(const FadingRealization& h, VarianceMode mode) const {
        const RelayGains g = gains(h);
        const LaguerreParams detected = apply_detector(detector_input(h, g), eta_);
        const LaguerreMoments moments = laguerre_moments(detected);

        DestinationStats s;
        s.mode = mode;
        s.gains = g;
        s.mean = moments.mean;
        s.breakdown = printed_terms(h, g);
        switch (mode) {
        case VarianceMode::AsPrinted: {
            double sum = 0;
            for (double t : s.breakdown) sum += t;
            s.var_signal = sum;
            break;
        }
        case VarianceMode::MomentComposition: s.var_signal = moments.variance; break;
        case VarianceMode::LowBackground: s.var_signal = s.breakdown[6] + s.breakdown[7]; break;
        case VarianceMode::ThermalLimited: s.var_signal = 0.0; break;
        }
        s.var_thermal = var_thermal_;
        s.var_total = s.var_signal + s.var_thermal;
        const double signal = eta_ * g.g1 * g.g2 * budget_.m_s * h.h_sr * h.h_rr * h.h_rd;
        if (s.var_total > 0.0)
            s.snr = signal * signal / s.var_total;
        else
            s.snr = signal > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return s;
    }

    double snr(const FadingRealization& h, VarianceMode mode) const { return stats(h, mode).snr; }

private:
    static void check(const FadingRealization& h) {
        detail::require_non_negative(h.h_sr, "h_sr");
        detail::require_non_negative(h.h_rr, "h_rr");
        detail::require_non_negative(h.h_rd, "h_rd");
    }

    LaguerreParams detector_input(const FadingRealization& h, const RelayGains& g) const {
        const double b1 = budget_.m_br1 + n_sp_;
        const double b2 = budget_.m_br2 + n_sp_;
        const double a = g.g1 * g.g2 * budget_.m_s * h.h_sr * h.h_rr * h.h_rd;
        const double b = g.g1 * g.g2 * b1 * h.h_rr * h.h_rd + g.g2 * b2 * h.h_rd + budget_.m_bd;
        return {a, b, dof_};
    }

    std::array<double, 9> printed_terms(const FadingRealization& h, const RelayGains& g) const {
        const double eta = eta_;
        const double d = dof_;
        const double m_s = budget_.m_s;
        const double m_bd = budget_.m_bd;
        const double b1 = budget_.m_br1 + n_sp_;
        const double b2 = budget_.m_br2 + n_sp_;
        const double g1 = g.g1, g2 = g.g2;
        const double hsr = h.h_sr, hrr = h.h_rr, hrd = h.h_rd;
        const double bg = 1.0 + 2.0 * eta * m_bd;
        const double ase1 = eta * g1 * g2 * b1;
        const double ase2 = eta * g2 * b2;
        const double eta2 = eta * eta;
        return {
            eta * g1 * g2 * m_s * bg * hsr * hrr * hrd,
            eta * d * g1 * g2 * b1 * bg * hrr * hrd,
            eta * d * g2 * b2 * bg * hrd,
            d * ase1 * ase1 * hrr * hrr * hrd * hrd,
            d * ase2 * ase2 * hrd * hrd,
            2.0 * eta2 * g1 * g2 * g2 * b1 * b2 * hrr * hrd * hrd,
            2.0 * eta2 * g1 * g1 * g2 * g2 * m_s * b1 * hsr * hrr * hrr * hrd * hrd,
            2.0 * eta2 * g1 * g2 * g2 * m_s * b2 * hsr * hrr * hrd * hrd,
            eta * d * (m_bd + m_bd * m_bd),
        };
    }

    PhotonBudget budget_;
    double eta_;
    double n_sp_;
    int dof_;
    double var_thermal_;
};

inline LaguerreParams detector_input_params(const FadingRealization& h, const SystemParams& params) {
    return RelayChain(params).detector_input(h);
}

inline DestinationStats destination_stats(const FadingRealization& h, const SystemParams& params,
                                          VarianceMode mode) {
    return RelayChain(params).stats(h, mode);
}

} // namespace fso_relay

#endif
