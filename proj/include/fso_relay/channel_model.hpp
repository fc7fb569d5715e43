#ifndef FSO_RELAY_CHANNEL_MODEL_HPP
#define FSO_RELAY_CHANNEL_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "errors.hpp"
#include "link_params.hpp"
#include "random_streams.hpp"

namespace fso_relay {

/**
 * Deterministic state of one hop: attenuation, geometric spread and the
 * log-normal parameters of the total gain h = h_l * h_a.
 *
 * The turbulence part is normalized so that E[h_a] = 1, i.e.
 * exp(mu_l + sigma2_l / 2) == path_loss.
 */
struct HopChannel {
    double distance = 0;   // m
    double xi = 0;         // scattering coefficient, 1/m
    double path_loss = 0;  // h_l, in (0, 1]
    double rytov_var = 0;  // sigma_R^2
    double mu_l = 0;       // log-domain mean of h
    double sigma2_l = 0;   // log-domain variance of h

    /// The log-normal model is only trusted for weak turbulence.
    bool weak_turbulence() const { return rytov_var <= 1.0; }
};

using HopTriple = std::array<HopChannel, 3>;

/// One joint draw of the source-relay, relay-relay and relay-destination gains.
struct FadingRealization {
    double h_sr = 0;
    double h_rr = 0;
    double h_rd = 0;

    bool operator==(const FadingRealization&) const = default;
};

/**
 * Beers-Lambert scattering coefficient from visibility (km) and wavelength
 * (nm), in 1/km. The size-distribution exponent q is piecewise in V:
 * 1.6 for V > 50, 1.3 for 6 < V <= 50, 0.585 V^(1/3) for V <= 6.
 */
inline double scattering_coefficient(double visibility_km, double lambda_nm) {
    detail::require_positive(visibility_km, "visibility_km");
    detail::require_positive(lambda_nm, "lambda_nm");
    double q;
    if (visibility_km > 50.0)
        q = 1.6;
    else if (visibility_km > 6.0)
        q = 1.3;
    else
        q = 0.585 * std::cbrt(visibility_km);
    return (3.91 / visibility_km) * std::pow(lambda_nm / 550.0, -q);
}

/// Deterministic channel loss h_l = A_a / (theta d / 2)^2 * exp(-d xi). The
/// geometric factor saturates at 1 when the beam footprint is smaller than the
/// aperture.
inline double path_loss(double d_m, double theta_div_rad, double aperture_area_m2, double xi_per_m) {
    detail::require_positive(d_m, "d");
    detail::require_positive(theta_div_rad, "theta_div");
    detail::require_positive(aperture_area_m2, "aperture_area");
    detail::require_non_negative(xi_per_m, "xi");
    const double footprint = theta_div_rad * d_m / 2.0;
    const double geometric = std::min(1.0, aperture_area_m2 / (footprint * footprint));
    return geometric * std::exp(-d_m * xi_per_m);
}

/// Rytov variance 1.23 C_n^2 k^(7/6) d^(11/6), k = 2 pi / lambda.
inline double rytov_variance(double cn2, double lambda_m, double d_m) {
    detail::require_non_negative(cn2, "cn2");
    detail::require_positive(lambda_m, "lambda");
    detail::require_non_negative(d_m, "d");
    const double k = 2.0 * std::numbers::pi / lambda_m;
    return 1.23 * cn2 * std::pow(k, 7.0 / 6.0) * std::pow(d_m, 11.0 / 6.0);
}

inline HopChannel build_hop(double d_m, const SystemParams& params) {
    detail::require_positive(d_m, "d");
    HopChannel hop;
    hop.distance = d_m;
    hop.xi = scattering_coefficient(params.visibility_km, params.lambda_nm) * 1e-3;
    hop.path_loss = path_loss(d_m, params.divergence_rad(), params.aperture_area_m2, hop.xi);
    hop.rytov_var = rytov_variance(params.cn2, params.wavelength_m(), d_m);
    hop.sigma2_l = hop.rytov_var / 4.0;
    hop.mu_l = -hop.rytov_var / 8.0 + std::log(hop.path_loss);
    return hop;
}

inline HopTriple build_hops(double d_sr, double d_rr, double d_rd, const SystemParams& params) {
    return {build_hop(d_sr, params), build_hop(d_rr, params), build_hop(d_rd, params)};
}

/// Gains at their means, E[h] = h_l on every hop.
inline FadingRealization mean_fading(const HopTriple& hops) {
    return {hops[0].path_loss, hops[1].path_loss, hops[2].path_loss};
}

/// Log-normal density of the turbulence gain; zero outside the support.
inline double fading_pdf(double h_a, double mu, double sigma2) {
    detail::require_positive(sigma2, "sigma2");
    if (!(h_a > 0.0)) return 0.0;
    const double sigma = std::sqrt(sigma2);
    const double z = std::log(h_a) - mu;
    return std::exp(-z * z / (2.0 * sigma2)) / (h_a * sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Maps a standard normal variate onto the hop's gain. A hop without
/// turbulence returns its path loss exactly.
inline double gain_from_normal(const HopChannel& hop, double z) {
    if (hop.sigma2_l == 0.0) return hop.path_loss;
    return std::exp(hop.mu_l + std::sqrt(hop.sigma2_l) * z);
}

inline FadingRealization realize(const HopTriple& hops, double z_sr, double z_rr, double z_rd) {
    return {gain_from_normal(hops[0], z_sr), gain_from_normal(hops[1], z_rr),
            gain_from_normal(hops[2], z_rd)};
}

/// Draws three independent hop gains from any uniform random bit generator.
template <std::uniform_random_bit_generator Urbg>
FadingRealization sample_fading(const HopTriple& hops, Urbg& rng) {
    std::normal_distribution<double> normal;
    const double z0 = normal(rng);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    return realize(hops, z0, z1, z2);
}

/**
 * Keyed fading sampler. Draw i of hop k comes from the substream
 * (seed, k, i / kDrawChunk), so the sequence depends only on the seed and
 * the draw index. It agrees element-for-element with `common_normals`.
 */
class FadingStream {
public:
    FadingStream(const HopTriple& hops, std::uint64_t seed) : hops_(hops), seed_(seed) { reseed(); }

    FadingRealization draw() {
        if (within_chunk_ == kDrawChunk) {
            ++chunk_;
            reseed();
        }
        ++within_chunk_;
        const double z0 = streams_[0]();
        const double z1 = streams_[1]();
        const double z2 = streams_[2]();
        return realize(hops_, z0, z1, z2);
    }

private:
    void reseed() {
        for (std::uint32_t k = 0; k < 3; ++k) streams_[k] = NormalStream(seed_, k, chunk_);
        within_chunk_ = 0;
    }

    HopTriple hops_;
    std::uint64_t seed_;
    std::uint64_t chunk_ = 0;
    std::size_t within_chunk_ = 0;
    std::array<NormalStream, 3> streams_{};
};

} // namespace fso_relay

#endif
