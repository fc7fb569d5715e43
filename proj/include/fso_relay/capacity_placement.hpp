#ifndef FSO_RELAY_CAPACITY_PLACEMENT_HPP
#define FSO_RELAY_CAPACITY_PLACEMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "channel_model.hpp"
#include "errors.hpp"
#include "link_params.hpp"
#include "random_streams.hpp"
#include "relay_chain.hpp"

namespace fso_relay {

enum class LogBase { Bits, Nats };

inline double instantaneous_capacity(double snr, LogBase base = LogBase::Bits) {
    return base == LogBase::Bits ? std::log2(1.0 + snr) : std::log1p(snr);
}

/// Ergodic capacity estimate per channel use, with its Monte-Carlo standard error.
struct CapacityEstimate {
    double mean_bits = 0;
    double std_error = 0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    VarianceMode mode = VarianceMode::MomentComposition;
    LogBase base = LogBase::Bits;

    bool operator==(const CapacityEstimate&) const = default;
};

struct PlacementPoint {
    double d_sr = 0;
    double d_rr = 0;
    double d_rd = 0;
    CapacityEstimate estimate;
};

struct SweepResult {
    double grid_step = 0;
    std::vector<PlacementPoint> points;
    PlacementPoint optimum;
};

struct ModeComparisonRow {
    double d_rd = 0;
    double d_sr = 0;  // equals d_rr
    VarianceMode mode = VarianceMode::MomentComposition;
    CapacityEstimate estimate;
};

struct MonteCarloOptions {
    unsigned threads = 0;  // 0: all hardware threads
    LogBase base = LogBase::Bits;
};

inline constexpr std::size_t kMinSamples = 100;

/// Streaming mean/variance (Welford) with an order-sensitive merge.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0;
    double m2 = 0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double delta = o.mean - mean;
        mean += delta * static_cast<double>(o.n) / total;
        m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }

    double standard_error() const {
        if (n < 2) return 0.0;
        return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, count). Each index writes its own slot, so the
/// outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t n) { return (n + kDrawChunk - 1) / kDrawChunk; }

inline RunningStats chunk_stats(const HopTriple& hops, const RelayChain& chain, VarianceMode mode,
                                const CommonNormals& draws, std::size_t chunk, LogBase base) {
    RunningStats s;
    const std::size_t begin = chunk * kDrawChunk;
    const std::size_t end = std::min(draws.size, begin + kDrawChunk);
    for (std::size_t i = begin; i < end; ++i) {
        const auto h = realize(hops, draws.z[0][i], draws.z[1][i], draws.z[2][i]);
        s.add(instantaneous_capacity(chain.snr(h, mode), base));
    }
    return s;
}

inline CapacityEstimate finish(const RunningStats& total, const CommonNormals& draws, VarianceMode mode,
                               LogBase base) {
    return {total.mean, total.standard_error(), total.n, draws.seed, mode, base};
}

/// Sequential estimate; chunk partials are merged in index order.
inline CapacityEstimate estimate_serial(const HopTriple& hops, const RelayChain& chain, VarianceMode mode,
                                        const CommonNormals& draws, LogBase base) {
    RunningStats total;
    for (std::size_t c = 0; c < chunk_count(draws.size); ++c)
        total.merge(chunk_stats(hops, chain, mode, draws, c, base));
    return finish(total, draws, mode, base);
}

inline void check_geometry(double d_sr, double d_rr, double d_rd, const SystemParams& params) {
    if (!(d_sr > 0.0 && d_rr > 0.0 && d_rd > 0.0))
        throw geometry_error("hop distances must be strictly positive");
    if (std::abs(d_sr + d_rr + d_rd - params.d_sd_m) > 1e-9)
        throw geometry_error("hop distances must sum to d_sd_m");
}

inline void check_samples(std::size_t n_samples) {
    if (n_samples < kMinSamples) throw validation_error("n_samples", "must be at least 100");
}

} // namespace detail

/**
 * Ergodic capacity E[log(1 + snr)] over the three independent log-normal hop
 * gains, estimated with `draws` (which fixes the sample count and seed).
 * Chunks are evaluated in parallel and reduced in index order, so the result
 * is bit-identical for any thread count.
 */
inline CapacityEstimate ergodic_capacity(double d_sr, double d_rr, double d_rd, const SystemParams& params,
                                         VarianceMode mode, const CommonNormals& draws,
                                         const MonteCarloOptions& options = {}) {
    detail::check_geometry(d_sr, d_rr, d_rd, params);
    detail::check_samples(draws.size);
    const auto hops = build_hops(d_sr, d_rr, d_rd, params);
    const RelayChain chain(params);
    std::vector<RunningStats> partials(detail::chunk_count(draws.size));
    detail::parallel_for(partials.size(), options.threads, [&](std::size_t c) {
        partials[c] = detail::chunk_stats(hops, chain, mode, draws, c, options.base);
    });
    RunningStats total;
    for (const auto& p : partials) total.merge(p);
    return detail::finish(total, draws, mode, options.base);
}

inline CapacityEstimate ergodic_capacity(double d_sr, double d_rr, double d_rd, const SystemParams& params,
                                         VarianceMode mode, std::size_t n_samples, std::uint64_t seed,
                                         const MonteCarloOptions& options = {}) {
    detail::check_geometry(d_sr, d_rr, d_rd, params);
    detail::check_samples(n_samples);
    return ergodic_capacity(d_sr, d_rr, d_rd, params, mode, common_normals(seed, n_samples), options);
}

/**
 * Grid search over relay placements (d_sr, d_rr) = (i step, j step), i, j >= 1,
 * keeping d_rd = d_sd - d_sr - d_rr >= step. Every point reuses the same
 * fading draws. The optimum is the largest estimate; ties go to the smallest
 * d_sr, then the smallest d_rr.
 */
inline SweepResult sweep(const SystemParams& params, double grid_step, VarianceMode mode, std::size_t n_samples,
                         std::uint64_t seed, const MonteCarloOptions& options = {}) {
    detail::require_positive(grid_step, "grid_step");
    detail::check_samples(n_samples);
    validate(params);

    SweepResult result;
    result.grid_step = grid_step;
    const double d_sd = params.d_sd_m;
    const double slack = 1e-9;
    for (long i = 1; i * grid_step + 2 * grid_step <= d_sd + slack; ++i) {
        for (long j = 1;; ++j) {
            const double d_sr = static_cast<double>(i) * grid_step;
            const double d_rr = static_cast<double>(j) * grid_step;
            const double d_rd = d_sd - d_sr - d_rr;
            if (d_rd < grid_step - slack) break;
            result.points.push_back({d_sr, d_rr, d_rd, {}});
        }
    }
    if (result.points.empty()) throw geometry_error("placement grid is empty; grid_step too large for d_sd_m");

    const auto draws = common_normals(seed, n_samples);
    const RelayChain chain(params);
    detail::parallel_for(result.points.size(), options.threads, [&](std::size_t k) {
        auto& pt = result.points[k];
        const auto hops = build_hops(pt.d_sr, pt.d_rr, pt.d_rd, params);
        pt.estimate = detail::estimate_serial(hops, chain, mode, draws, options.base);
    });

    result.optimum = result.points.front();
    for (const auto& pt : result.points)
        if (pt.estimate.mean_bits > result.optimum.estimate.mean_bits) result.optimum = pt;
    return result;
}

/**
 * Capacity along the symmetric line d_sr = d_rr = (d_sd - d_rd) / 2 for each
 * requested variance mode. All rows share one block of fading draws. Rows are
 * ordered by the position in `d_rd_grid`, then by the position in `modes`.
 */
inline std::vector<ModeComparisonRow> compare_modes(const SystemParams& params, std::span<const double> d_rd_grid,
                                                    std::span<const VarianceMode> modes, std::size_t n_samples,
                                                    std::uint64_t seed, const MonteCarloOptions& options = {}) {
    detail::check_samples(n_samples);
    validate(params);
    for (double d_rd : d_rd_grid)
        if (!(d_rd > 0.0 && d_rd < params.d_sd_m)) throw geometry_error("d_rd must lie in (0, d_sd_m)");

    std::vector<ModeComparisonRow> rows;
    rows.reserve(d_rd_grid.size() * modes.size());
    for (double d_rd : d_rd_grid)
        for (auto mode : modes) rows.push_back({d_rd, (params.d_sd_m - d_rd) / 2.0, mode, {}});

    const auto draws = common_normals(seed, n_samples);
    const RelayChain chain(params);
    detail::parallel_for(rows.size(), options.threads, [&](std::size_t k) {
        auto& row = rows[k];
        const auto hops = build_hops(row.d_sr, row.d_sr, row.d_rd, params);
        row.estimate = detail::estimate_serial(hops, chain, row.mode, draws, options.base);
    });
    return rows;
}

} // namespace fso_relay

#endif
