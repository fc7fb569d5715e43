#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fso_relay/fso_relay.hpp"

namespace fso_relay::cli {
namespace {

class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 42;
    std::string mode = "composed";
    std::string out;
    unsigned threads = 0;
};

struct Context {
    SystemParams params;
    VarianceMode mode = VarianceMode::MomentComposition;
    MonteCarloOptions mc;
    const GlobalOptions* global = nullptr;
};

/// What a subcommand produced: the report body plus the arguments that,
/// together with the resolved parameters, reproduce it.
struct Report {
    std::string body;
    nlohmann::ordered_json arguments = nlohmann::ordered_json::object();
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary file so a failed run never leaves a partial output.
void write_atomically(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + tmp + "'");
        f << content;
        if (!f.flush()) throw std::runtime_error("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

unsigned resolve_threads(unsigned flag) {
    const char* env = std::getenv("FSO_RELAY_THREADS");
    if (env == nullptr || *env == '\0') return flag;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v > 4096) throw validation_error("FSO_RELAY_THREADS", "must be a thread count");
    return static_cast<unsigned>(v);
}

void require_finite_result(double v, const char* what) {
    if (!std::isfinite(v)) throw numeric_error(std::string("non-finite ") + what);
}

void warn_turbulence(const HopChannel& hop, std::ostream& err) {
    if (!hop.weak_turbulence())
        err << "warning: Rytov variance " << format_number(hop.rytov_var) << " at d = " << format_number(hop.distance)
            << " m exceeds 1; the log-normal fading model assumes weak turbulence\n";
}

std::vector<double> checked_distances(const std::vector<double>& d) {
    if (d.size() != 3) throw validation_error("distances", "expects three values d_sr,d_rr,d_rd");
    return d;
}

Report link_budget(const Context& ctx, const std::vector<double>& distances, std::ostream& err) {
    std::ostringstream s;
    s << "hop,distance_m,xi_per_m,path_loss,rytov_var,mu_l,sigma2_l\n";
    for (std::size_t k = 0; k < distances.size(); ++k) {
        const auto hop = build_hop(distances[k], ctx.params);
        warn_turbulence(hop, err);
        s << (k + 1) << ',' << format_number(hop.distance) << ',' << format_number(hop.xi) << ','
          << format_number(hop.path_loss) << ',' << format_number(hop.rytov_var) << ','
          << format_number(hop.mu_l) << ',' << format_number(hop.sigma2_l) << '\n';
    }
    const auto budget = photon_budget(ctx.params);
    s << "\nquantity,value\n";
    s << "m_s," << format_number(budget.m_s) << '\n';
    s << "m_r1," << format_number(budget.m_r1) << '\n';
    s << "m_r2," << format_number(budget.m_r2) << '\n';
    s << "m_br1," << format_number(budget.m_br1) << '\n';
    s << "m_br2," << format_number(budget.m_br2) << '\n';
    s << "m_bd," << format_number(budget.m_bd) << '\n';
    s << "sigma2_th," << format_number(thermal_noise_variance(ctx.params)) << '\n';
    Report r{s.str()};
    r.arguments["distances"] = distances;
    return r;
}

Report snr_report(const Context& ctx, const std::vector<double>& distances, std::ostream& err) {
    const auto d = checked_distances(distances);
    const auto hops = build_hops(d[0], d[1], d[2], ctx.params);
    for (const auto& hop : hops) warn_turbulence(hop, err);
    const auto h = mean_fading(hops);
    const auto st = destination_stats(h, ctx.params, ctx.mode);
    require_finite_result(st.snr, "SNR");

    std::ostringstream s;
    s << "quantity,value\n";
    auto row = [&](const std::string& key, double v) { s << key << ',' << format_number(v) << '\n'; };
    row("h_sr", h.h_sr);
    row("h_rr", h.h_rr);
    row("h_rd", h.h_rd);
    row("g1", st.gains.g1);
    row("g2", st.gains.g2);
    row("mean", st.mean);
    row("var_signal", st.var_signal);
    row("var_thermal", st.var_thermal);
    row("var_total", st.var_total);
    row("snr", st.snr);
    row("snr_db", 10.0 * std::log10(st.snr));
    for (std::size_t k = 0; k < st.breakdown.size(); ++k) row("term" + std::to_string(k + 1), st.breakdown[k]);
    Report r{s.str()};
    r.arguments["distances"] = distances;
    return r;
}

Report capacity_report(const Context& ctx, const std::vector<double>& distances, std::size_t samples) {
    const auto d = checked_distances(distances);
    const auto est = ergodic_capacity(d[0], d[1], d[2], ctx.params, ctx.mode, samples, ctx.global->seed, ctx.mc);
    require_finite_result(est.mean_bits, "capacity");
    std::ostringstream s;
    s << "d_sr_m,d_rr_m,d_rd_m,mode,capacity_bits,std_error,capacity_bps,n_samples\n";
    s << format_number(d[0]) << ',' << format_number(d[1]) << ',' << format_number(d[2]) << ','
      << to_string(ctx.mode) << ',' << format_number(est.mean_bits) << ',' << format_number(est.std_error) << ','
      << format_number(est.mean_bits * ctx.params.symbol_rate_hz) << ',' << est.n_samples << '\n';
    Report r{s.str()};
    r.arguments["distances"] = distances;
    r.arguments["samples"] = samples;
    return r;
}

Report sweep_report(const Context& ctx, double step, std::size_t samples, std::ostream& err) {
    const auto result = sweep(ctx.params, step, ctx.mode, samples, ctx.global->seed, ctx.mc);
    std::ostringstream s;
    s << "d_sr_m,d_rr_m,d_rd_m,capacity_bits,std_error\n";
    auto row = [&](const PlacementPoint& p) {
        require_finite_result(p.estimate.mean_bits, "capacity");
        s << format_number(p.d_sr) << ',' << format_number(p.d_rr) << ',' << format_number(p.d_rd) << ','
          << format_number(p.estimate.mean_bits) << ',' << format_number(p.estimate.std_error) << '\n';
    };
    for (const auto& p : result.points) row(p);
    row(result.optimum);
    const auto& o = result.optimum;
    err << "optimum: d_sr = " << o.d_sr << " m, d_rr = " << o.d_rr << " m, d_rd = " << o.d_rd
        << " m, capacity = " << format_number(o.estimate.mean_bits) << " bits/use\n";
    Report r{s.str()};
    r.arguments["step"] = step;
    r.arguments["samples"] = samples;
    return r;
}

Report validate_report(const Context& ctx, std::vector<double> pb_list, const std::vector<std::string>& mode_names,
                       double drd_step, std::size_t samples) {
    if (pb_list.empty()) throw validation_error("pb-list", "must not be empty");
    for (double pb : pb_list) detail::require_non_negative(pb, "pb-list");
    std::sort(pb_list.begin(), pb_list.end());
    pb_list.erase(std::unique(pb_list.begin(), pb_list.end()), pb_list.end());

    std::vector<std::string> names = mode_names;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::vector<VarianceMode> modes;
    for (const auto& n : names) {
        auto m = parse_mode(n);
        if (!m) throw validation_error("mode-list", "unknown mode '" + n + "'");
        modes.push_back(*m);
    }
    if (modes.empty()) throw validation_error("mode-list", "must not be empty");

    detail::require_positive(drd_step, "drd-step");
    std::vector<double> grid;
    for (long k = 1; static_cast<double>(k) * drd_step < ctx.params.d_sd_m; ++k)
        grid.push_back(static_cast<double>(k) * drd_step);
    if (grid.empty()) throw geometry_error("d_rd grid is empty; drd-step too large for d_sd_m");

    std::ostringstream s;
    s << "d_rd_m,p_b_w,mode,capacity_bits,std_error\n";
    for (double pb : pb_list) {
        SystemParams p = ctx.params;
        p.with_background(pb);
        const auto rows = compare_modes(p, grid, modes, samples, ctx.global->seed, ctx.mc);
        for (const auto& row : rows) {
            require_finite_result(row.estimate.mean_bits, "capacity");
            s << format_number(row.d_rd) << ',' << format_number(pb) << ',' << to_string(row.mode) << ','
              << format_number(row.estimate.mean_bits) << ',' << format_number(row.estimate.std_error) << '\n';
        }
    }
    Report r{s.str()};
    r.arguments["pb_list"] = pb_list;
    r.arguments["mode_list"] = names;
    r.arguments["drd_step"] = drd_step;
    r.arguments["samples"] = samples;
    return r;
}

void emit(const std::string& subcommand, const Context& ctx, const Report& report, double seconds,
          std::ostream& out) {
    const auto& g = *ctx.global;
    if (g.out.empty()) {
        out << report.body;
        return;
    }
    nlohmann::ordered_json manifest;
    manifest["subcommand"] = subcommand;
    manifest["params"] = to_json(ctx.params);
    manifest["seed"] = g.seed;
    manifest["mode"] = std::string(to_string(ctx.mode));
    manifest["arguments"] = report.arguments;
    manifest["outputs"] = {g.out};
    manifest["wall_clock_s"] = seconds;
    write_atomically(g.out, report.body);
    write_atomically(g.out + ".manifest.json", manifest.dump(2) + "\n");
}

} // namespace

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Triple-hop all-optical relaying FSO link simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON parameter file");
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--mode", g.mode, "Noise variance: composed, printed, low-bg or thermal")
        ->check(CLI::IsMember({"composed", "printed", "low-bg", "thermal"}))
        ->capture_default_str();
    app.add_option("--out", g.out, "Output file (stdout when omitted)");
    app.add_option("--threads", g.threads, "Worker threads, 0 for all cores (FSO_RELAY_THREADS overrides)");

    std::vector<double> distances{1850.0, 1800.0, 1350.0};
    std::optional<double> pb;
    std::size_t samples_single = 200000;
    std::size_t samples_sweep = 20000;
    double step = 50.0;
    std::vector<double> pb_list{1e-10, 1e-9, 5e-9};
    std::vector<std::string> mode_list{"composed", "low-bg", "thermal"};
    double drd_step = 250.0;

    auto* link = app.add_subcommand("link-budget", "Per-hop loss, turbulence and photon budgets");
    link->add_option("--distances", distances, "Hop lengths in m")->delimiter(',')->capture_default_str();

    auto* snr = app.add_subcommand("snr", "Destination statistics at mean fading");
    snr->add_option("--distances", distances, "d_sr,d_rr,d_rd in m")->delimiter(',')->capture_default_str();
    snr->add_option("--pb", pb, "Background power at every receiver, W");

    auto* cap = app.add_subcommand("capacity", "Monte-Carlo ergodic capacity at one placement");
    cap->add_option("--distances", distances, "d_sr,d_rr,d_rd in m")->delimiter(',')->capture_default_str();
    cap->add_option("--pb", pb, "Background power at every receiver, W");
    cap->add_option("--samples", samples_single, "Fading draws")->capture_default_str();

    auto* sw = app.add_subcommand("sweep", "Capacity over the relay placement grid");
    sw->add_option("--step", step, "Grid step in m")->capture_default_str();
    sw->add_option("--pb", pb, "Background power at every receiver, W");
    sw->add_option("--samples", samples_sweep, "Fading draws per grid point")->capture_default_str();

    auto* val = app.add_subcommand("validate", "Variance approximations along d_sr = d_rr");
    val->add_option("--pb-list", pb_list, "Background powers, W")->delimiter(',')->capture_default_str();
    val->add_option("--mode-list", mode_list, "Variance modes")->delimiter(',')->capture_default_str();
    val->add_option("--drd-step", drd_step, "d_rd grid step in m")->capture_default_str();
    val->add_option("--samples", samples_sweep, "Fading draws per point")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        Context ctx;
        ctx.global = &g;
        ctx.params = g.config_path.empty() ? SystemParams{} : load_params(read_file(g.config_path));
        if (pb) {
            ctx.params.with_background(*pb);
            validate(ctx.params);
        }
        ctx.mode = *parse_mode(g.mode);
        ctx.mc.threads = resolve_threads(g.threads);

        Report report;
        std::string name;
        if (*link) {
            name = "link-budget";
            report = link_budget(ctx, distances, err);
        } else if (*snr) {
            name = "snr";
            report = snr_report(ctx, distances, err);
        } else if (*cap) {
            name = "capacity";
            report = capacity_report(ctx, distances, samples_single);
        } else if (*sw) {
            name = "sweep";
            report = sweep_report(ctx, step, samples_sweep, err);
        } else {
            name = "validate";
            report = validate_report(ctx, pb_list, mode_list, drd_step, samples_sweep);
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        emit(name, ctx, report, seconds, out);
        return kOk;
    } catch (const validation_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const geometry_error& e) {
        err << "geometry error: " << e.what() << '\n';
        return kDomainError;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumericError;
    }
}

} // namespace fso_relay::cli
