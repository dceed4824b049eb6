// Command-line front end: curve, simulate, validate, spde.
//
// Every subcommand reads one JSON config and writes into the output
// directory. Exit codes: 0 ok, 1 validation failure, 2 explosion, 64 bad
// config or arguments, 70 internal error.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "discount_ts/discount_ts.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitExplosion = 2;
constexpr int kExitConfig = 64;
constexpr int kExitInternal = 70;

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

[[noreturn]] void config_error(const std::string& what) { throw CliError(kExitConfig, "config: " + what); }

void check(dts_status s, const char* context) {
    if (s == DTS_OK) return;
    const std::string msg = std::string(context) + ": " + dts_last_error();
    switch (s) {
        case DTS_ERR_EXPLOSION: throw CliError(kExitExplosion, msg);
        case DTS_ERR_INVALID_ARGUMENT:
        case DTS_ERR_DEGENERATE_CURVE:
        case DTS_ERR_BOUNDARY: throw CliError(kExitConfig, msg);
        default: throw CliError(kExitInternal, msg);
    }
}

template <class T, void (*Destroy)(T*)>
struct Deleter {
    void operator()(T* p) const { Destroy(p); }
};
using AffinePtr = std::unique_ptr<dts_affine_model, Deleter<dts_affine_model, dts_affine_destroy>>;
using SimplexPtr = std::unique_ptr<dts_simplex_model, Deleter<dts_simplex_model, dts_simplex_destroy>>;
using BundlePtr = std::unique_ptr<dts_path_bundle, Deleter<dts_path_bundle, dts_bundle_destroy>>;
using GridPtr = std::unique_ptr<dts_grid_ensemble, Deleter<dts_grid_ensemble, dts_grid_destroy>>;
using ReportsPtr = std::unique_ptr<dts_report_set, Deleter<dts_report_set, dts_report_set_destroy>>;

// Shortest round-trip decimal.
std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

// ------------------------------------------------------------------ config

const json& member(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) config_error(std::string(where) + "." + key + " is required");
    return j.at(key);
}

double number(const json& j, const char* key, const char* where) {
    const json& v = member(j, key, where);
    if (!v.is_number()) config_error(std::string(where) + "." + key + " must be a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const char* where) {
    return j.is_object() && j.contains(key) ? number(j, key, where) : fallback;
}

std::uint64_t count(const json& j, const char* key, const char* where) {
    const json& v = member(j, key, where);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        config_error(std::string(where) + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback, const char* where) {
    return j.is_object() && j.contains(key) ? count(j, key, where) : fallback;
}

std::string text_or(const json& j, const char* key, const std::string& fallback, const char* where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_string()) config_error(std::string(where) + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

// Flattens nested arrays (so beta may be given as rows or flat).
void flatten(const json& v, std::vector<double>& out, const std::string& name) {
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) flatten(e, out, name);
    } else {
        config_error(name + " must contain numbers");
    }
}

std::vector<double> numbers(const json& j, const char* key, std::size_t expected, const char* where) {
    std::vector<double> out;
    const std::string name = std::string(where) + "." + key;
    flatten(member(j, key, where), out, name);
    if (expected != 0 && out.size() != expected)
        config_error(name + " needs " + std::to_string(expected) + " entries, got " + std::to_string(out.size()));
    return out;
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> paths;
    std::optional<double> dt;
    std::string out_dir;
    bool timings = false;
    std::vector<double> tau;
    std::vector<double> t_list;
};

struct Config {
    std::string kind;
    json params;
    json sim;
    json root;
    fs::path out_dir;
};

Config load_config(const std::string& path, const Overrides& ov) {
    std::ifstream in(path);
    if (!in) config_error("cannot open " + path);
    Config c;
    try {
        c.root = json::parse(in);
    } catch (const json::parse_error& e) {
        config_error(std::string("parse error in ") + path + ": " + e.what());
    }
    if (!c.root.is_object()) config_error("top level must be an object");
    const json& kind = member(c.root, "model_kind", "config");
    if (!kind.is_string()) config_error("model_kind must be a string");
    c.kind = kind.get<std::string>();
    if (c.kind != "affine" && c.kind != "simplex_factors" && c.kind != "toy" && c.kind != "grid")
        config_error("unknown model_kind '" + c.kind + "'");
    c.params = member(c.root, "params", "config");
    c.sim = c.root.value("sim", json::object());
    if (ov.seed) c.sim["seed"] = *ov.seed;
    if (ov.paths) c.sim["n_paths"] = *ov.paths;
    if (ov.dt) c.sim["dt"] = *ov.dt;
    const json output = c.root.value("output", json::object());
    c.out_dir = !ov.out_dir.empty() ? fs::path(ov.out_dir) : fs::path(text_or(output, "directory", ".", "output"));
    return c;
}

dts_sim_settings sim_settings(const json& sim) {
    dts_sim_settings s{};
    s.dt = number_or(sim, "dt", 1e-3, "sim");
    if (!(s.dt > 0.0)) config_error("sim.dt must be positive");
    if (sim.contains("n_steps")) {
        s.n_steps = count(sim, "n_steps", "sim");
    } else {
        const double horizon = number_or(sim, "horizon", 1.0, "sim");
        if (!(horizon >= 0.0)) config_error("sim.horizon must be >= 0");
        s.n_steps = static_cast<std::size_t>(std::llround(horizon / s.dt));
    }
    s.n_paths = count_or(sim, "n_paths", 1000, "sim");
    if (s.n_paths == 0) config_error("sim.n_paths must be positive");
    s.seed = count_or(sim, "seed", 0, "sim");
    s.record_stride = count_or(sim, "record_stride", 1, "sim");
    return s;
}

AffinePtr make_affine(const json& p) {
    const std::size_t d = count(p, "d", "params");
    const auto gamma = numbers(p, "gamma", d, "params");
    const auto b = numbers(p, "b", d, "params");
    const auto beta = numbers(p, "beta", d * d, "params");
    dts_affine_model* m = nullptr;
    check(dts_affine_create(d, number(p, "gamma0", "params"), gamma.data(), b.data(), beta.data(), &m),
          "affine model");
    return AffinePtr(m);
}

SimplexPtr make_simplex(const json& p) {
    const std::size_t d = count(p, "d", "params");
    const auto kappa = numbers(p, "kappa", d, "params");
    const auto theta = numbers(p, "theta", d, "params");
    const auto q = numbers(p, "q", d, "params");
    dts_simplex_model* m = nullptr;
    check(dts_simplex_create(d, kappa.data(), theta.data(), q.data(), number_or(p, "gamma0", 0.0, "params"), &m),
          "simplex factor model");
    return SimplexPtr(m);
}

// Initial curve and volatility of a grid config.
struct GridSetup {
    std::vector<double> maturities;
    std::vector<double> h0;
    bool exponential = false;
    double level = 0.0;
    double decay = 0.0;
    dts_vol_kind vol_kind = DTS_VOL_ZERO;
    std::vector<double> vol_level;
    std::vector<double> mpr;
    dts_grid_scheme scheme = DTS_SCHEME_DISCOUNT_FLOW;
    dts_grid_drift drift = DTS_DRIFT_ARBITRAGE_FREE;
    double h_max = 0.0;

    dts_grid_options options() const {
        dts_grid_options o{};
        o.vol_kind = vol_kind;
        o.n_factors = vol_level.size();
        o.vol_level = vol_level.empty() ? nullptr : vol_level.data();
        o.market_price_of_risk = mpr.empty() ? nullptr : mpr.data();
        o.scheme = scheme;
        o.drift = drift;
        o.h_max = h_max;
        return o;
    }
};

std::vector<double> lattice(double step, double max_maturity) {
    if (!(step > 0.0) || !(max_maturity >= 0.0)) config_error("maturity lattice needs step > 0, max >= 0");
    const auto n = static_cast<std::size_t>(std::llround(max_maturity / step));
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = static_cast<double>(i) * step;
    return out;
}

GridSetup grid_setup(const json& p, double dt) {
    GridSetup g;
    const json& curve = member(p, "curve", "params");
    const std::string kind = text_or(curve, "kind", "exponential", "params.curve");
    if (kind == "exponential" || kind == "constant") {
        g.exponential = true;
        g.level = number(curve, "level", "params.curve");
        g.decay = kind == "constant" ? 0.0 : number_or(curve, "decay", 0.0, "params.curve");
        g.maturities = lattice(number_or(curve, "step", dt, "params.curve"),
                               number(curve, "max_maturity", "params.curve"));
        for (double x : g.maturities) g.h0.push_back(g.level * std::exp(-g.decay * x));
    } else if (kind == "samples") {
        g.maturities = numbers(curve, "maturities", 0, "params.curve");
        g.h0 = numbers(curve, "h0", g.maturities.size(), "params.curve");
    } else {
        config_error("params.curve.kind must be exponential, constant or samples");
    }

    const json vol = p.value("vol", json::object());
    const std::string vk = text_or(vol, "kind", "zero", "params.vol");
    if (vk == "zero") {
        g.vol_kind = DTS_VOL_ZERO;
    } else if (vk == "constant" || vk == "proportional") {
        g.vol_kind = vk == "constant" ? DTS_VOL_CONSTANT : DTS_VOL_PROPORTIONAL;
        g.vol_level = numbers(vol, "level", 0, "params.vol");
    } else {
        config_error("params.vol.kind must be zero, constant or proportional");
    }
    if (p.contains("market_price_of_risk")) g.mpr = numbers(p, "market_price_of_risk", 0, "params");
    const std::string scheme = text_or(p, "scheme", "discount_flow", "params");
    if (scheme == "euler") {
        g.scheme = DTS_SCHEME_EULER;
    } else if (scheme != "discount_flow") {
        config_error("params.scheme must be discount_flow or euler");
    }
    const std::string drift = text_or(p, "drift", "arbitrage_free", "params");
    if (drift == "zero") {
        g.drift = DTS_DRIFT_ZERO;
    } else if (drift != "arbitrage_free") {
        config_error("params.drift must be arbitrage_free or zero");
    }
    g.h_max = number_or(p, "h_max", 0.0, "params");
    return g;
}

GridPtr simulate_grid(const GridSetup& g, const dts_sim_settings& s) {
    const dts_grid_options o = g.options();
    dts_grid_ensemble* e = nullptr;
    check(dts_grid_simulate(g.maturities.size(), g.maturities.data(), g.h0.data(), &o, &s, &e), "grid simulation");
    return GridPtr(e);
}

// ------------------------------------------------------------------ output

fs::path prepare(const fs::path& dir, const char* file) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError(kExitConfig, "cannot create output directory " + dir.string() + ": " + ec.message());
    return dir / file;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError(kExitConfig, "cannot write " + path.string());
    out << content;
}

// ------------------------------------------------------------------- curve

std::vector<double> tau_grid(const Config& c, const Overrides& ov) {
    if (!ov.tau.empty()) return ov.tau;
    const json curve = c.root.value("curve", json::object());
    if (curve.contains("tau")) return numbers(curve, "tau", 0, "curve");
    return lattice(number_or(curve, "tau_step", 1.0, "curve"), number_or(curve, "tau_max", 30.0, "curve"));
}

int cmd_curve(const Config& c, const Overrides& ov) {
    const auto taus = tau_grid(c, ov);
    std::string csv = "tau,h,discount,bond,forward,short_rate\n";
    auto row = [&csv](const dts_curve_point& p) {
        csv += fmt(p.tau) + ',' + fmt(p.h) + ',' + fmt(p.discount) + ',' + fmt(p.bond) + ',' + fmt(p.forward) +
               ',' + fmt(p.short_rate) + '\n';
    };

    if (c.kind == "toy") {
        const double theta = number(c.params, "theta", "params");
        const double r = number(c.params, "r0", "params");
        for (double tau : taus) {
            dts_curve_point p{};
            int in_domain = 1;
            check(dts_toy_curve_point(theta, r, tau, &p, &in_domain), "toy curve");
            if (!in_domain) config_error("params.r0 must lie in [0, theta]");
            row(p);
        }
    } else if (c.kind == "affine" || c.kind == "simplex_factors") {
        AffinePtr model;
        std::vector<double> z;
        if (c.kind == "affine") {
            model = make_affine(c.params);
            z = numbers(c.params, "z", dts_affine_dim(model.get()), "params");
        } else {
            const SimplexPtr simplex = make_simplex(c.params);
            dts_affine_model* m = nullptr;
            check(dts_simplex_to_affine(simplex.get(), &m), "affine mapping");
            model.reset(m);
            z = numbers(c.params, "z0", dts_simplex_dim(simplex.get()), "params");
        }
        for (double tau : taus) {
            dts_curve_point p{};
            check(dts_affine_curve_point(model.get(), tau, z.data(), &p), "affine curve");
            row(p);
        }
    } else {
        config_error("curve supports affine, simplex_factors and toy models");
    }

    const fs::path path = prepare(c.out_dir, "curve.csv");
    write_file(path, csv);
    std::cout << "wrote " << path.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct PathWriter {
    bool summary_only = false;
    std::string csv = "t,path_id,component,value\n";

    // One record time: either every (path, component) value or, in summary
    // mode, mean and sample standard deviation across paths.
    template <class Get>
    void add(double t, std::size_t n_paths, std::size_t dim, Get&& get) {
        if (!summary_only) {
            for (std::size_t p = 0; p < n_paths; ++p)
                for (std::size_t k = 0; k < dim; ++k) {
                    const double v = get(p, k);
                    if (std::isnan(v)) continue;
                    csv += fmt(t) + ',' + std::to_string(p) + ',' + std::to_string(k) + ',' + fmt(v) + '\n';
                }
            return;
        }
        for (std::size_t k = 0; k < dim; ++k) {
            double sum = 0.0, sq = 0.0;
            std::size_t n = 0;
            for (std::size_t p = 0; p < n_paths; ++p) {
                const double v = get(p, k);
                if (std::isnan(v)) continue;
                sum += v;
                sq += v * v;
                ++n;
            }
            if (n == 0) continue;
            const double mean = sum / static_cast<double>(n);
            const double var = n > 1 ? std::max(0.0, (sq - sum * mean) / static_cast<double>(n - 1)) : 0.0;
            csv += fmt(t) + ",mean," + std::to_string(k) + ',' + fmt(mean) + '\n';
            csv += fmt(t) + ",std," + std::to_string(k) + ',' + fmt(std::sqrt(var)) + '\n';
        }
    }
};

int cmd_simulate(const Config& c, const Overrides&) {
    const dts_sim_settings s = sim_settings(c.sim);
    const json output = c.root.value("output", json::object());
    PathWriter writer;
    const std::string mode = text_or(output, "paths", "all", "output");
    if (mode != "all" && mode != "summary") config_error("output.paths must be all or summary");
    writer.summary_only = mode == "summary";

    ordered_json summary;
    summary["model_kind"] = c.kind;
    summary["dt"] = s.dt;
    summary["n_steps"] = s.n_steps;
    summary["n_paths"] = s.n_paths;
    summary["seed"] = s.seed;
    int exit_code = kExitOk;

    auto bundle_output = [&](const dts_path_bundle* b) {
        const std::size_t dim = dts_bundle_dim(b);
        for (std::size_t rec = 0; rec < dts_bundle_n_records(b); ++rec)
            writer.add(dts_bundle_record_time(b, rec), s.n_paths, dim,
                       [&](std::size_t p, std::size_t k) { return dts_bundle_state(b, p, rec)[k]; });
        std::uint64_t clamps = 0;
        for (std::size_t p = 0; p < s.n_paths; ++p) clamps += dts_bundle_clamp_events(b, p);
        summary["clamp_events"] = clamps;
        summary["clamp_fraction"] = dts_bundle_clamp_fraction(b);
        summary["explosions"] = ordered_json::array();
    };

    if (c.kind == "simplex_factors") {
        const SimplexPtr model = make_simplex(c.params);
        const std::size_t d = dts_simplex_dim(model.get());
        const std::string process = text_or(c.params, "process", "z", "params");
        dts_path_bundle* b = nullptr;
        if (process == "z") {
            const auto z0 = numbers(c.params, "z0", d, "params");
            check(dts_simulate_z(model.get(), z0.data(), &s, &b), "simulate_z");
        } else if (process == "u") {
            std::vector<double> u0(d);
            if (c.params.contains("u0")) {
                u0 = numbers(c.params, "u0", d, "params");
            } else {
                const auto z0 = numbers(c.params, "z0", d, "params");
                check(dts_g_inverse(d, z0.data(), u0.data()), "params.z0");
            }
            check(dts_simulate_u(model.get(), u0.data(), &s, &b), "simulate_u");
        } else {
            config_error("params.process must be z or u");
        }
        summary["process"] = process;
        const BundlePtr bundle(b);
        bundle_output(bundle.get());
    } else if (c.kind == "toy") {
        dts_path_bundle* b = nullptr;
        check(dts_simulate_toy_rate(number(c.params, "theta", "params"), number_or(c.params, "nu", 0.0, "params"),
                                    number(c.params, "r0", "params"), &s, &b),
              "toy simulation");
        const BundlePtr bundle(b);
        bundle_output(bundle.get());
    } else if (c.kind == "grid") {
        const GridSetup g = grid_setup(c.params, s.dt);
        const GridPtr ens = simulate_grid(g, s);
        const std::size_t m = dts_grid_n_nodes(ens.get());
        for (std::size_t rec = 0; rec < dts_grid_n_records(ens.get()); ++rec)
            writer.add(dts_grid_record_time(ens.get(), rec), s.n_paths, m,
                       [&](std::size_t p, std::size_t k) { return dts_grid_curve(ens.get(), p, rec)[k]; });
        summary["maturities"] = g.maturities;
        ordered_json events = ordered_json::array();
        double first = INFINITY;
        for (std::size_t i = 0; i < dts_grid_n_explosions(ens.get()); ++i) {
            std::size_t path = 0;
            double time = 0.0;
            check(dts_grid_explosion(ens.get(), i, &path, &time), "explosion record");
            events.push_back({{"path", path}, {"time", time}});
            first = std::min(first, time);
        }
        summary["explosions"] = events;
        if (!events.empty()) {
            summary["first_explosion_time"] = first;
            exit_code = kExitExplosion;
        }
    } else {
        config_error("simulate supports simplex_factors, toy and grid models");
    }

    const fs::path csv_path = prepare(c.out_dir, "paths.csv");
    write_file(csv_path, writer.csv);
    const fs::path json_path = c.out_dir / "summary.json";
    write_file(json_path, summary.dump(2) + "\n");
    std::cout << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
    if (exit_code == kExitExplosion)
        std::cerr << "explosion: first blow-up at t = " << fmt(summary["first_explosion_time"].get<double>())
                  << '\n';
    return exit_code;
}

// ---------------------------------------------------------------- validate

// Grid ensemble for the drift check, started from the model's own h(0, .).
GridPtr model_grid(const dts_simplex_model* model, const std::vector<double>& z0, double maturity,
                   const json& cfg, std::uint64_t seed, GridSetup& g) {
    dts_affine_model* raw = nullptr;
    check(dts_simplex_to_affine(model, &raw), "affine mapping");
    const AffinePtr affine(raw);
    const double dt = number_or(cfg, "dt", 0.05, "validate.grid");
    g.maturities = lattice(dt, number_or(cfg, "max_maturity", maturity, "validate.grid"));
    for (double x : g.maturities) {
        dts_curve_point p{};
        check(dts_affine_curve_point(affine.get(), x, z0.data(), &p), "initial curve");
        g.h0.push_back(p.h);
    }
    g.vol_kind = DTS_VOL_CONSTANT;
    g.vol_level = {number_or(cfg, "vol", 1e-4, "validate.grid")};
    if (cfg.value("zero_drift_probe", false)) g.drift = DTS_DRIFT_ZERO;

    dts_sim_settings s{};
    s.dt = dt;
    s.n_steps = g.maturities.size() - 1;
    s.n_paths = count_or(cfg, "n_paths", 10000, "validate.grid");
    s.seed = seed;
    s.record_stride = 1;
    return simulate_grid(g, s);
}

int cmd_validate(const Config& c, const Overrides& ov) {
    const json v = c.root.value("validate", json::object());
    const std::size_t drift_points = count_or(v, "drift_points", 20, "validate");
    const double k = number_or(v, "tolerance_multiplier", 3.0, "validate");
    dts_report_set* raw = nullptr;
    check(dts_report_set_create(&raw), "report set");
    const ReportsPtr set(raw);

    if (c.kind == "simplex_factors") {
        const SimplexPtr model = make_simplex(c.params);
        const std::size_t d = dts_simplex_dim(model.get());
        const auto z0 = numbers(c.params, "z0", d, "params");
        const double maturity = number_or(v, "maturity", 5.0, "validate");
        if (!(maturity >= 0.0)) config_error("validate.maturity must be >= 0");
        const dts_sim_settings s = sim_settings(c.sim);

        dts_mc_settings mc{};
        mc.dt = s.dt;
        mc.n_paths = s.n_paths;
        mc.seed = s.seed;
        mc.tolerance_multiplier = k;
        mc.abs_tolerance = number_or(v, "abs_tolerance", 0.0, "validate");
        check(dts_check_pricing(set.get(), model.get(), z0.data(), maturity, &mc), "pricing battery");
        mc.seed = s.seed + 1;
        check(dts_check_gains(set.get(), model.get(), z0.data(), maturity, &mc), "gains martingale check");

        const json grid_cfg = v.value("grid", json::object());
        const double grid_dt = number_or(grid_cfg, "dt", 0.05, "validate.grid");
        if (maturity >= grid_dt) {
            GridSetup g;
            const GridPtr ens = model_grid(model.get(), z0, maturity, grid_cfg, s.seed + 2, g);
            check(dts_check_drift(set.get(), ens.get(), drift_points, k), "drift check");
            check(dts_check_positivity_grid(set.get(), ens.get()), "grid positivity scan");
        }

        const json pos = v.value("positivity", json::object());
        dts_sim_settings ps{};
        ps.dt = s.dt;
        ps.n_steps = static_cast<std::size_t>(std::llround(maturity / s.dt));
        ps.n_paths = count_or(pos, "n_paths", 1000, "validate.positivity");
        ps.seed = s.seed + 3;
        ps.record_stride = std::max<std::size_t>(1, count_or(pos, "record_stride", 100, "validate.positivity"));
        dts_path_bundle* b = nullptr;
        check(dts_simulate_z(model.get(), z0.data(), &ps, &b), "positivity paths");
        const BundlePtr paths(b);
        check(dts_check_positivity_affine(set.get(), model.get(), paths.get(),
                                          number_or(pos, "horizon", 30.0, "validate.positivity"),
                                          number_or(pos, "dtau", 0.25, "validate.positivity")),
              "affine positivity scan");
    } else if (c.kind == "grid") {
        const dts_sim_settings s = sim_settings(c.sim);
        const GridSetup g = grid_setup(c.params, s.dt);
        const GridPtr ens = simulate_grid(g, s);
        check(dts_check_drift(set.get(), ens.get(), drift_points, k), "drift check");
        check(dts_check_positivity_grid(set.get(), ens.get()), "grid positivity scan");
    } else {
        config_error("validate needs simulatable factors: model_kind simplex_factors or grid");
    }

    const fs::path json_path = prepare(c.out_dir, "report.json");
    write_file(json_path, dts_report_set_json(set.get(), ov.timings ? 1 : 0));
    const std::string table = dts_report_set_table(set.get());
    write_file(c.out_dir / "report.txt", table);
    std::cout << table;
    const bool ok = dts_report_set_all_passed(set.get()) != 0;
    std::cout << (ok ? "all checks passed" : "validation FAILED") << '\n';
    return ok ? kExitOk : kExitFailed;
}

// -------------------------------------------------------------------- spde

int cmd_spde(const Config& c, const Overrides& ov) {
    if (c.kind != "grid") config_error("spde needs a grid config with an initial curve");
    const double dt = number_or(c.sim, "dt", 1e-3, "sim");
    const GridSetup g = grid_setup(c.params, dt);
    std::vector<double> times = ov.t_list;
    if (times.empty()) {
        const json spde = c.root.value("spde", json::object());
        times = spde.contains("t") ? numbers(spde, "t", 0, "spde") : std::vector<double>{0.0};
    }
    if (g.maturities.empty() || g.maturities.front() != 0.0)
        config_error("params.curve maturities must start at 0");
    const double last = g.maturities.back();

    std::string csv = "t,x,psi\n";
    int exit_code = kExitOk;
    std::string message;
    for (double t : times) {
        if (!(t >= 0.0) || t > last) config_error("spde time " + fmt(t) + " outside [0, " + fmt(last) + "]");
        bool exploded = false;
        for (double x : g.maturities) {
            if (t + x > last * (1.0 + 1e-12)) break;
            double psi = 0.0;
            const dts_status st =
                g.exponential ? dts_spde_flow_exponential(g.level, g.decay, t, x, &psi)
                              : dts_spde_flow_sampled(g.maturities.size(), g.maturities.data(), g.h0.data(), t, x,
                                                      &psi);
            if (st == DTS_ERR_EXPLOSION) {
                exploded = true;
                message = dts_last_error();
                break;
            }
            check(st, "spde flow");
            csv += fmt(t) + ',' + fmt(x) + ',' + fmt(psi) + '\n';
        }
        if (exploded) {
            exit_code = kExitExplosion;
            break;
        }
    }

    const fs::path path = prepare(c.out_dir, "spde.csv");
    write_file(path, csv);
    std::cout << "wrote " << path.string() << '\n';
    if (exit_code == kExitExplosion) {
        double tc = 0.0;
        if (g.exponential) {
            // Closed form for the constant curve, numeric root otherwise.
            tc = g.decay == 0.0 ? 1.0 / g.level : -std::log1p(-g.decay / g.level) / g.decay;
        } else {
            check(dts_critical_time_sampled(g.maturities.size(), g.maturities.data(), g.h0.data(), last, &tc),
                  "critical time");
        }
        std::cerr << "explosion: " << message << " (critical time " << fmt(tc) << ")\n";
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discount term-structure engine"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(dts_version()));

    std::string config_path;
    Overrides ov;
    std::uint64_t seed = 0, paths = 0;
    double dt = 0.0;
    app.add_option("--config", config_path, "JSON model configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", ov.out_dir, "Output directory (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides sim.seed)");
    auto* paths_opt = app.add_option("--paths", paths, "Number of paths (overrides sim.n_paths)");
    auto* dt_opt = app.add_option("--dt", dt, "Time step (overrides sim.dt)");
    app.add_flag("--timings", ov.timings, "Write check runtimes into report.json");

    auto* curve = app.add_subcommand("curve", "Tabulate h, H, P, forward and short rate over tau");
    curve->add_option("--tau", ov.tau, "Comma-separated tau grid")->delimiter(',');
    app.add_subcommand("simulate", "Simulate factor, toy or grid paths");
    app.add_subcommand("validate", "Run the Monte Carlo validation battery");
    auto* spde = app.add_subcommand("spde", "Deterministic flow of the initial curve");
    spde->add_option("--t", ov.t_list, "Comma-separated times")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    if (*seed_opt) ov.seed = seed;
    if (*paths_opt) ov.paths = paths;
    if (*dt_opt) ov.dt = dt;

    try {
        const Config c = load_config(config_path, ov);
        if (curve->parsed()) return cmd_curve(c, ov);
        if (app.got_subcommand("simulate")) return cmd_simulate(c, ov);
        if (app.got_subcommand("validate")) return cmd_validate(c, ov);
        if (spde->parsed()) return cmd_spde(c, ov);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitConfig;
}
