#include "discount_ts/discount_ts.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "discount_ts/affine.hpp"
#include "discount_ts/errors.hpp"
#include "discount_ts/factors.hpp"
#include "discount_ts/hjm_grid.hpp"
#include "discount_ts/numerics.hpp"
#include "discount_ts/validate.hpp"

struct dts_affine_model {
    dts::AffineParams params;
    dts::GeneratorMatrix generator;
};

struct dts_simplex_model {
    dts::SimplexFactorParams params;
};

struct dts_path_bundle {
    dts::PathBundle bundle;
};

struct dts_grid_ensemble {
    dts::GridEnsemble ensemble;
};

struct dts_report_set {
    std::vector<dts::ValidationReport> reports;
    std::string rendered;
};

namespace {

thread_local std::string g_last_error;

dts_status fail(dts_status status, const char* what) {
    g_last_error = what;
    return status;
}

template <class Fn>
dts_status guarded(Fn&& fn) {
    try {
        fn();
        return DTS_OK;
    } catch (const dts::ExplosionError& e) {
        return fail(DTS_ERR_EXPLOSION, e.what());
    } catch (const dts::DegenerateCurve& e) {
        return fail(DTS_ERR_DEGENERATE_CURVE, e.what());
    } catch (const dts::BoundaryError& e) {
        return fail(DTS_ERR_BOUNDARY, e.what());
    } catch (const dts::InvalidArgument& e) {
        return fail(DTS_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(DTS_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DTS_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DTS_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw dts::InvalidArgument(std::string(what) + " is NULL");
}

std::vector<double> copy_of(const double* p, std::size_t n, const char* what) {
    if (n > 0) require(p, what);
    return n > 0 ? std::vector<double>(p, p + n) : std::vector<double>{};
}

dts::SimSettings to_settings(const dts_sim_settings* s) {
    require(s, "settings");
    return dts::SimSettings{.dt = s->dt,
                            .n_steps = s->n_steps,
                            .n_paths = s->n_paths,
                            .seed = s->seed,
                            .record_stride = s->record_stride == 0 ? 1 : s->record_stride};
}

dts::McSettings to_mc(const dts_mc_settings* mc) {
    require(mc, "mc settings");
    return dts::McSettings{.dt = mc->dt,
                           .n_paths = mc->n_paths,
                           .seed = mc->seed,
                           .tolerance_multiplier = mc->tolerance_multiplier > 0.0 ? mc->tolerance_multiplier : 3.0,
                           .abs_tolerance = mc->abs_tolerance};
}

dts::VolSpec to_vol(dts_vol_kind kind, std::size_t n_factors, const double* level) {
    dts::VolSpec v;
    switch (kind) {
        case DTS_VOL_ZERO: v.kind = dts::VolKind::zero; break;
        case DTS_VOL_CONSTANT: v.kind = dts::VolKind::constant; break;
        case DTS_VOL_PROPORTIONAL: v.kind = dts::VolKind::proportional; break;
        default: throw dts::InvalidArgument("unknown volatility kind");
    }
    if (v.kind != dts::VolKind::zero) v.level = copy_of(level, n_factors, "vol_level");
    return v;
}

dts::FactorModel factor_model(const dts_simplex_model* model, const double* z0) {
    require(model, "model");
    return dts::FactorModel{model->params, copy_of(z0, model->params.d, "z0")};
}

dts_curve_point to_c(const dts::CurvePoint& p) {
    return dts_curve_point{p.tau, p.h, p.discount, p.bond, p.forward, p.short_rate};
}

}  // namespace

extern "C" {

const char* dts_last_error(void) { return g_last_error.c_str(); }

const char* dts_version(void) { return "0.1.0"; }

const char* dts_status_name(dts_status status) {
    switch (status) {
        case DTS_OK: return "ok";
        case DTS_ERR_INVALID_ARGUMENT: return "invalid argument";
        case DTS_ERR_DEGENERATE_CURVE: return "degenerate curve";
        case DTS_ERR_BOUNDARY: return "simplex boundary";
        case DTS_ERR_EXPLOSION: return "explosion";
        case DTS_ERR_NULL_HANDLE: return "null handle";
        case DTS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void dts_set_max_threads(unsigned n) { dts::set_max_threads(n); }
unsigned dts_max_threads(void) { return dts::max_threads(); }

dts_status dts_mat_exp(size_t dim, const double* a, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        const dts::SquareMatrix m(dim, copy_of(a, dim * dim, "a"));
        const dts::SquareMatrix e = dts::mat_exp(m, x);
        std::copy(e.entries().begin(), e.entries().end(), out);
    });
}

// ---------------------------------------------------------------- affine

dts_status dts_affine_create(size_t d, double gamma0, const double* gamma, const double* b, const double* beta,
                             dts_affine_model** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        dts::AffineParams p{.d = d,
                            .gamma0 = gamma0,
                            .gamma = copy_of(gamma, d, "gamma"),
                            .b = copy_of(b, d, "b"),
                            .beta = copy_of(beta, d * d, "beta")};
        auto g = dts::build_generator(p);
        *out = new dts_affine_model{std::move(p), std::move(g)};
    });
}

void dts_affine_destroy(dts_affine_model* model) { delete model; }

size_t dts_affine_dim(const dts_affine_model* model) { return model ? model->params.d : 0; }

dts_status dts_affine_generator(const dts_affine_model* model, double* a_out, double* gamma_bar_out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    const auto& g = model->generator;
    if (a_out) std::copy(g.a.entries().begin(), g.a.entries().end(), a_out);
    if (gamma_bar_out) std::copy(g.gamma_bar.begin(), g.gamma_bar.end(), gamma_bar_out);
    return DTS_OK;
}

dts_status dts_affine_curve_point(const dts_affine_model* model, double tau, const double* z, dts_curve_point* out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        const dts::ExtendedState s(copy_of(z, model->params.d, "z"));
        *out = to_c(dts::curve_point(model->generator, tau, s));
    });
}

dts_status dts_affine_forward_rate(const dts_affine_model* model, double tau, const double* z, double* out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        const dts::ExtendedState s(copy_of(z, model->params.d, "z"));
        *out = dts::forward_rate(model->generator, tau, s);
    });
}

dts_status dts_affine_phi_bar(const dts_affine_model* model, double x, double* out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        const auto v = dts::phi_bar(model->generator, x);
        std::copy(v.begin(), v.end(), out);
    });
}

dts_status dts_affine_phi_primitive(const dts_affine_model* model, double x, double* out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        const auto v = dts::phi_primitive(model->generator, x);
        std::copy(v.begin(), v.end(), out);
    });
}

dts_status dts_affine_quadratic_drift(const dts_affine_model* model, const double* z, double* out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        const auto v = dts::quadratic_drift(model->params, copy_of(z, model->params.d, "z"));
        std::copy(v.begin(), v.end(), out);
    });
}

// ------------------------------------------------------- simplex factors

dts_status dts_simplex_create(size_t d, const double* kappa, const double* theta, const double* q, double gamma0,
                              dts_simplex_model** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        dts::SimplexFactorParams p{.d = d,
                                   .kappa = copy_of(kappa, d, "kappa"),
                                   .theta = copy_of(theta, d, "theta"),
                                   .q = copy_of(q, d, "q"),
                                   .gamma0 = gamma0};
        p.validate();
        *out = new dts_simplex_model{std::move(p)};
    });
}

void dts_simplex_destroy(dts_simplex_model* model) { delete model; }

size_t dts_simplex_dim(const dts_simplex_model* model) { return model ? model->params.d : 0; }

dts_status dts_simplex_to_affine(const dts_simplex_model* model, dts_affine_model** out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto p = dts::to_affine_params(model->params);
        auto g = dts::build_generator(p);
        *out = new dts_affine_model{std::move(p), std::move(g)};
    });
}

dts_status dts_g_forward(size_t d, const double* u, double* z_out) {
    return guarded([&] {
        require(z_out, "z_out");
        const auto z = dts::g_forward(copy_of(u, d, "u"));
        std::copy(z.begin(), z.end(), z_out);
    });
}

dts_status dts_g_inverse(size_t d, const double* z, double* u_out) {
    return guarded([&] {
        require(u_out, "u_out");
        const auto u = dts::g_inverse(copy_of(z, d, "z"));
        std::copy(u.begin(), u.end(), u_out);
    });
}

dts_status dts_simulate_u(const dts_simplex_model* model, const double* u0, const dts_sim_settings* s,
                          dts_path_bundle** out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto b = dts::simulate_u(model->params, copy_of(u0, model->params.d, "u0"), to_settings(s));
        *out = new dts_path_bundle{std::move(b)};
    });
}

dts_status dts_simulate_z(const dts_simplex_model* model, const double* z0, const dts_sim_settings* s,
                          dts_path_bundle** out) {
    if (!model) return fail(DTS_ERR_NULL_HANDLE, "model is NULL");
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto b = dts::simulate_z(model->params, copy_of(z0, model->params.d, "z0"), to_settings(s));
        *out = new dts_path_bundle{std::move(b)};
    });
}

dts_status dts_simulate_toy_rate(double theta, double nu, double r0, const dts_sim_settings* s,
                                 dts_path_bundle** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        auto b = dts::simulate_toy_rate(dts::ToyParams{theta, nu}, r0, to_settings(s));
        *out = new dts_path_bundle{std::move(b)};
    });
}

void dts_bundle_destroy(dts_path_bundle* bundle) { delete bundle; }
size_t dts_bundle_dim(const dts_path_bundle* b) { return b ? b->bundle.dim() : 0; }
size_t dts_bundle_n_paths(const dts_path_bundle* b) { return b ? b->bundle.n_paths() : 0; }
size_t dts_bundle_n_records(const dts_path_bundle* b) { return b ? b->bundle.n_records() : 0; }

double dts_bundle_record_time(const dts_path_bundle* b, size_t rec) {
    if (!b || rec >= b->bundle.n_records()) return std::numeric_limits<double>::quiet_NaN();
    return b->bundle.record_time(rec);
}

const double* dts_bundle_state(const dts_path_bundle* b, size_t path, size_t rec) {
    if (!b || path >= b->bundle.n_paths() || rec >= b->bundle.n_records()) return nullptr;
    return b->bundle.state(path, rec).data();
}

uint64_t dts_bundle_clamp_events(const dts_path_bundle* b, size_t path) {
    if (!b || path >= b->bundle.n_paths()) return 0;
    return b->bundle.clamp_events(path);
}

double dts_bundle_clamp_fraction(const dts_path_bundle* b) { return b ? b->bundle.clamp_fraction() : 0.0; }

// ------------------------------------------------------------------ toy

dts_status dts_toy_curve_point(double theta, double r, double tau, dts_curve_point* out, int* in_domain) {
    return guarded([&] {
        require(out, "out");
        const dts::ToyParams p{theta, 0.0};
        dts::CurvePoint pt;
        pt.tau = tau;
        pt.h = dts::toy_h(p, r, tau);
        pt.discount = dts::toy_discount(p, r, tau);
        pt.bond = 1.0 - pt.discount;
        pt.forward = pt.bond > 1e-300 ? pt.h / pt.bond : std::numeric_limits<double>::quiet_NaN();
        pt.short_rate = r;
        *out = to_c(pt);
        if (in_domain) *in_domain = dts::toy_in_domain(p, r) ? 1 : 0;
    });
}

// ------------------------------------------------------------------ grid

dts_status dts_grid_simulate(size_t n_nodes, const double* maturities, const double* h0,
                             const dts_grid_options* options, const dts_sim_settings* s, dts_grid_ensemble** out) {
    return guarded([&] {
        require(out, "out");
        require(options, "options");
        *out = nullptr;
        dts::CurveGrid initial{0.0, copy_of(maturities, n_nodes, "maturities"), copy_of(h0, n_nodes, "h0")};
        const dts::VolSpec vol = to_vol(options->vol_kind, options->n_factors, options->vol_level);
        dts::GridOptions opt;
        opt.scheme = options->scheme == DTS_SCHEME_EULER ? dts::GridScheme::euler : dts::GridScheme::discount_flow;
        opt.drift = options->drift == DTS_DRIFT_ZERO ? dts::GridDrift::zero : dts::GridDrift::arbitrage_free;
        if (options->h_max > 0.0) opt.h_max = options->h_max;
        if (options->market_price_of_risk)
            opt.market_price_of_risk = copy_of(options->market_price_of_risk, options->n_factors, "mpr");
        auto ens = dts::simulate_grid(initial, vol, opt, to_settings(s));
        *out = new dts_grid_ensemble{std::move(ens)};
    });
}

void dts_grid_destroy(dts_grid_ensemble* e) { delete e; }
size_t dts_grid_n_paths(const dts_grid_ensemble* e) { return e ? e->ensemble.n_paths() : 0; }
size_t dts_grid_n_nodes(const dts_grid_ensemble* e) { return e ? e->ensemble.n_nodes() : 0; }
size_t dts_grid_n_records(const dts_grid_ensemble* e) { return e ? e->ensemble.n_records() : 0; }

double dts_grid_record_time(const dts_grid_ensemble* e, size_t rec) {
    if (!e || rec >= e->ensemble.n_records()) return std::numeric_limits<double>::quiet_NaN();
    return e->ensemble.record_time(rec);
}

const double* dts_grid_maturities(const dts_grid_ensemble* e) { return e ? e->ensemble.maturities().data() : nullptr; }

const double* dts_grid_curve(const dts_grid_ensemble* e, size_t path, size_t rec) {
    if (!e || path >= e->ensemble.n_paths() || rec >= e->ensemble.n_records()) return nullptr;
    return e->ensemble.curve(path, rec).data();
}

size_t dts_grid_n_explosions(const dts_grid_ensemble* e) { return e ? e->ensemble.explosions().size() : 0; }

dts_status dts_grid_explosion(const dts_grid_ensemble* e, size_t index, size_t* path, double* time) {
    if (!e) return fail(DTS_ERR_NULL_HANDLE, "ensemble is NULL");
    if (index >= e->ensemble.explosions().size()) return fail(DTS_ERR_INVALID_ARGUMENT, "explosion index out of range");
    const auto& rec = e->ensemble.explosions()[index];
    if (path) *path = rec.path;
    if (time) *time = rec.time;
    return DTS_OK;
}

dts_status dts_spde_flow_sampled(size_t n_nodes, const double* maturities, const double* psi0, double t, double x,
                                 double* out) {
    return guarded([&] {
        require(out, "out");
        const dts::CurveGrid c{0.0, copy_of(maturities, n_nodes, "maturities"), copy_of(psi0, n_nodes, "psi0")};
        *out = dts::spde_flow(c, t, x);
    });
}

dts_status dts_spde_flow_exponential(double level, double decay, double t, double x, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = dts::spde_flow(dts::exponential_curve(level, decay), t, x);
    });
}

dts_status dts_critical_time_sampled(size_t n_nodes, const double* maturities, const double* psi0, double horizon,
                                     double* out) {
    return guarded([&] {
        require(out, "out");
        const dts::CurveGrid c{0.0, copy_of(maturities, n_nodes, "maturities"), copy_of(psi0, n_nodes, "psi0")};
        *out = dts::critical_time(c, horizon);
    });
}

dts_status dts_bond_return_vol(size_t n_nodes, const double* maturities, const double* h, double t,
                               dts_vol_kind vol_kind, size_t n_factors, const double* vol_level, double maturity,
                               double* out) {
    return guarded([&] {
        require(out, "out");
        const dts::CurveGrid c{t, copy_of(maturities, n_nodes, "maturities"), copy_of(h, n_nodes, "h")};
        const auto v = dts::bond_return_vol(c, to_vol(vol_kind, n_factors, vol_level), maturity);
        std::copy(v.begin(), v.end(), out);
    });
}

// ------------------------------------------------------------ validation

dts_status dts_report_set_create(dts_report_set** out) {
    return guarded([&] {
        require(out, "out");
        *out = new dts_report_set{};
    });
}

void dts_report_set_destroy(dts_report_set* set) { delete set; }
size_t dts_report_set_size(const dts_report_set* set) { return set ? set->reports.size() : 0; }

dts_status dts_report_set_get(const dts_report_set* set, size_t index, dts_report* out) {
    if (!set) return fail(DTS_ERR_NULL_HANDLE, "report set is NULL");
    if (!out) return fail(DTS_ERR_INVALID_ARGUMENT, "out is NULL");
    if (index >= set->reports.size()) return fail(DTS_ERR_INVALID_ARGUMENT, "report index out of range");
    const auto& r = set->reports[index];
    *out = dts_report{r.check_name.c_str(), r.estimate, r.reference, r.std_error, r.tolerance_multiplier,
                      r.abs_tolerance, r.passed ? 1 : 0, r.n_paths, r.runtime, r.detail.c_str()};
    return DTS_OK;
}

int dts_report_set_all_passed(const dts_report_set* set) { return set && dts::all_passed(set->reports) ? 1 : 0; }

const char* dts_report_set_json(dts_report_set* set, int include_runtime) {
    if (!set) return "";
    set->rendered = dts::reports_to_json(set->reports, include_runtime != 0);
    return set->rendered.c_str();
}

const char* dts_report_set_table(dts_report_set* set) {
    if (!set) return "";
    set->rendered = dts::reports_to_table(set->reports);
    return set->rendered.c_str();
}

dts_status dts_check_pricing(dts_report_set* set, const dts_simplex_model* model, const double* z0, double maturity,
                             const dts_mc_settings* mc) {
    if (!set || !model) return fail(DTS_ERR_NULL_HANDLE, "report set or model is NULL");
    return guarded([&] {
        const auto battery = dts::pricing_battery(factor_model(model, z0), maturity, to_mc(mc));
        for (auto& r : battery.all()) set->reports.push_back(r);
    });
}

dts_status dts_check_gains(dts_report_set* set, const dts_simplex_model* model, const double* z0, double maturity,
                           const dts_mc_settings* mc) {
    if (!set || !model) return fail(DTS_ERR_NULL_HANDLE, "report set or model is NULL");
    return guarded([&] {
        for (auto& r : dts::gains_martingale_check(factor_model(model, z0), maturity, to_mc(mc)))
            set->reports.push_back(std::move(r));
    });
}

dts_status dts_check_drift(dts_report_set* set, const dts_grid_ensemble* ensemble, size_t n_points,
                           double tolerance_multiplier) {
    if (!set || !ensemble) return fail(DTS_ERR_NULL_HANDLE, "report set or ensemble is NULL");
    return guarded([&] {
        const auto pts = dts::default_drift_points(ensemble->ensemble, n_points);
        for (auto& r : dts::drift_condition_check(ensemble->ensemble, pts,
                                                  tolerance_multiplier > 0.0 ? tolerance_multiplier : 3.0))
            set->reports.push_back(std::move(r));
    });
}

dts_status dts_check_positivity_grid(dts_report_set* set, const dts_grid_ensemble* ensemble) {
    if (!set || !ensemble) return fail(DTS_ERR_NULL_HANDLE, "report set or ensemble is NULL");
    return guarded([&] { set->reports.push_back(dts::positivity_scan(ensemble->ensemble)); });
}

dts_status dts_check_positivity_affine(dts_report_set* set, const dts_simplex_model* model,
                                       const dts_path_bundle* z_paths, double horizon, double dtau) {
    if (!set || !model || !z_paths) return fail(DTS_ERR_NULL_HANDLE, "report set, model or paths is NULL");
    return guarded(
        [&] { set->reports.push_back(dts::positivity_scan(model->params, z_paths->bundle, horizon, dtau)); });
}

}  // extern "C"
