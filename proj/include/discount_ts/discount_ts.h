/*
 * C interface to the discount term-structure engine.
 *
 * Objects are opaque handles created by dts_*_create / dts_simulate_* and
 * released by the matching dts_*_destroy. Every fallible call returns a
 * dts_status; on failure dts_last_error() holds a message for the calling
 * thread until its next failing call.
 *
 * Arrays are passed as (pointer, length) with lengths implied by the model
 * dimension where noted. Matrices are row-major.
 */
#ifndef DISCOUNT_TS_H
#define DISCOUNT_TS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DTS_BUILDING_LIBRARY)
#    define DTS_API __declspec(dllexport)
#  else
#    define DTS_API __declspec(dllimport)
#  endif
#else
#  define DTS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dts_status {
    DTS_OK = 0,
    DTS_ERR_INVALID_ARGUMENT = 1,
    DTS_ERR_DEGENERATE_CURVE = 2,
    DTS_ERR_BOUNDARY = 3,
    DTS_ERR_EXPLOSION = 4,
    DTS_ERR_NULL_HANDLE = 5,
    DTS_ERR_INTERNAL = 6
} dts_status;

DTS_API const char* dts_last_error(void);
DTS_API const char* dts_version(void);
DTS_API const char* dts_status_name(dts_status status);

/* Worker thread cap for path simulation; 0 restores the default
 * (DISCOUNT_TS_THREADS if set, else hardware concurrency). */
DTS_API void dts_set_max_threads(unsigned n);
DTS_API unsigned dts_max_threads(void);

/* ---------------------------------------------------------------- numerics */

/* out = e^{A x}; a and out hold dim*dim entries. */
DTS_API dts_status dts_mat_exp(size_t dim, const double* a, double x, double* out);

/* -------------------------------------------------------------- affine */

typedef struct dts_affine_model dts_affine_model;

/* gamma, b: d entries; beta: d*d entries, beta[i*d + j] = beta_ij. */
DTS_API dts_status dts_affine_create(size_t d, double gamma0, const double* gamma, const double* b,
                                     const double* beta, dts_affine_model** out);
DTS_API void dts_affine_destroy(dts_affine_model* model);
DTS_API size_t dts_affine_dim(const dts_affine_model* model);

/* a_out: (d+1)^2 entries, gamma_bar_out: d+1 entries; either may be NULL. */
DTS_API dts_status dts_affine_generator(const dts_affine_model* model, double* a_out, double* gamma_bar_out);

typedef struct dts_curve_point {
    double tau;
    double h;
    double discount;
    double bond;
    double forward; /* NaN when the bond price is not positive */
    double short_rate;
} dts_curve_point;

/* z: the d factor values (the leading 1 of the extended state is implicit). */
DTS_API dts_status dts_affine_curve_point(const dts_affine_model* model, double tau, const double* z,
                                          dts_curve_point* out);
/* DTS_ERR_DEGENERATE_CURVE when the bond price is not positive. */
DTS_API dts_status dts_affine_forward_rate(const dts_affine_model* model, double tau, const double* z,
                                           double* out);
/* out: d+1 entries. */
DTS_API dts_status dts_affine_phi_bar(const dts_affine_model* model, double x, double* out);
DTS_API dts_status dts_affine_phi_primitive(const dts_affine_model* model, double x, double* out);
/* out: d entries. */
DTS_API dts_status dts_affine_quadratic_drift(const dts_affine_model* model, const double* z, double* out);

/* ----------------------------------------------------- simplex factors */

typedef struct dts_simplex_model dts_simplex_model;

DTS_API dts_status dts_simplex_create(size_t d, const double* kappa, const double* theta, const double* q,
                                      double gamma0, dts_simplex_model** out);
DTS_API void dts_simplex_destroy(dts_simplex_model* model);
DTS_API size_t dts_simplex_dim(const dts_simplex_model* model);
DTS_API dts_status dts_simplex_to_affine(const dts_simplex_model* model, dts_affine_model** out);

DTS_API dts_status dts_g_forward(size_t d, const double* u, double* z_out);
/* DTS_ERR_BOUNDARY unless 1 - sum(z) > 1e-15. */
DTS_API dts_status dts_g_inverse(size_t d, const double* z, double* u_out);

typedef struct dts_sim_settings {
    double dt;
    size_t n_steps;
    size_t n_paths;
    uint64_t seed;
    size_t record_stride; /* 0 is treated as 1 */
} dts_sim_settings;

typedef struct dts_path_bundle dts_path_bundle;

DTS_API dts_status dts_simulate_u(const dts_simplex_model* model, const double* u0, const dts_sim_settings* s,
                                  dts_path_bundle** out);
DTS_API dts_status dts_simulate_z(const dts_simplex_model* model, const double* z0, const dts_sim_settings* s,
                                  dts_path_bundle** out);
/* Bounded toy short rate on [0, theta] with volatility nu r (theta - r) / theta^2. */
DTS_API dts_status dts_simulate_toy_rate(double theta, double nu, double r0, const dts_sim_settings* s,
                                         dts_path_bundle** out);

DTS_API void dts_bundle_destroy(dts_path_bundle* bundle);
DTS_API size_t dts_bundle_dim(const dts_path_bundle* bundle);
DTS_API size_t dts_bundle_n_paths(const dts_path_bundle* bundle);
DTS_API size_t dts_bundle_n_records(const dts_path_bundle* bundle);
DTS_API double dts_bundle_record_time(const dts_path_bundle* bundle, size_t rec);
/* Pointer to dim values, valid until the bundle is destroyed; NULL if out of range. */
DTS_API const double* dts_bundle_state(const dts_path_bundle* bundle, size_t path, size_t rec);
DTS_API uint64_t dts_bundle_clamp_events(const dts_path_bundle* bundle, size_t path);
DTS_API double dts_bundle_clamp_fraction(const dts_path_bundle* bundle);

/* ------------------------------------------------------------------ toy */

/* h, discount, bond, forward and short rate of h(t,T) = e^{-theta tau} r.
 * in_domain (may be NULL) is set to 0 when r lies outside [0, theta]; the
 * values are still computed. */
DTS_API dts_status dts_toy_curve_point(double theta, double r, double tau, dts_curve_point* out, int* in_domain);

/* ----------------------------------------------------------- grid model */

typedef enum dts_vol_kind { DTS_VOL_ZERO = 0, DTS_VOL_CONSTANT = 1, DTS_VOL_PROPORTIONAL = 2 } dts_vol_kind;
typedef enum dts_grid_scheme { DTS_SCHEME_DISCOUNT_FLOW = 0, DTS_SCHEME_EULER = 1 } dts_grid_scheme;
typedef enum dts_grid_drift { DTS_DRIFT_ARBITRAGE_FREE = 0, DTS_DRIFT_ZERO = 1 } dts_grid_drift;

typedef struct dts_grid_options {
    dts_vol_kind vol_kind;
    size_t n_factors;                   /* length of vol_level (and mpr) */
    const double* vol_level;
    const double* market_price_of_risk; /* NULL under the risk-neutral measure */
    dts_grid_scheme scheme;
    dts_grid_drift drift;
    double h_max;                       /* <= 0 selects the default 1e3 */
} dts_grid_options;

typedef struct dts_grid_ensemble dts_grid_ensemble;

/* Explosions do not fail the call; inspect dts_grid_n_explosions. */
DTS_API dts_status dts_grid_simulate(size_t n_nodes, const double* maturities, const double* h0,
                                     const dts_grid_options* options, const dts_sim_settings* s,
                                     dts_grid_ensemble** out);
DTS_API void dts_grid_destroy(dts_grid_ensemble* ensemble);
DTS_API size_t dts_grid_n_paths(const dts_grid_ensemble* ensemble);
DTS_API size_t dts_grid_n_nodes(const dts_grid_ensemble* ensemble);
DTS_API size_t dts_grid_n_records(const dts_grid_ensemble* ensemble);
DTS_API double dts_grid_record_time(const dts_grid_ensemble* ensemble, size_t rec);
DTS_API const double* dts_grid_maturities(const dts_grid_ensemble* ensemble);
/* n_nodes values; NaN at expired nodes and after an explosion. */
DTS_API const double* dts_grid_curve(const dts_grid_ensemble* ensemble, size_t path, size_t rec);
DTS_API size_t dts_grid_n_explosions(const dts_grid_ensemble* ensemble);
DTS_API dts_status dts_grid_explosion(const dts_grid_ensemble* ensemble, size_t index, size_t* path, double* time);

/* Deterministic flow psi_t(x) = psi_0(t+x) / (1 - int_0^t psi_0). */
DTS_API dts_status dts_spde_flow_sampled(size_t n_nodes, const double* maturities, const double* psi0, double t,
                                         double x, double* out);
/* psi_0(x) = level e^{-decay x} */
DTS_API dts_status dts_spde_flow_exponential(double level, double decay, double t, double x, double* out);
/* Critical time of the sampled curve on [0, horizon]; +inf if it never explodes. */
DTS_API dts_status dts_critical_time_sampled(size_t n_nodes, const double* maturities, const double* psi0,
                                             double horizon, double* out);

/* out: max(1, n_factors) entries. */
DTS_API dts_status dts_bond_return_vol(size_t n_nodes, const double* maturities, const double* h, double t,
                                       dts_vol_kind vol_kind, size_t n_factors, const double* vol_level,
                                       double maturity, double* out);

/* ----------------------------------------------------------- validation */

typedef struct dts_mc_settings {
    double dt;
    size_t n_paths;
    uint64_t seed;
    double tolerance_multiplier; /* <= 0 selects 3 */
    double abs_tolerance;
} dts_mc_settings;

typedef struct dts_report {
    const char* check_name; /* owned by the report set */
    double estimate;
    double reference;
    double std_error;
    double tolerance_multiplier;
    double abs_tolerance;
    int passed;
    size_t n_paths;
    double runtime;
    const char* detail;
} dts_report;

typedef struct dts_report_set dts_report_set;

DTS_API dts_status dts_report_set_create(dts_report_set** out);
DTS_API void dts_report_set_destroy(dts_report_set* set);
DTS_API size_t dts_report_set_size(const dts_report_set* set);
DTS_API dts_status dts_report_set_get(const dts_report_set* set, size_t index, dts_report* out);
DTS_API int dts_report_set_all_passed(const dts_report_set* set);
/* Rendered text valid until the next render call on the same set. */
DTS_API const char* dts_report_set_json(dts_report_set* set, int include_runtime);
DTS_API const char* dts_report_set_table(dts_report_set* set);

/* mc_bond_price, mc_h_value, mc_discount and their complementarity, on shared paths. */
DTS_API dts_status dts_check_pricing(dts_report_set* set, const dts_simplex_model* model, const double* z0,
                                     double maturity, const dts_mc_settings* mc);
/* Discounted gains increments at T/4, T/2, 3T/4, T. */
DTS_API dts_status dts_check_gains(dts_report_set* set, const dts_simplex_model* model, const double* z0,
                                   double maturity, const dts_mc_settings* mc);
/* n_points sampled (t, T) pairs; tolerance_multiplier <= 0 selects 3. */
DTS_API dts_status dts_check_drift(dts_report_set* set, const dts_grid_ensemble* ensemble, size_t n_points,
                                   double tolerance_multiplier);
DTS_API dts_status dts_check_positivity_grid(dts_report_set* set, const dts_grid_ensemble* ensemble);
DTS_API dts_status dts_check_positivity_affine(dts_report_set* set, const dts_simplex_model* model,
                                               const dts_path_bundle* z_paths, double horizon, double dtau);

#ifdef __cplusplus
}
#endif

#endif /* DISCOUNT_TS_H */
