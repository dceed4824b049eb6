#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "discount_ts/factors.hpp"
#include "discount_ts/hjm_grid.hpp"

namespace dts {

/// Outcome of one check. Stochastic checks pass when
/// |estimate - reference| <= tolerance_multiplier * std_error; deterministic
/// ones use abs_tolerance. The larger of the two bands applies, never less
/// than a round-off floor of 64 eps |reference|.
struct ValidationReport {
    std::string check_name;
    double estimate = 0.0;
    double reference = 0.0;
    double std_error = 0.0;
    double tolerance_multiplier = 3.0;
    double abs_tolerance = 0.0;
    bool passed = false;
    std::size_t n_paths = 0;
    double runtime = 0.0;  // seconds
    std::string detail;

    double band() const noexcept;
    void decide() noexcept;
};

struct McSettings {
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    double tolerance_multiplier = 3.0;
    double abs_tolerance = 0.0;

    void validate() const;
};

/// Factor model driving the Monte Carlo checks: Z follows the simplex
/// process, r = gamma_bar' Z_bar with coefficients from to_affine_params.
struct FactorModel {
    SimplexFactorParams params;
    std::vector<double> z0;

    void validate() const;
};

/// P(0,T) = E[exp(-int_0^T r)].
ValidationReport mc_bond_price(const FactorModel& model, double maturity, const McSettings& mc);
/// h(0,T) = E[exp(-int_0^T r) r_T].
ValidationReport mc_h_value(const FactorModel& model, double maturity, const McSettings& mc);
/// H(0,T) = E[int_0^T exp(-int_0^u r) r_u du].
ValidationReport mc_discount(const FactorModel& model, double maturity, const McSettings& mc);

/// The three pricing identities on one shared set of paths, plus the
/// complementarity of the bond and discount estimates (absolute 2e-3).
struct PricingBattery {
    ValidationReport bond_price;
    ValidationReport h_value;
    ValidationReport discount;
    ValidationReport complementarity;

    std::vector<ValidationReport> all() const { return {bond_price, h_value, discount, complementarity}; }
};

PricingBattery pricing_battery(const FactorModel& model, double maturity, const McSettings& mc);

/// D_t = 1 - exp(-int_0^t r) P(t,T) has mean D_0 at t = T/4, T/2, 3T/4, T.
std::vector<ValidationReport> gains_martingale_check(const FactorModel& model, double maturity,
                                                     const McSettings& mc);

struct DriftPoint {
    std::size_t step = 0;  // increment from t_k to t_{k+1}
    std::size_t node = 0;
};

/// Spread of `count` (step, node) pairs with both endpoints recorded and the
/// node alive at t_{k+1}.
std::vector<DriftPoint> default_drift_points(const GridEnsemble& ensemble, std::size_t count);

/// Empirical one-step drift of h(t, T_j) against h(t,T_j) h(t,t).
/// The standard error is that of the per-path difference.
std::vector<ValidationReport> drift_condition_check(const GridEnsemble& ensemble,
                                                    std::span<const DriftPoint> points,
                                                    double tolerance_multiplier = 3.0);

/// Max over (path, t, T) of int_t^T h(t,s) ds; passes iff it stays below 1
/// and no path exploded.
ValidationReport positivity_scan(const GridEnsemble& ensemble);

/// Same scan for an affine model along simulated factor paths, using the
/// closed-form discount on a maturity lattice 0, dtau, ..., horizon.
ValidationReport positivity_scan(const SimplexFactorParams& params, const PathBundle& z_paths, double horizon,
                                 double dtau);

bool all_passed(std::span<const ValidationReport> reports) noexcept;

/// JSON array of reports. runtime is written as null unless include_runtime.
std::string reports_to_json(std::span<const ValidationReport> reports, bool include_runtime);

/// Aligned plain-text table, one row per report.
std::string reports_to_table(std::span<const ValidationReport> reports);

}  // namespace dts
