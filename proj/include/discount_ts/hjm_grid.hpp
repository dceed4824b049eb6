#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "discount_ts/factors.hpp"
#include "discount_ts/numerics.hpp"

namespace dts {

/// Discount-derivative curve h(t, T_j) sampled on a maturity grid.
struct CurveGrid {
    double t = 0.0;
    std::vector<double> maturities;  // strictly increasing, front() >= t
    std::vector<double> h_values;

    void validate() const;

    /// int_{T_1}^{T_m} h(t, s) ds by trapezoid.
    double discount_integral() const;
};

enum class VolKind { zero, constant, proportional };

/// sigma(t, T) in one of three shapes. For `constant`, sigma_k = level[k];
/// for `proportional`, sigma_k = level[k] * h(t, T). One Brownian factor per
/// level entry.
struct VolSpec {
    VolKind kind = VolKind::zero;
    std::vector<double> level;

    void validate() const;
    std::size_t n_factors() const noexcept { return kind == VolKind::zero ? 0 : level.size(); }
    double sigma(std::size_t factor, double h) const noexcept {
        return kind == VolKind::proportional ? level[factor] * h : level[factor];
    }
};

enum class GridScheme {
    // h <- h / (1 - int_t^{t+dt} h(t,s) ds): exact for zero volatility.
    discount_flow,
    // h <- h + h h(t,t) dt
    euler,
};

enum class GridDrift {
    arbitrage_free,
    // Drift switched off; used to check that the drift test detects a broken model.
    zero,
};

struct GridOptions {
    GridScheme scheme = GridScheme::discount_flow;
    GridDrift drift = GridDrift::arbitrage_free;
    double h_max = 1e3;
    // Empty under the risk-neutral measure; otherwise adds sigma * mpr dt.
    std::vector<double> market_price_of_risk;
};

struct ExplosionRecord {
    std::size_t path = 0;
    std::size_t step = 0;
    double time = 0.0;
};

/// Trajectories of the maturity-grid simulator. Values at expired nodes
/// (T_j < t) and after an explosion are NaN.
class GridEnsemble {
   public:
    GridEnsemble(std::vector<double> maturities, std::vector<std::size_t> diagonal, const SimSettings& s,
                 VolSpec vol, GridOptions options);

    std::span<const double> maturities() const noexcept { return maturities_; }
    std::size_t n_nodes() const noexcept { return maturities_.size(); }
    std::size_t n_paths() const noexcept { return settings_.n_paths; }
    std::size_t n_steps() const noexcept { return settings_.n_steps; }
    double dt() const noexcept { return settings_.dt; }
    std::uint64_t seed() const noexcept { return settings_.seed; }
    const VolSpec& vol() const noexcept { return vol_; }
    const GridOptions& options() const noexcept { return options_; }

    std::size_t n_records() const noexcept { return record_steps_.size(); }
    std::size_t record_step(std::size_t rec) const { return record_steps_.at(rec); }
    double record_time(std::size_t rec) const { return static_cast<double>(record_step(rec)) * dt(); }
    std::size_t record_of_step(std::size_t step) const;

    /// Index of the node T_j = t_k.
    std::size_t diagonal_node(std::size_t step) const { return diagonal_.at(step); }

    std::span<const double> curve(std::size_t path, std::size_t rec) const;
    std::span<double> curve(std::size_t path, std::size_t rec);
    double h(std::size_t path, std::size_t rec, std::size_t node) const { return curve(path, rec)[node]; }

    /// Curve at a recorded step, restricted to live nodes.
    CurveGrid curve_grid(std::size_t path, std::size_t rec) const;

    const std::vector<ExplosionRecord>& explosions() const noexcept { return explosions_; }
    bool exploded(std::size_t path) const;
    void record_explosion(ExplosionRecord rec) { explosions_.push_back(rec); }
    /// Throws ExplosionError for the earliest blow-up, if any.
    void require_no_explosion() const;

   private:
    std::vector<double> maturities_;
    std::vector<std::size_t> diagonal_;
    SimSettings settings_;
    VolSpec vol_;
    GridOptions options_;
    std::vector<std::size_t> record_steps_;
    std::vector<double> values_;
    std::vector<ExplosionRecord> explosions_;
};

/// Simulates dh(t,T) = h(t,T) h(t,t) dt + sigma(t,T) dW on the maturity grid.
/// Every t_k = k dt, k <= n_steps, must be a grid node (within 1e-9), so
/// h(t,t) is read exactly. Paths whose |h| exceeds h_max abort with an
/// explosion record.
GridEnsemble simulate_grid(const CurveGrid& initial, const VolSpec& vol, const GridOptions& options,
                           const SimSettings& settings);

// ---------------------------------------------------------------------------
// Deterministic flow psi_t(x) = psi_0(t + x) / (1 - int_0^t psi_0)
// ---------------------------------------------------------------------------

struct AnalyticCurve {
    std::function<double(double)> psi;
    std::function<double(double)> primitive;  // int_0^x psi
};

/// level * exp(-decay x); decay = 0 gives a constant curve.
AnalyticCurve exponential_curve(double level, double decay);

double spde_flow(const AnalyticCurve& psi0, double t, double x);

/// Sampled initial curve (t = 0): psi_0 by linear interpolation, its
/// integral by trapezoid.
double spde_flow(const CurveGrid& psi0, double t, double x);

/// First time at which int_0^t psi_0 reaches 1 on [0, horizon], or +inf.
double critical_time(const AnalyticCurve& psi0, double horizon);
double critical_time(const CurveGrid& psi0, double horizon);

// ---------------------------------------------------------------------------
// Toy model h(t,T) = exp(-theta (T - t)) r_t
// ---------------------------------------------------------------------------

struct ToyParams {
    double theta = 0.05;
    // Short-rate volatility nu * r (theta - r) / theta^2.
    double nu = 0.0;

    void validate() const;
    double short_rate_vol(double r) const noexcept { return nu * r * (theta - r) / (theta * theta); }
};

bool toy_in_domain(const ToyParams& p, double r) noexcept;
double toy_h(const ToyParams& p, double r, double tau);
double toy_discount(const ToyParams& p, double r, double tau);
double toy_bond(const ToyParams& p, double r, double tau);

/// Euler paths of dr = -(theta - r) r dt + nu r (theta - r)/theta^2 dW,
/// clamped to [0, theta].
PathBundle simulate_toy_rate(const ToyParams& p, double r0, const SimSettings& s);

/// Volatility v(t,T) of T-bond returns, per Brownian factor:
/// P(t,T) v = -int_t^T sigma(t,s) ds. T must be a grid node.
std::vector<double> bond_return_vol(const CurveGrid& grid, const VolSpec& vol, double maturity);

}  // namespace dts
