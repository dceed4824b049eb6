#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "discount_ts/affine.hpp"
#include "discount_ts/numerics.hpp"

namespace dts {

/// Parameters of the nonnegative diffusion
///     dU_i = (kappa_i U_i + theta_i V) dt + q_i sqrt(U_i V) dW_i,  V = 1 + sum_j U_j,
/// whose image Z = G(U) lives in the simplex {z >= 0, sum z < 1}.
struct SimplexFactorParams {
    std::size_t d = 1;
    std::vector<double> kappa;
    std::vector<double> theta;  // >= 0
    std::vector<double> q;      // >= 0
    double gamma0 = 0.0;

    void validate() const;
    double theta_sum() const;
    bool deterministic() const;
};

/// Time grid and seed shared by all path simulators.
struct SimSettings {
    double dt = 1e-3;
    std::size_t n_steps = 0;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    // Store every k-th step (the final step is always stored).
    std::size_t record_stride = 1;

    void validate() const;
};

/// Simulated paths, stored at the recorded steps.
class PathBundle {
   public:
    PathBundle(const SimSettings& settings, std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t n_paths() const noexcept { return settings_.n_paths; }
    std::size_t n_steps() const noexcept { return settings_.n_steps; }
    double dt() const noexcept { return settings_.dt; }
    std::uint64_t seed() const noexcept { return settings_.seed; }

    std::size_t n_records() const noexcept { return record_steps_.size(); }
    std::size_t record_step(std::size_t rec) const { return record_steps_.at(rec); }
    double record_time(std::size_t rec) const { return static_cast<double>(record_step(rec)) * dt(); }

    std::span<const double> state(std::size_t path, std::size_t rec) const;
    std::span<double> state(std::size_t path, std::size_t rec);
    std::span<const double> terminal(std::size_t path) const { return state(path, n_records() - 1); }

    /// Number of steps on a path where the boundary projection changed the state.
    std::uint64_t clamp_events(std::size_t path) const { return clamp_events_.at(path); }
    std::uint64_t& clamp_events(std::size_t path) { return clamp_events_.at(path); }
    double clamp_fraction() const;

    // Index of rec for which record_step(rec) == step, or npos.
    std::size_t record_of_step(std::size_t step) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

   private:
    SimSettings settings_;
    std::size_t dim_;
    std::vector<std::size_t> record_steps_;
    std::vector<double> states_;
    std::vector<std::uint64_t> clamp_events_;
};

/// G(u) = u / (1 + sum u). u >= 0.
std::vector<double> g_forward(std::span<const double> u);

/// G^{-1}(z) = z / (1 - sum z). Throws BoundaryError unless 1 - sum z > 1e-15.
std::vector<double> g_inverse(std::span<const double> z);

/// Euler step of the U-process with full truncation. Returns true when the
/// post-step clamp at 0 changed the state.
class UStepper {
   public:
    UStepper(const SimplexFactorParams& p, double dt);
    bool step(std::span<double> u, NormalStream& normals);

   private:
    const SimplexFactorParams& p_;
    double dt_;
    double sqrt_dt_;
    std::vector<double> increments_;
};

/// Euler step of the Z-process
///     dZ_i = (theta_i + (kappa_i - q_i^2 - theta_V) Z_i + Z_i sum_j (q_j^2 - kappa_j) Z_j) dt
///            + q_i sqrt(Z_i) dW_i - Z_i sum_j q_j sqrt(Z_j) dW_j,
/// the Ito image of U under G. The drift is tangent to the face sum z = 1.
/// Square-root arguments are clamped at 0 and the new state is projected
/// onto the closed simplex. Returns true when the projection
/// changed the state.
class ZStepper {
   public:
    ZStepper(const SimplexFactorParams& p, double dt);
    bool step(std::span<double> z, NormalStream& normals);

   private:
    const SimplexFactorParams& p_;
    double dt_;
    double sqrt_dt_;
    double theta_sum_;
    std::vector<double> noise_;
};

/// Clamps at 0, then rescales to sum 1 - 1e-12 if sum z > 1. Returns true if z changed.
bool project_to_simplex(std::span<double> z);

PathBundle simulate_u(const SimplexFactorParams& p, std::span<const double> u0, const SimSettings& s);
PathBundle simulate_z(const SimplexFactorParams& p, std::span<const double> z0, const SimSettings& s);

/// Affine coefficients whose quadratic drift equals the Z-process drift:
/// b_i = theta_i, beta_ij = delta_ij (kappa_i - q_i^2 - theta_V),
/// gamma_j = q_j^2 - kappa_j.
AffineParams to_affine_params(const SimplexFactorParams& p);

}  // namespace dts
