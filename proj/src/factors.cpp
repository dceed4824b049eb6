#include "discount_ts/factors.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "discount_ts/errors.hpp"

namespace dts {

void SimplexFactorParams::validate() const {
    if (d == 0) throw InvalidArgument("SimplexFactorParams: d must be >= 1");
    if (kappa.size() != d || theta.size() != d || q.size() != d)
        throw InvalidArgument("SimplexFactorParams: kappa, theta, q must have length " + std::to_string(d));
    for (std::size_t i = 0; i < d; ++i) {
        if (!std::isfinite(kappa[i]) || !std::isfinite(theta[i]) || !std::isfinite(q[i]))
            throw InvalidArgument("SimplexFactorParams: non-finite parameter");
        if (theta[i] < 0.0 || q[i] < 0.0)
            throw InvalidArgument("SimplexFactorParams: theta and q must be nonnegative");
    }
    if (!std::isfinite(gamma0)) throw InvalidArgument("SimplexFactorParams: non-finite gamma0");
}

double SimplexFactorParams::theta_sum() const { return std::accumulate(theta.begin(), theta.end(), 0.0); }

bool SimplexFactorParams::deterministic() const {
    return std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; });
}

void SimSettings::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("SimSettings: dt must be positive");
    if (n_paths == 0) throw InvalidArgument("SimSettings: n_paths must be positive");
    if (record_stride == 0) throw InvalidArgument("SimSettings: record_stride must be positive");
}

// ---------------------------------------------------------------------------

PathBundle::PathBundle(const SimSettings& settings, std::size_t dim)
    : settings_(settings), dim_(dim), clamp_events_(settings.n_paths, 0) {
    settings_.validate();
    for (std::size_t k = 0; k <= settings_.n_steps; k += settings_.record_stride) record_steps_.push_back(k);
    if (record_steps_.back() != settings_.n_steps) record_steps_.push_back(settings_.n_steps);
    states_.assign(settings_.n_paths * record_steps_.size() * dim_, 0.0);
}

std::span<const double> PathBundle::state(std::size_t path, std::size_t rec) const {
    if (path >= n_paths() || rec >= n_records()) throw InvalidArgument("PathBundle: index out of range");
    return {states_.data() + (path * n_records() + rec) * dim_, dim_};
}

std::span<double> PathBundle::state(std::size_t path, std::size_t rec) {
    if (path >= n_paths() || rec >= n_records()) throw InvalidArgument("PathBundle: index out of range");
    return {states_.data() + (path * n_records() + rec) * dim_, dim_};
}

double PathBundle::clamp_fraction() const {
    if (n_steps() == 0) return 0.0;
    const auto total = std::accumulate(clamp_events_.begin(), clamp_events_.end(), std::uint64_t{0});
    return static_cast<double>(total) / (static_cast<double>(n_steps()) * static_cast<double>(n_paths()));
}

std::size_t PathBundle::record_of_step(std::size_t step) const {
    auto it = std::lower_bound(record_steps_.begin(), record_steps_.end(), step);
    if (it == record_steps_.end() || *it != step) return npos;
    return static_cast<std::size_t>(it - record_steps_.begin());
}

// ---------------------------------------------------------------------------

std::vector<double> g_forward(std::span<const double> u) {
    double v = 1.0;
    for (double ui : u) {
        if (!(ui >= 0.0) || !std::isfinite(ui)) throw InvalidArgument("g_forward: u must be finite and >= 0");
        v += ui;
    }
    std::vector<double> z(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) z[i] = u[i] / v;
    return z;
}

std::vector<double> g_inverse(std::span<const double> z) {
    double s = 0.0;
    for (double zi : z) {
        if (!(zi >= 0.0) || !std::isfinite(zi)) throw InvalidArgument("g_inverse: z must be finite and >= 0");
        s += zi;
    }
    // Within a few ulps of the face the inverse is pure round-off.
    const double gap = 1.0 - s;
    if (!(gap > 1e-15)) throw BoundaryError("g_inverse: sum(z) = " + std::to_string(s) + " is not below 1");
    std::vector<double> u(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) u[i] = z[i] / gap;
    return u;
}

bool project_to_simplex(std::span<double> z) {
    bool changed = false;
    double s = 0.0;
    for (double& zi : z) {
        if (zi < 0.0) {
            zi = 0.0;
            changed = true;
        }
        s += zi;
    }
    if (s > 1.0) {
        const double scale = (1.0 - 1e-12) / s;
        for (double& zi : z) zi *= scale;
        changed = true;
    }
    return changed;
}

// ---------------------------------------------------------------------------

UStepper::UStepper(const SimplexFactorParams& p, double dt)
    : p_(p), dt_(dt), sqrt_dt_(std::sqrt(dt)), increments_(p.d) {}

bool UStepper::step(std::span<double> u, NormalStream& normals) {
    const std::size_t d = p_.d;
    double v = 1.0;
    for (std::size_t i = 0; i < d; ++i) v += u[i];
    for (std::size_t i = 0; i < d; ++i) {
        const double dw = normals.next() * sqrt_dt_;
        const double drift = p_.kappa[i] * u[i] + p_.theta[i] * v;
        const double diff = p_.q[i] * std::sqrt(std::max(u[i] * v, 0.0));
        increments_[i] = drift * dt_ + diff * dw;
    }
    bool clamped = false;
    for (std::size_t i = 0; i < d; ++i) {
        u[i] += increments_[i];
        if (u[i] < 0.0) {
            u[i] = 0.0;
            clamped = true;
        }
    }
    return clamped;
}

ZStepper::ZStepper(const SimplexFactorParams& p, double dt)
    : p_(p), dt_(dt), sqrt_dt_(std::sqrt(dt)), theta_sum_(p.theta_sum()), noise_(p.d) {}

bool ZStepper::step(std::span<double> z, NormalStream& normals) {
    const std::size_t d = p_.d;
    // quad = sum_j (q_j^2 - kappa_j) z_j ; shock_j = q_j sqrt(z_j) dW_j
    double quad = 0.0;
    double shock_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double qj = p_.q[j];
        quad += (qj * qj - p_.kappa[j]) * z[j];
        const double dw = normals.next() * sqrt_dt_;
        noise_[j] = qj * std::sqrt(std::max(z[j], 0.0)) * dw;
        shock_sum += noise_[j];
    }
    for (std::size_t i = 0; i < d; ++i) {
        const double qi = p_.q[i];
        const double drift = p_.theta[i] + (-theta_sum_ + p_.kappa[i] - qi * qi) * z[i] + z[i] * quad;
        // q_i (1 - z_i) sqrt(z_i) dW_i - z_i sum_{j != i} q_j sqrt(z_j) dW_j
        const double diffusion = noise_[i] - z[i] * shock_sum;
        noise_[i] = drift * dt_ + diffusion;
    }
    for (std::size_t i = 0; i < d; ++i) z[i] += noise_[i];
    return project_to_simplex(z);
}

namespace {

template <class Stepper>
void run_paths(const SimplexFactorParams& p, std::span<const double> x0, const SimSettings& s,
               PathBundle& bundle) {
    parallel_for(s.n_paths, [&](std::size_t path) {
        Stepper stepper(p, s.dt);
        NormalStream normals({s.seed, path});
        std::vector<double> x(x0.begin(), x0.end());
        std::size_t rec = 0;
        auto store = [&](std::size_t step) {
            if (rec < bundle.n_records() && bundle.record_step(rec) == step) {
                auto out = bundle.state(path, rec);
                std::copy(x.begin(), x.end(), out.begin());
                ++rec;
            }
        };
        store(0);
        std::uint64_t clamps = 0;
        for (std::size_t k = 1; k <= s.n_steps; ++k) {
            if (stepper.step(x, normals)) ++clamps;
            store(k);
        }
        bundle.clamp_events(path) = clamps;
    });
}

}  // namespace

PathBundle simulate_u(const SimplexFactorParams& p, std::span<const double> u0, const SimSettings& s) {
    p.validate();
    s.validate();
    if (u0.size() != p.d) throw InvalidArgument("simulate_u: u0 has wrong dimension");
    for (double v : u0)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("simulate_u: u0 must be finite and >= 0");
    PathBundle bundle(s, p.d);
    run_paths<UStepper>(p, u0, s, bundle);
    return bundle;
}

PathBundle simulate_z(const SimplexFactorParams& p, std::span<const double> z0, const SimSettings& s) {
    p.validate();
    s.validate();
    if (z0.size() != p.d) throw InvalidArgument("simulate_z: z0 has wrong dimension");
    double sum = 0.0;
    for (double v : z0) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("simulate_z: z0 must be finite and >= 0");
        sum += v;
    }
    if (!(sum < 1.0)) throw InvalidArgument("simulate_z: z0 must satisfy sum(z0) < 1");
    PathBundle bundle(s, p.d);
    run_paths<ZStepper>(p, z0, s, bundle);
    return bundle;
}

AffineParams to_affine_params(const SimplexFactorParams& p) {
    p.validate();
    const std::size_t d = p.d;
    const double theta_v = p.theta_sum();
    AffineParams a{.d = d, .gamma0 = p.gamma0, .gamma = std::vector<double>(d),
                   .b = p.theta, .beta = std::vector<double>(d * d, 0.0)};
    for (std::size_t i = 0; i < d; ++i) {
        const double qi2 = p.q[i] * p.q[i];
        a.beta[i * d + i] = p.kappa[i] - qi2 - theta_v;
        a.gamma[i] = qi2 - p.kappa[i];
    }
    return a;
}

}  // namespace dts
