#include "discount_ts/hjm_grid.hpp"

#include <cmath>
#include <string>

#include "discount_ts/errors.hpp"

namespace dts {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::size_t find_node(std::span<const double> grid, double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x - 1e-9 * std::max(1.0, std::abs(x)));
    if (it != grid.end() && near(*it, x)) return static_cast<std::size_t>(it - grid.begin());
    return static_cast<std::size_t>(-1);
}

// Integral of the sampled curve from maturities[0] to x (linear interpolation
// inside the last cell, i.e. the trapezoid rule on the refined grid).
double sampled_primitive(const CurveGrid& c, double x) {
    const auto& g = c.maturities;
    const auto& v = c.h_values;
    double s = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (g[i] <= x) {
            s += 0.5 * (g[i] - g[i - 1]) * (v[i] + v[i - 1]);
        } else {
            if (x > g[i - 1]) {
                const double vx = v[i - 1] + (x - g[i - 1]) / (g[i] - g[i - 1]) * (v[i] - v[i - 1]);
                s += 0.5 * (x - g[i - 1]) * (v[i - 1] + vx);
            }
            break;
        }
    }
    return s;
}

// Smallest t in [0, horizon] with primitive(t) >= 1, by scanning then bisection.
double first_crossing(const std::function<double(double)>& primitive, double horizon) {
    if (!(horizon > 0.0)) return kInf;
    constexpr int scan = 4096;
    double lo = 0.0;
    for (int i = 1; i <= scan; ++i) {
        const double hi = horizon * i / scan;
        if (primitive(hi) >= 1.0) {
            double a = lo;
            double b = hi;
            for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
                const double m = 0.5 * (a + b);
                (primitive(m) >= 1.0 ? b : a) = m;
            }
            return b;
        }
        lo = hi;
    }
    return kInf;
}

}  // namespace

// ---------------------------------------------------------------------------

void CurveGrid::validate() const {
    if (maturities.empty() || maturities.size() != h_values.size())
        throw InvalidArgument("CurveGrid: maturities and h_values must be non-empty and equally long");
    if (!std::isfinite(t)) throw InvalidArgument("CurveGrid: non-finite time");
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (!std::isfinite(maturities[i]) || !std::isfinite(h_values[i]))
            throw InvalidArgument("CurveGrid: non-finite node");
        if (i > 0 && !(maturities[i] > maturities[i - 1]))
            throw InvalidArgument("CurveGrid: maturities must be strictly increasing");
    }
    if (maturities.front() < t - 1e-12) throw InvalidArgument("CurveGrid: first maturity precedes t");
}

double CurveGrid::discount_integral() const {
    validate();
    if (maturities.size() < 2) return 0.0;
    return trapezoid(maturities, h_values);
}

void VolSpec::validate() const {
    if (kind == VolKind::zero) return;
    if (level.empty()) throw InvalidArgument("VolSpec: constant/proportional volatility needs a level vector");
    for (double v : level)
        if (!std::isfinite(v)) throw InvalidArgument("VolSpec: non-finite level");
}

// ---------------------------------------------------------------------------

GridEnsemble::GridEnsemble(std::vector<double> maturities, std::vector<std::size_t> diagonal,
                           const SimSettings& s, VolSpec vol, GridOptions options)
    : maturities_(std::move(maturities)),
      diagonal_(std::move(diagonal)),
      settings_(s),
      vol_(std::move(vol)),
      options_(std::move(options)) {
    for (std::size_t k = 0; k <= s.n_steps; k += s.record_stride) record_steps_.push_back(k);
    if (record_steps_.back() != s.n_steps) record_steps_.push_back(s.n_steps);
    values_.assign(s.n_paths * record_steps_.size() * maturities_.size(), kNaN);
}

std::size_t GridEnsemble::record_of_step(std::size_t step) const {
    auto it = std::lower_bound(record_steps_.begin(), record_steps_.end(), step);
    if (it == record_steps_.end() || *it != step) return static_cast<std::size_t>(-1);
    return static_cast<std::size_t>(it - record_steps_.begin());
}

std::span<const double> GridEnsemble::curve(std::size_t path, std::size_t rec) const {
    if (path >= n_paths() || rec >= n_records()) throw InvalidArgument("GridEnsemble: index out of range");
    return {values_.data() + (path * n_records() + rec) * n_nodes(), n_nodes()};
}

std::span<double> GridEnsemble::curve(std::size_t path, std::size_t rec) {
    if (path >= n_paths() || rec >= n_records()) throw InvalidArgument("GridEnsemble: index out of range");
    return {values_.data() + (path * n_records() + rec) * n_nodes(), n_nodes()};
}

CurveGrid GridEnsemble::curve_grid(std::size_t path, std::size_t rec) const {
    const std::size_t first = diagonal_node(record_step(rec));
    const auto values = curve(path, rec);
    CurveGrid c;
    c.t = record_time(rec);
    c.maturities.assign(maturities_.begin() + static_cast<std::ptrdiff_t>(first), maturities_.end());
    c.h_values.assign(values.begin() + static_cast<std::ptrdiff_t>(first), values.end());
    return c;
}

bool GridEnsemble::exploded(std::size_t path) const {
    return std::any_of(explosions_.begin(), explosions_.end(), [&](const auto& e) { return e.path == path; });
}

void GridEnsemble::require_no_explosion() const {
    if (explosions_.empty()) return;
    auto first = std::min_element(explosions_.begin(), explosions_.end(),
                                  [](const auto& a, const auto& b) { return a.time < b.time; });
    throw ExplosionError("discount derivative exploded on path " + std::to_string(first->path) +
                             " at t = " + std::to_string(first->time),
                         first->time);
}

GridEnsemble simulate_grid(const CurveGrid& initial, const VolSpec& vol, const GridOptions& options,
                           const SimSettings& settings) {
    initial.validate();
    vol.validate();
    settings.validate();
    if (initial.t != 0.0) throw InvalidArgument("simulate_grid: initial curve must be at t = 0");
    if (!(options.h_max > 0.0)) throw InvalidArgument("simulate_grid: h_max must be positive");
    const std::size_t n_factors = vol.n_factors();
    const auto& mpr = options.market_price_of_risk;
    if (!mpr.empty() && mpr.size() != n_factors)
        throw InvalidArgument("simulate_grid: market price of risk needs one entry per Brownian factor");

    const auto& grid = initial.maturities;
    std::vector<std::size_t> diagonal(settings.n_steps + 1);
    for (std::size_t k = 0; k <= settings.n_steps; ++k) {
        const double t = static_cast<double>(k) * settings.dt;
        diagonal[k] = find_node(grid, t);
        if (diagonal[k] == static_cast<std::size_t>(-1))
            throw InvalidArgument("simulate_grid: time t = " + std::to_string(t) +
                                  " is not a maturity node; dt must divide the maturity lattice");
    }

    GridEnsemble ens(grid, diagonal, settings, vol, options);
    const std::size_t m = grid.size();
    std::vector<ExplosionRecord> blowups(settings.n_paths, ExplosionRecord{0, 0, kNaN});

    parallel_for(settings.n_paths, [&](std::size_t path) {
        NormalStream normals({settings.seed, path});
        std::vector<double> h = initial.h_values;
        std::vector<double> shock(n_factors);
        std::size_t rec = 0;
        auto store = [&](std::size_t step) {
            if (rec < ens.n_records() && ens.record_step(rec) == step) {
                auto out = ens.curve(path, rec);
                const std::size_t first = diagonal[step];
                std::copy(h.begin() + static_cast<std::ptrdiff_t>(first), h.end(),
                          out.begin() + static_cast<std::ptrdiff_t>(first));
                ++rec;
            }
        };
        store(0);

        const double dt = settings.dt;
        const double sqrt_dt = std::sqrt(dt);
        for (std::size_t k = 0; k < settings.n_steps; ++k) {
            const std::size_t now = diagonal[k];
            const std::size_t next = diagonal[k + 1];
            const double r = h[now];
            for (std::size_t f = 0; f < n_factors; ++f) {
                shock[f] = normals.next() * sqrt_dt;
                if (!mpr.empty()) shock[f] += mpr[f] * dt;
            }

            double flow_factor = 1.0;
            if (options.drift == GridDrift::arbitrage_free && options.scheme == GridScheme::discount_flow) {
                double cell = 0.0;
                for (std::size_t j = now + 1; j <= next; ++j)
                    cell += 0.5 * (grid[j] - grid[j - 1]) * (h[j] + h[j - 1]);
                const double p_step = 1.0 - cell;
                if (!(p_step > 0.0)) {
                    blowups[path] = {path, k + 1, static_cast<double>(k + 1) * dt};
                    return;
                }
                flow_factor = 1.0 / p_step;
            }

            bool blew_up = false;
            for (std::size_t j = next; j < m; ++j) {
                const double old = h[j];
                double v = old;
                if (options.drift == GridDrift::arbitrage_free) {
                    v = options.scheme == GridScheme::discount_flow ? old * flow_factor : old + old * r * dt;
                }
                for (std::size_t f = 0; f < n_factors; ++f) v += vol.sigma(f, old) * shock[f];
                h[j] = v;
                if (!std::isfinite(v) || std::abs(v) > options.h_max) blew_up = true;
            }
            for (std::size_t j = now; j < next; ++j) h[j] = kNaN;
            if (blew_up) {
                blowups[path] = {path, k + 1, static_cast<double>(k + 1) * dt};
                return;
            }
            store(k + 1);
        }
    });

    for (const auto& b : blowups)
        if (!std::isnan(b.time)) ens.record_explosion(b);
    return ens;
}

// ---------------------------------------------------------------------------

AnalyticCurve exponential_curve(double level, double decay) {
    if (!std::isfinite(level) || !std::isfinite(decay))
        throw InvalidArgument("exponential_curve: non-finite parameter");
    AnalyticCurve c;
    c.psi = [level, decay](double x) { return level * std::exp(-decay * x); };
    if (decay == 0.0) {
        c.primitive = [level](double x) { return level * x; };
    } else {
        c.primitive = [level, decay](double x) { return -level * std::expm1(-decay * x) / decay; };
    }
    return c;
}

double critical_time(const AnalyticCurve& psi0, double horizon) {
    return first_crossing(psi0.primitive, horizon);
}

double critical_time(const CurveGrid& psi0, double horizon) {
    psi0.validate();
    return first_crossing([&](double t) { return sampled_primitive(psi0, t); },
                          std::min(horizon, psi0.maturities.back()));
}

double spde_flow(const AnalyticCurve& psi0, double t, double x) {
    if (!(t >= 0.0) || !(x >= 0.0)) throw InvalidArgument("spde_flow: t and x must be >= 0");
    const double denom = 1.0 - psi0.primitive(t);
    if (!(denom > 0.0))
        throw ExplosionError("spde_flow: int_0^t psi_0 >= 1, curve exploded", critical_time(psi0, t));
    return psi0.psi(t + x) / denom;
}

double spde_flow(const CurveGrid& psi0, double t, double x) {
    psi0.validate();
    if (psi0.t != 0.0 || psi0.maturities.front() != 0.0)
        throw InvalidArgument("spde_flow: sampled initial curve must start at t = 0, x = 0");
    if (!(t >= 0.0) || !(x >= 0.0)) throw InvalidArgument("spde_flow: t and x must be >= 0");
    const double denom = 1.0 - sampled_primitive(psi0, t);
    if (!(denom > 0.0))
        throw ExplosionError("spde_flow: int_0^t psi_0 >= 1, curve exploded", critical_time(psi0, t));
    // Snap to an exact node when t + x sits on the lattice.
    const double at = t + x;
    const std::size_t node = find_node(psi0.maturities, at);
    const double value = node != static_cast<std::size_t>(-1) ? psi0.h_values[node]
                                                              : lerp(psi0.maturities, psi0.h_values, at);
    return value / denom;
}

// ---------------------------------------------------------------------------

void ToyParams::validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidArgument("ToyParams: theta must be positive");
    if (!std::isfinite(nu)) throw InvalidArgument("ToyParams: non-finite nu");
}

bool toy_in_domain(const ToyParams& p, double r) noexcept { return r >= 0.0 && r <= p.theta; }

double toy_h(const ToyParams& p, double r, double tau) {
    p.validate();
    if (!(tau >= 0.0)) throw InvalidArgument("toy_h: tau must be >= 0");
    return std::exp(-p.theta * tau) * r;
}

double toy_discount(const ToyParams& p, double r, double tau) {
    p.validate();
    if (!(tau >= 0.0)) throw InvalidArgument("toy_discount: tau must be >= 0");
    return -std::expm1(-p.theta * tau) * r / p.theta;
}

double toy_bond(const ToyParams& p, double r, double tau) { return 1.0 - toy_discount(p, r, tau); }

PathBundle simulate_toy_rate(const ToyParams& p, double r0, const SimSettings& s) {
    p.validate();
    s.validate();
    if (!toy_in_domain(p, r0)) throw InvalidArgument("simulate_toy_rate: r0 must lie in [0, theta]");
    PathBundle bundle(s, 1);
    parallel_for(s.n_paths, [&](std::size_t path) {
        NormalStream normals({s.seed, path});
        const double sqrt_dt = std::sqrt(s.dt);
        double r = r0;
        std::size_t rec = 0;
        auto store = [&](std::size_t step) {
            if (rec < bundle.n_records() && bundle.record_step(rec) == step) {
                bundle.state(path, rec)[0] = r;
                ++rec;
            }
        };
        store(0);
        std::uint64_t clamps = 0;
        for (std::size_t k = 1; k <= s.n_steps; ++k) {
            const double dw = normals.next() * sqrt_dt;
            r += -(p.theta - r) * r * s.dt + p.short_rate_vol(r) * dw;
            if (r < 0.0 || r > p.theta) {
                r = std::clamp(r, 0.0, p.theta);
                ++clamps;
            }
            store(k);
        }
        bundle.clamp_events(path) = clamps;
    });
    return bundle;
}

std::vector<double> bond_return_vol(const CurveGrid& grid, const VolSpec& vol, double maturity) {
    grid.validate();
    vol.validate();
    const std::size_t node = find_node(grid.maturities, maturity);
    if (node == static_cast<std::size_t>(-1))
        throw InvalidArgument("bond_return_vol: maturity " + std::to_string(maturity) + " is not a grid node");
    std::vector<double> out(std::max<std::size_t>(vol.n_factors(), 1), 0.0);
    if (node == 0 || vol.kind == VolKind::zero) return out;

    const std::span<const double> g(grid.maturities.data(), node + 1);
    const std::span<const double> h(grid.h_values.data(), node + 1);
    const double bond = 1.0 - trapezoid(g, h);
    if (!(bond > 0.0)) throw DegenerateCurve("bond_return_vol: bond price is not positive");
    std::vector<double> sig(node + 1);
    for (std::size_t f = 0; f < vol.n_factors(); ++f) {
        for (std::size_t j = 0; j <= node; ++j) sig[j] = vol.sigma(f, h[j]);
        out[f] = -trapezoid(g, sig) / bond;
    }
    return out;
}

}  // namespace dts
