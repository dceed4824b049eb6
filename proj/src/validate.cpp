#include "discount_ts/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "discount_ts/errors.hpp"
#include "json.hpp"

namespace dts {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

// Two-pass mean / standard error in index order; NaN samples are skipped.
// The mean uses Neumaier summation so constant samples average to themselves.
SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    double sum = 0.0, carry = 0.0;
    for (double x : xs) {
        if (std::isnan(x)) continue;
        const double t = sum + x;
        carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
        ++s.n;
    }
    if (s.n == 0) return s;
    s.mean = (sum + carry) / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double ss = 0.0;
    for (double x : xs) {
        if (std::isnan(x)) continue;
        ss += (x - s.mean) * (x - s.mean);
    }
    s.std_error = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
    return s;
}

// exp(-x) for the small per-step increments; falls back to std::exp.
inline double exp_neg(double x) {
    if (std::abs(x) < 1e-3) return 1.0 - x * (1.0 - x * (0.5 - x * (1.0 / 6.0 - x / 24.0)));
    return std::exp(-x);
}

struct TimeLattice {
    std::size_t n_steps = 0;
    double dt = 0.0;
};

TimeLattice lattice_for(double maturity, double dt) {
    if (!(maturity >= 0.0) || !std::isfinite(maturity))
        throw InvalidArgument("maturity must be finite and >= 0");
    if (maturity == 0.0) return {0, dt};
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(maturity / dt)));
    return {n, maturity / static_cast<double>(n)};
}

// Simulates Z paths and calls visit(path, step, z, r, int_0^t r) at every step.
template <class Visit>
void for_each_rate_path(const FactorModel& model, const AffineParams& affine, const TimeLattice& lat,
                        const McSettings& mc, Visit&& visit) {
    parallel_for(mc.n_paths, [&](std::size_t path) {
        ZStepper stepper(model.params, lat.dt);
        NormalStream normals({mc.seed, path});
        std::vector<double> z = model.z0;
        auto rate = [&] { return affine.gamma0 + dot(affine.gamma, z); };
        double r = rate();
        double integral = 0.0;
        visit(path, std::size_t{0}, std::span<const double>(z), r, integral);
        for (std::size_t k = 1; k <= lat.n_steps; ++k) {
            stepper.step(z, normals);
            const double r_next = rate();
            integral += 0.5 * (r + r_next) * lat.dt;
            r = r_next;
            visit(path, k, std::span<const double>(z), r, integral);
        }
    });
}

ValidationReport make_report(std::string name, const SampleStats& st, double reference, const McSettings& mc,
                             Clock::time_point start) {
    ValidationReport rep;
    rep.check_name = std::move(name);
    rep.estimate = st.mean;
    rep.reference = reference;
    rep.std_error = st.std_error;
    rep.tolerance_multiplier = mc.tolerance_multiplier;
    rep.abs_tolerance = mc.abs_tolerance;
    rep.n_paths = st.n;
    rep.runtime = seconds_since(start);
    rep.decide();
    return rep;
}

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

double ValidationReport::band() const noexcept {
    return std::max(tolerance_multiplier * std_error, abs_tolerance);
}

void ValidationReport::decide() noexcept {
    const double diff = std::abs(estimate - reference);
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(reference);
    passed = std::isfinite(diff) && diff <= std::max(band(), roundoff);
}

void McSettings::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("McSettings: dt must be positive");
    if (n_paths == 0) throw InvalidArgument("McSettings: n_paths must be positive");
    if (!(tolerance_multiplier > 0.0)) throw InvalidArgument("McSettings: tolerance multiplier must be positive");
    if (!(abs_tolerance >= 0.0)) throw InvalidArgument("McSettings: abs_tolerance must be >= 0");
}

void FactorModel::validate() const {
    params.validate();
    if (z0.size() != params.d) throw InvalidArgument("FactorModel: z0 has wrong dimension");
    double s = 0.0;
    for (double v : z0) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("FactorModel: z0 must be >= 0");
        s += v;
    }
    if (!(s < 1.0)) throw InvalidArgument("FactorModel: z0 must satisfy sum(z0) < 1");
}

PricingBattery pricing_battery(const FactorModel& model, double maturity, const McSettings& mc) {
    model.validate();
    mc.validate();
    const auto start = Clock::now();
    const AffineParams affine = to_affine_params(model.params);
    const GeneratorMatrix gen = build_generator(affine);
    const ExtendedState s0(model.z0);
    const CurvePoint exact = curve_point(gen, maturity, s0);
    const TimeLattice lat = lattice_for(maturity, mc.dt);

    std::vector<double> bond(mc.n_paths), hval(mc.n_paths), disc(mc.n_paths);
    // Running state per path for the discount integrand exp(-int_0^u r) r_u.
    std::vector<double> weight(mc.n_paths), prev_integrand(mc.n_paths), prev_integral(mc.n_paths);
    for_each_rate_path(model, affine, lat, mc,
                       [&](std::size_t path, std::size_t k, std::span<const double>, double r, double integral) {
                           if (k == 0) {
                               weight[path] = 1.0;
                               prev_integral[path] = 0.0;
                               prev_integrand[path] = r;
                               disc[path] = 0.0;
                           } else {
                               weight[path] *= exp_neg(integral - prev_integral[path]);
                               prev_integral[path] = integral;
                               const double integrand = weight[path] * r;
                               disc[path] += 0.5 * (prev_integrand[path] + integrand) * lat.dt;
                               prev_integrand[path] = integrand;
                           }
                           if (k == lat.n_steps) {
                               const double df = std::exp(-integral);
                               bond[path] = df;
                               hval[path] = df * r;
                           }
                       });

    const SampleStats bond_st = sample_stats(bond);
    const SampleStats h_st = sample_stats(hval);
    const SampleStats disc_st = sample_stats(disc);

    const std::string shared = "shared paths across mc_bond_price, mc_h_value, mc_discount; T = " + fmt_time(maturity);
    PricingBattery out;
    out.bond_price = make_report("mc_bond_price", bond_st, exact.bond, mc, start);
    out.bond_price.detail = shared;
    out.h_value = make_report("mc_h_value", h_st, exact.h, mc, start);
    out.h_value.detail = shared;
    out.discount = make_report("mc_discount", disc_st, exact.discount, mc, start);
    out.discount.detail = shared;

    ValidationReport& comp = out.complementarity;
    comp.check_name = "mc_complementarity";
    comp.estimate = bond_st.mean + disc_st.mean;
    comp.reference = 1.0;
    comp.std_error = 0.0;
    comp.tolerance_multiplier = mc.tolerance_multiplier;
    comp.abs_tolerance = 2e-3;
    comp.n_paths = mc.n_paths;
    comp.runtime = seconds_since(start);
    comp.detail = "mc_bond_price + mc_discount on shared paths";
    comp.decide();
    return out;
}

ValidationReport mc_bond_price(const FactorModel& model, double maturity, const McSettings& mc) {
    return pricing_battery(model, maturity, mc).bond_price;
}

ValidationReport mc_h_value(const FactorModel& model, double maturity, const McSettings& mc) {
    return pricing_battery(model, maturity, mc).h_value;
}

ValidationReport mc_discount(const FactorModel& model, double maturity, const McSettings& mc) {
    return pricing_battery(model, maturity, mc).discount;
}

std::vector<ValidationReport> gains_martingale_check(const FactorModel& model, double maturity,
                                                     const McSettings& mc) {
    model.validate();
    mc.validate();
    const auto start = Clock::now();
    const AffineParams affine = to_affine_params(model.params);
    const GeneratorMatrix gen = build_generator(affine);
    const TimeLattice lat = lattice_for(maturity, mc.dt);
    const std::size_t d = model.params.d;

    constexpr std::size_t n_checks = 4;
    std::array<std::size_t, n_checks> steps{};
    std::array<std::vector<double>, n_checks> bond_column;  // e^{A (T - t_c)} e_0
    for (std::size_t c = 0; c < n_checks; ++c) {
        steps[c] = (lat.n_steps * (c + 1) + 2) / n_checks;
        const double tau = maturity - static_cast<double>(steps[c]) * lat.dt;
        const SquareMatrix e = mat_exp(gen.a, std::max(tau, 0.0));
        bond_column[c].resize(d + 1);
        for (std::size_t i = 0; i <= d; ++i) bond_column[c][i] = e(i, 0);
    }
    const double p0 = bond_price(gen, maturity, ExtendedState(model.z0));

    std::vector<double> increments(n_checks * mc.n_paths);
    for_each_rate_path(model, affine, lat, mc,
                       [&](std::size_t path, std::size_t k, std::span<const double> z, double, double integral) {
                           for (std::size_t c = 0; c < n_checks; ++c) {
                               if (steps[c] != k) continue;
                               double p = bond_column[c][0];
                               for (std::size_t i = 0; i < d; ++i) p += bond_column[c][i + 1] * z[i];
                               // (1 - e^{-I} P(t,T)) - (1 - P(0,T))
                               increments[c * mc.n_paths + path] = p0 - std::exp(-integral) * p;
                           }
                       });

    std::vector<ValidationReport> out;
    for (std::size_t c = 0; c < n_checks; ++c) {
        const double t = static_cast<double>(steps[c]) * lat.dt;
        const SampleStats st =
            sample_stats(std::span<const double>(increments).subspan(c * mc.n_paths, mc.n_paths));
        ValidationReport rep = make_report("gains_martingale[t=" + fmt_time(t) + "]", st, 0.0, mc, start);
        rep.detail = "discounted discount-gains increment D_t - D_0, T = " + fmt_time(maturity);
        out.push_back(std::move(rep));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<DriftPoint> default_drift_points(const GridEnsemble& ens, std::size_t count) {
    std::vector<DriftPoint> pts;
    std::vector<std::size_t> usable;
    for (std::size_t k = 0; k < ens.n_steps(); ++k) {
        if (ens.record_of_step(k) != static_cast<std::size_t>(-1) &&
            ens.record_of_step(k + 1) != static_cast<std::size_t>(-1) && ens.diagonal_node(k + 1) < ens.n_nodes())
            usable.push_back(k);
    }
    if (usable.empty() || count == 0) return pts;
    constexpr double golden = 0.6180339887498949;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = usable[i * usable.size() / count];
        const std::size_t first = ens.diagonal_node(k + 1);
        const std::size_t range = ens.n_nodes() - first;
        const double frac = std::fmod(0.5 + golden * static_cast<double>(i), 1.0);
        const std::size_t node = first + std::min(range - 1, static_cast<std::size_t>(frac * static_cast<double>(range)));
        pts.push_back({k, node});
    }
    return pts;
}

std::vector<ValidationReport> drift_condition_check(const GridEnsemble& ens, std::span<const DriftPoint> points,
                                                    double tolerance_multiplier) {
    std::vector<ValidationReport> out;
    const double dt = ens.dt();
    const bool deterministic = ens.vol().kind == VolKind::zero;
    for (const DriftPoint& pt : points) {
        const auto start = Clock::now();
        const std::size_t rec0 = ens.record_of_step(pt.step);
        const std::size_t rec1 = ens.record_of_step(pt.step + 1);
        if (rec0 == static_cast<std::size_t>(-1) || rec1 == static_cast<std::size_t>(-1))
            throw InvalidArgument("drift_condition_check: steps k and k+1 must both be recorded");
        if (pt.node >= ens.n_nodes() || pt.node < ens.diagonal_node(pt.step + 1))
            throw InvalidArgument("drift_condition_check: node must be alive at t_{k+1}");
        const std::size_t diag = ens.diagonal_node(pt.step);

        std::vector<double> empirical(ens.n_paths()), theory(ens.n_paths()), diff(ens.n_paths());
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            const double h0 = ens.h(p, rec0, pt.node);
            const double h1 = ens.h(p, rec1, pt.node);
            empirical[p] = (h1 - h0) / dt;
            theory[p] = h0 * ens.h(p, rec0, diag);
            diff[p] = empirical[p] - theory[p];
        }
        const SampleStats est = sample_stats(empirical);
        const SampleStats ref = sample_stats(theory);
        const SampleStats dif = sample_stats(diff);

        ValidationReport rep;
        rep.check_name = "drift_condition[t=" + fmt_time(static_cast<double>(pt.step) * dt) +
                         ",T=" + fmt_time(ens.maturities()[pt.node]) + "]";
        rep.estimate = est.mean;
        rep.reference = ref.mean;
        rep.std_error = dif.std_error;
        rep.tolerance_multiplier = tolerance_multiplier;
        rep.abs_tolerance = deterministic ? 10.0 * dt : 0.0;
        rep.n_paths = dif.n;
        rep.detail = ens.options().drift == GridDrift::zero ? "ensemble simulated with zero drift" : "";
        rep.runtime = seconds_since(start);
        rep.decide();
        out.push_back(std::move(rep));
    }
    return out;
}

ValidationReport positivity_scan(const GridEnsemble& ens) {
    const auto start = Clock::now();
    const auto grid = ens.maturities();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_path = 0;
    double best_t = 0.0;
    double best_T = 0.0;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        for (std::size_t rec = 0; rec < ens.n_records(); ++rec) {
            const auto h = ens.curve(p, rec);
            const std::size_t first = ens.diagonal_node(ens.record_step(rec));
            if (std::isnan(h[first])) break;  // path aborted
            double cum = 0.0;
            for (std::size_t j = first + 1; j < grid.size(); ++j) {
                cum += 0.5 * (grid[j] - grid[j - 1]) * (h[j] + h[j - 1]);
                if (cum > best) {
                    best = cum;
                    best_path = p;
                    best_t = ens.record_time(rec);
                    best_T = grid[j];
                }
            }
        }
    }
    ValidationReport rep;
    rep.check_name = "positivity_scan[grid]";
    rep.estimate = std::isfinite(best) ? best : 0.0;
    rep.reference = 1.0;
    rep.n_paths = ens.n_paths();
    rep.passed = rep.estimate < 1.0 && ens.explosions().empty();
    rep.detail = "max int_t^T h(t,s) ds at path " + std::to_string(best_path) + ", t = " + fmt_time(best_t) +
                 ", T = " + fmt_time(best_T);
    if (!ens.explosions().empty()) {
        const auto& e = ens.explosions().front();
        rep.detail += "; " + std::to_string(ens.explosions().size()) + " path(s) exploded, first at t = " +
                      fmt_time(e.time);
    }
    rep.runtime = seconds_since(start);
    return rep;
}

ValidationReport positivity_scan(const SimplexFactorParams& params, const PathBundle& z_paths, double horizon,
                                 double dtau) {
    if (!(horizon > 0.0) || !(dtau > 0.0)) throw InvalidArgument("positivity_scan: horizon and dtau must be positive");
    if (z_paths.dim() != params.d) throw InvalidArgument("positivity_scan: path dimension mismatch");
    const auto start = Clock::now();
    const GeneratorMatrix gen = build_generator(to_affine_params(params));
    const auto n_tau = static_cast<std::size_t>(std::ceil(horizon / dtau - 1e-9));
    std::vector<std::vector<double>> primitives;
    std::vector<double> taus;
    for (std::size_t i = 1; i <= n_tau; ++i) {
        const double tau = std::min(horizon, static_cast<double>(i) * dtau);
        taus.push_back(tau);
        primitives.push_back(phi_primitive(gen, tau));
    }

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_path = 0;
    double best_t = 0.0;
    double best_tau = 0.0;
    for (std::size_t p = 0; p < z_paths.n_paths(); ++p) {
        for (std::size_t rec = 0; rec < z_paths.n_records(); ++rec) {
            const auto z = z_paths.state(p, rec);
            for (std::size_t i = 0; i < taus.size(); ++i) {
                double disc = primitives[i][0];
                for (std::size_t j = 0; j < params.d; ++j) disc += primitives[i][j + 1] * z[j];
                if (disc > best) {
                    best = disc;
                    best_path = p;
                    best_t = z_paths.record_time(rec);
                    best_tau = taus[i];
                }
            }
        }
    }
    ValidationReport rep;
    rep.check_name = "positivity_scan[affine]";
    rep.estimate = best;
    rep.reference = 1.0;
    rep.n_paths = z_paths.n_paths();
    rep.passed = best < 1.0;
    rep.detail = "max discount H(t,T) at path " + std::to_string(best_path) + ", t = " + fmt_time(best_t) +
                 ", T - t = " + fmt_time(best_tau);
    rep.runtime = seconds_since(start);
    return rep;
}

bool all_passed(std::span<const ValidationReport> reports) noexcept {
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
}

std::string reports_to_json(std::span<const ValidationReport> reports, bool include_runtime) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["check_name"] = r.check_name;
        j["estimate"] = r.estimate;
        j["reference"] = r.reference;
        j["std_error"] = r.std_error;
        j["tolerance_multiplier"] = r.tolerance_multiplier;
        j["abs_tolerance"] = r.abs_tolerance;
        j["passed"] = r.passed;
        j["n_paths"] = r.n_paths;
        if (include_runtime) {
            j["runtime"] = r.runtime;
        } else {
            j["runtime"] = nullptr;
        }
        j["detail"] = r.detail;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string reports_to_table(std::span<const ValidationReport> reports) {
    std::size_t name_w = 10;
    for (const auto& r : reports) name_w = std::max(name_w, r.check_name.size());
    std::ostringstream os;
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %14s  %14s  %12s  %12s  %8s  %s\n", static_cast<int>(name_w), "check",
                  "estimate", "reference", "std_error", "band", "paths", "result");
    os << line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-*s  %14.8g  %14.8g  %12.4g  %12.4g  %8zu  %s\n",
                      static_cast<int>(name_w), r.check_name.c_str(), r.estimate, r.reference, r.std_error,
                      r.band(), r.n_paths, r.passed ? "PASS" : "FAIL");
        os << line;
    }
    return os.str();
}

}  // namespace dts
