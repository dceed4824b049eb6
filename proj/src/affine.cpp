#include "discount_ts/affine.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "discount_ts/errors.hpp"

namespace dts {

namespace {

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_tau(double tau, const char* op) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw InvalidArgument(std::string(op) + ": time to maturity must be finite and >= 0, got " +
                              std::to_string(tau));
}

void require_state(const GeneratorMatrix& g, const ExtendedState& s) {
    if (s.dim() != g.dim())
        throw InvalidArgument("extended state has dimension " + std::to_string(s.dim()) +
                              ", model expects " + std::to_string(g.dim()));
}

// First column of e^{A tau}, i.e. e^{A tau} e_0.
std::vector<double> exp_first_column(const GeneratorMatrix& g, double tau) {
    const SquareMatrix e = mat_exp(g.a, tau);
    std::vector<double> col(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) col[i] = e(i, 0);
    return col;
}

}  // namespace

void AffineParams::validate() const {
    if (d == 0) throw InvalidArgument("AffineParams: factor dimension must be >= 1");
    if (gamma.size() != d || b.size() != d || beta.size() != d * d)
        throw InvalidArgument("AffineParams: expected gamma, b of length " + std::to_string(d) +
                              " and beta of " + std::to_string(d * d) + " entries");
    if (!std::isfinite(gamma0) || !finite(gamma) || !finite(b) || !finite(beta))
        throw InvalidArgument("AffineParams: non-finite coefficient");
}

AffineParams AffineParams::constant_rate(double rate) {
    return AffineParams{.d = 1, .gamma0 = rate, .gamma = {0.0}, .b = {0.0}, .beta = {0.0}};
}

ExtendedState::ExtendedState(std::span<const double> factors) : z_bar_(factors.size() + 1) {
    z_bar_[0] = 1.0;
    std::copy(factors.begin(), factors.end(), z_bar_.begin() + 1);
    if (!finite(z_bar_)) throw InvalidArgument("ExtendedState: non-finite factor value");
}

GeneratorMatrix build_generator(const AffineParams& p) {
    p.validate();
    const std::size_t d = p.d;
    GeneratorMatrix g{SquareMatrix(d + 1), std::vector<double>(d + 1)};

    // Row 0 carries phi_0', row j carries phi_j'.
    g.a(0, 0) = -p.gamma0;
    for (std::size_t j = 1; j <= d; ++j) {
        g.a(0, j) = p.b[j - 1];
        g.a(j, 0) = -p.gamma[j - 1];
        for (std::size_t i = 1; i <= d; ++i)
            g.a(j, i) = p.beta_at(i - 1, j - 1) - (i == j ? p.gamma0 : 0.0);
    }

    g.gamma_bar[0] = p.gamma0;
    std::copy(p.gamma.begin(), p.gamma.end(), g.gamma_bar.begin() + 1);
    for (std::size_t i = 0; i <= d; ++i) {
        if (g.gamma_bar[i] != -g.a(i, 0)) throw Error("build_generator: gamma_bar != -A e_0");
    }
    return g;
}

std::vector<double> phi_bar(const GeneratorMatrix& g, double x) {
    require_tau(x, "phi_bar");
    return mat_vec(mat_exp(g.a, x), g.gamma_bar);
}

std::vector<double> phi_primitive(const GeneratorMatrix& g, double x) {
    require_tau(x, "phi_primitive");
    std::vector<double> out = exp_first_column(g, x);
    for (double& v : out) v = -v;
    out[0] += 1.0;
    return out;
}

double bond_price(const GeneratorMatrix& g, double tau, const ExtendedState& s) {
    require_tau(tau, "bond_price");
    require_state(g, s);
    return dot(exp_first_column(g, tau), s.values());
}

double discount(const GeneratorMatrix& g, double tau, const ExtendedState& s) {
    require_tau(tau, "discount");
    require_state(g, s);
    return dot(phi_primitive(g, tau), s.values());
}

double h_value(const GeneratorMatrix& g, double tau, const ExtendedState& s) {
    require_tau(tau, "h_value");
    require_state(g, s);
    return dot(phi_bar(g, tau), s.values());
}

double forward_rate(const GeneratorMatrix& g, double tau, const ExtendedState& s) {
    const CurvePoint pt = curve_point(g, tau, s);
    if (std::isnan(pt.forward))
        throw DegenerateCurve("forward_rate: bond price " + std::to_string(pt.bond) +
                              " is not positive at tau = " + std::to_string(tau));
    return pt.forward;
}

double short_rate(const AffineParams& p, const ExtendedState& s) {
    if (s.dim() != p.d + 1) throw InvalidArgument("short_rate: state dimension mismatch");
    const auto z = s.values();
    double r = p.gamma0;
    for (std::size_t j = 0; j < p.d; ++j) r += p.gamma[j] * z[j + 1];
    return r;
}

std::vector<double> quadratic_drift(const AffineParams& p, std::span<const double> z) {
    if (z.size() != p.d) throw InvalidArgument("quadratic_drift: state dimension mismatch");
    const double gz = dot(p.gamma, z);
    std::vector<double> mu(p.d);
    for (std::size_t i = 0; i < p.d; ++i) {
        double m = p.b[i];
        for (std::size_t j = 0; j < p.d; ++j) m += p.beta_at(i, j) * z[j];
        mu[i] = m + z[i] * gz;
    }
    return mu;
}

CurvePoint curve_point(const GeneratorMatrix& g, double tau, const ExtendedState& s) {
    require_tau(tau, "curve_point");
    require_state(g, s);
    const SquareMatrix e = mat_exp(g.a, tau);
    const auto z = s.values();

    CurvePoint pt;
    pt.tau = tau;
    pt.h = dot(mat_vec(e, g.gamma_bar), z);
    double bond = 0.0;
    double disc = z[0];
    for (std::size_t i = 0; i < g.dim(); ++i) {
        bond += e(i, 0) * z[i];
        disc -= e(i, 0) * z[i];
    }
    pt.bond = bond;
    pt.discount = disc;
    pt.short_rate = dot(g.gamma_bar, z);
    pt.forward = bond > 1e-300 ? pt.h / bond : std::numeric_limits<double>::quiet_NaN();
    return pt;
}

// ---------------------------------------------------------------------------

double consistency_residual(const CurveFunction& phi, const DriftFunction& mu,
                            const DiffusionFunction& c, double x, std::span<const double> z) {
    require_tau(x, "consistency_residual");
    const std::size_t d = z.size();
    std::vector<double> zz(z.begin(), z.end());

    auto eval = [&](double xx, std::span<const double> at) {
        const double v = phi(xx, at);
        if (!std::isfinite(v)) throw InvalidArgument("consistency_residual: non-finite phi");
        return v;
    };

    const double f0 = eval(x, zz);
    const double hx = 1e-5 * std::max(1.0, std::abs(x));
    double dphi_dx;
    if (x >= hx) {
        dphi_dx = (eval(x + hx, zz) - eval(x - hx, zz)) / (2.0 * hx);
    } else {
        // second-order one-sided difference; phi lives on x >= 0
        dphi_dx = (-3.0 * f0 + 4.0 * eval(x + hx, zz) - eval(x + 2.0 * hx, zz)) / (2.0 * hx);
    }

    // Second differences lose eps / h^2 to round-off, so they get a wider step.
    std::vector<double> step(d), hstep(d);
    for (std::size_t i = 0; i < d; ++i) {
        step[i] = 1e-5 * std::max(1.0, std::abs(z[i]));
        hstep[i] = 1e-4 * std::max(1.0, std::abs(z[i]));
    }

    auto shifted = [&](std::size_t i, double si, std::size_t j, double sj) {
        std::vector<double> at = zz;
        at[i] += si;
        if (sj != 0.0) at[j] += sj;
        return eval(x, at);
    };

    const std::vector<double> drift = mu(zz);
    if (drift.size() != d) throw InvalidArgument("consistency_residual: drift dimension mismatch");
    const SquareMatrix diffusion = c(zz);
    if (diffusion.dim() != d) throw InvalidArgument("consistency_residual: diffusion dimension mismatch");

    double drift_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double grad = (shifted(i, step[i], i, 0.0) - shifted(i, -step[i], i, 0.0)) / (2.0 * step[i]);
        drift_term += drift[i] * grad;
    }

    double trace_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double cij = diffusion(j, i);
            if (cij == 0.0) continue;
            double hess;
            if (i == j) {
                hess = (shifted(i, hstep[i], i, 0.0) - 2.0 * f0 + shifted(i, -hstep[i], i, 0.0)) /
                       (hstep[i] * hstep[i]);
            } else {
                hess = (shifted(i, hstep[i], j, hstep[j]) - shifted(i, hstep[i], j, -hstep[j]) -
                        shifted(i, -hstep[i], j, hstep[j]) + shifted(i, -hstep[i], j, -hstep[j])) /
                       (4.0 * hstep[i] * hstep[j]);
            }
            trace_term += cij * hess;
        }
    }

    const double short_rate_value = eval(0.0, zz);
    return -dphi_dx + drift_term + 0.5 * trace_term - f0 * short_rate_value;
}

}  // namespace dts
