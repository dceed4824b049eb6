#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "discount_ts/numerics.hpp"

namespace dts {

/// Coefficients of an affine discount term structure whose factor process has
/// the quadratic drift
///     mu_i(z) = b_i + sum_j beta_ij z_j + z_i sum_j gamma_j z_j.
/// A constant short rate is represented as d = 1 with gamma, b, beta zero.
struct AffineParams {
    std::size_t d = 1;
    double gamma0 = 0.0;
    std::vector<double> gamma;  // gamma_1..gamma_d
    std::vector<double> b;      // b_1..b_d
    std::vector<double> beta;   // beta_ij at [i * d + j], zero-based i, j

    double beta_at(std::size_t i, std::size_t j) const { return beta[i * d + j]; }

    /// Throws InvalidArgument on wrong sizes or non-finite entries.
    void validate() const;

    static AffineParams constant_rate(double rate);
};

/// The (d+1)x(d+1) matrix A driving phi_bar' = A phi_bar, plus
/// gamma_bar = (gamma_0, ..., gamma_d) = -A e_0.
struct GeneratorMatrix {
    SquareMatrix a;
    std::vector<double> gamma_bar;

    std::size_t dim() const noexcept { return a.dim(); }
};

/// Extended factor (1, z_1, ..., z_d).
class ExtendedState {
   public:
    explicit ExtendedState(std::span<const double> factors);

    std::span<const double> values() const noexcept { return z_bar_; }
    std::size_t dim() const noexcept { return z_bar_.size(); }

   private:
    std::vector<double> z_bar_;
};

GeneratorMatrix build_generator(const AffineParams& p);

/// phi_bar(x) = e^{A x} gamma_bar. x >= 0.
std::vector<double> phi_bar(const GeneratorMatrix& g, double x);

/// Phi_bar(x) = int_0^x phi_bar = (I - e^{A x}) e_0. x >= 0.
std::vector<double> phi_primitive(const GeneratorMatrix& g, double x);

/// P = e_0' e^{A' tau} z_bar.
double bond_price(const GeneratorMatrix& g, double tau, const ExtendedState& s);

/// H = 1 - P = Phi_bar(tau)' z_bar.
double discount(const GeneratorMatrix& g, double tau, const ExtendedState& s);

/// h = phi_bar(tau)' z_bar.
double h_value(const GeneratorMatrix& g, double tau, const ExtendedState& s);

/// f = h / P. Throws DegenerateCurve when P <= 0 (or below 1e-300).
double forward_rate(const GeneratorMatrix& g, double tau, const ExtendedState& s);

/// r = gamma_bar' z_bar.
double short_rate(const AffineParams& p, const ExtendedState& s);

std::vector<double> quadratic_drift(const AffineParams& p, std::span<const double> z);

/// All curve quantities at one maturity, sharing a single matrix exponential.
struct CurvePoint {
    double tau = 0.0;
    double h = 0.0;
    double discount = 0.0;
    double bond = 1.0;
    double forward = 0.0;  // NaN when the bond price is not positive
    double short_rate = 0.0;
};

CurvePoint curve_point(const GeneratorMatrix& g, double tau, const ExtendedState& s);

// ---------------------------------------------------------------------------
// Consistency of a general factor model h(t,T) = phi(T - t, Z_t)
// ---------------------------------------------------------------------------

using CurveFunction = std::function<double(double x, std::span<const double> z)>;
using DriftFunction = std::function<std::vector<double>(std::span<const double> z)>;
using DiffusionFunction = std::function<SquareMatrix(std::span<const double> z)>;

/// -d_x phi + mu' grad_z phi + 1/2 tr(c hess_z phi) - phi(x,z) phi(0,z),
/// with all derivatives by central differences (relative step 1e-5).
/// Zero (up to discretisation) for a model satisfying the drift condition.
double consistency_residual(const CurveFunction& phi, const DriftFunction& mu,
                            const DiffusionFunction& c, double x, std::span<const double> z);

}  // namespace dts
