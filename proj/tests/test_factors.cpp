#include "discount_ts/factors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "discount_ts/errors.hpp"

namespace dts {
namespace {

SimplexFactorParams example_params() { return {2, {0.1, -0.2}, {0.05, 0.05}, {0.3, 0.4}, 0.0}; }

SimplexFactorParams reference_params() { return {1, {0.01}, {0.03}, {0.2}, 0.005}; }

SimSettings settings(double dt, std::size_t n_steps, std::size_t n_paths, std::uint64_t seed,
                     std::size_t stride = 1) {
    return SimSettings{dt, n_steps, n_paths, seed, stride};
}

// Drift of Z = G(U) from Ito's formula with numerical derivatives of G.
// dU_k has diffusion q_k sqrt(U_k V) dW_k with independent W_k.
std::vector<double> ito_drift_of_g(const SimplexFactorParams& p, const std::vector<double>& u) {
    const std::size_t d = p.d;
    const double v = 1.0 + std::accumulate(u.begin(), u.end(), 0.0);
    auto g = [](std::vector<double> x, std::size_t i) {
        const double s = 1.0 + std::accumulate(x.begin(), x.end(), 0.0);
        return x[i] / s;
    };
    std::vector<double> out(d, 0.0);
    const double h = 1e-4;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            auto up = u, dn = u;
            up[k] += h;
            dn[k] -= h;
            const double first = (g(up, i) - g(dn, i)) / (2.0 * h);
            const double second = (g(up, i) - 2.0 * g(u, i) + g(dn, i)) / (h * h);
            const double mu_k = p.kappa[k] * u[k] + p.theta[k] * v;
            const double var_k = p.q[k] * p.q[k] * u[k] * v;
            out[i] += first * mu_k + 0.5 * second * var_k;
        }
    }
    return out;
}

// Z drift written out directly.
std::vector<double> z_drift(const SimplexFactorParams& p, const std::vector<double>& z) {
    const double theta_v = std::accumulate(p.theta.begin(), p.theta.end(), 0.0);
    double quad = 0.0;
    for (std::size_t j = 0; j < p.d; ++j) quad += (p.q[j] * p.q[j] - p.kappa[j]) * z[j];
    std::vector<double> out(p.d);
    for (std::size_t i = 0; i < p.d; ++i)
        out[i] = p.theta[i] + (p.kappa[i] - p.q[i] * p.q[i] - theta_v) * z[i] + z[i] * quad;
    return out;
}

TEST(GForward, Examples) {
    EXPECT_EQ(g_forward(std::vector<double>{0.0, 0.0}), (std::vector<double>{0.0, 0.0}));
    const auto z = g_forward(std::vector<double>{1.0, 1.0});
    EXPECT_DOUBLE_EQ(z[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(z[1], 1.0 / 3.0);
    EXPECT_THROW(g_forward(std::vector<double>{-0.1}), InvalidArgument);
}

TEST(GInverse, Examples) {
    EXPECT_EQ(g_inverse(std::vector<double>{0.0}), (std::vector<double>{0.0}));
    EXPECT_DOUBLE_EQ(g_inverse(std::vector<double>{0.5})[0], 1.0);
    EXPECT_THROW(g_inverse(std::vector<double>{1.0 - 1e-16}), BoundaryError);
    EXPECT_THROW(g_inverse(std::vector<double>{0.6, 0.5}), BoundaryError);
    EXPECT_THROW(g_inverse(std::vector<double>{-0.1}), InvalidArgument);
}

TEST(GInverse, RoundTrip) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (std::size_t d = 1; d <= 4; ++d)
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> x(d);
            for (double& e : x) e = u(gen);
            const auto z = g_forward(x);
            EXPECT_LT(std::accumulate(z.begin(), z.end(), 0.0), 1.0);
            const auto back = g_inverse(z);
            for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(back[i], x[i], 1e-12 * std::max(1.0, x[i]));
        }
}

TEST(SimplexFactorParams, Validation) {
    EXPECT_NO_THROW(example_params().validate());
    EXPECT_THROW((SimplexFactorParams{1, {0.0}, {-0.1}, {0.0}, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((SimplexFactorParams{1, {0.0}, {0.0}, {-0.1}, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((SimplexFactorParams{2, {0.0}, {0.0}, {0.0}, 0.0}.validate()), InvalidArgument);
    EXPECT_DOUBLE_EQ(example_params().theta_sum(), 0.1);
}

TEST(ToAffineParams, ReferenceModel) {
    const auto a = to_affine_params(reference_params());
    EXPECT_EQ(a.d, 1u);
    EXPECT_EQ(a.gamma0, 0.005);
    EXPECT_DOUBLE_EQ(a.b[0], 0.03);
    EXPECT_NEAR(a.beta[0], 0.01 - 0.04 - 0.03, 1e-16);
    EXPECT_NEAR(a.gamma[0], 0.03, 1e-16);
}

TEST(ToAffineParams, QuadraticTermCancels) {
    const SimplexFactorParams p{2, {0.09, 0.16}, {0.01, 0.02}, {0.3, 0.4}, 0.0};
    const auto a = to_affine_params(p);
    EXPECT_NEAR(a.gamma[0], 0.0, 1e-16);
    EXPECT_NEAR(a.gamma[1], 0.0, 1e-16);
    EXPECT_EQ(a.beta[1], 0.0);
    EXPECT_EQ(a.beta[2], 0.0);
}

TEST(ToAffineParams, QuadraticDriftMatchesZDrift) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> uk(-0.5, 0.5), up(0.0, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 3);
        SimplexFactorParams p{d, std::vector<double>(d), std::vector<double>(d), std::vector<double>(d), 0.0};
        for (std::size_t i = 0; i < d; ++i) {
            p.kappa[i] = uk(gen);
            p.theta[i] = up(gen);
            p.q[i] = up(gen);
        }
        std::vector<double> w(d + 1);
        for (double& e : w) e = -std::log(std::uniform_real_distribution<double>(1e-12, 1.0)(gen));
        const double s = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<double> z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = w[i] / s;

        const auto got = quadratic_drift(to_affine_params(p), z);
        const auto want = z_drift(p, z);
        for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(ZDrift, MatchesItoImageOfU) {
    const auto p = example_params();
    for (const auto& u : {std::vector<double>{0.5, 0.2}, std::vector<double>{2.0, 3.0}, std::vector<double>{0.01, 7.0}}) {
        const auto want = ito_drift_of_g(p, u);
        const auto got = z_drift(p, g_forward(u));
        for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
    }
}

TEST(ZDrift, TangentToOuterFace) {
    const auto p = example_params();
    for (double a : {0.0, 0.3, 0.8, 1.0}) {
        const auto mu = z_drift(p, {a, 1.0 - a});
        EXPECT_NEAR(mu[0] + mu[1], 0.0, 1e-15);
    }
}

TEST(SimulateU, ZeroCoefficientsGiveConstantPaths) {
    const SimplexFactorParams p{2, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, 0.0};
    const std::vector<double> u0{0.4, 2.0};
    const auto b = simulate_u(p, u0, settings(0.01, 50, 3, 1));
    for (std::size_t path = 0; path < 3; ++path)
        for (std::size_t rec = 0; rec < b.n_records(); ++rec) {
            EXPECT_EQ(b.state(path, rec)[0], 0.4);
            EXPECT_EQ(b.state(path, rec)[1], 2.0);
        }
}

TEST(SimulateU, DeterministicLinearOde) {
    const SimplexFactorParams p{1, {0.1}, {0.02}, {0.0}, 0.0};
    const auto b = simulate_u(p, std::vector<double>{1.0}, settings(1e-4, 10000, 1, 0));
    const double a = 0.12, c = 0.02;
    const double exact = (1.0 + c / a) * std::exp(a) - c / a;
    EXPECT_NEAR(b.terminal(0)[0], exact, 1e-4);
}

TEST(SimulateU, MeanFollowsMomentOde) {
    const SimplexFactorParams p{1, {-1.0}, {0.5}, {0.3}, 0.0};
    const std::size_t n = 200000;
    const auto b = simulate_u(p, std::vector<double>{1.0}, settings(1e-3, 1000, n, 8, 1000));
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = b.terminal(i)[0];
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    // m' = (kappa + theta) m + theta, m(0) = 1
    const double a = -0.5, c = 0.5;
    const double exact = (1.0 + c / a) * std::exp(a) - c / a;
    EXPECT_LT(std::abs(mean - exact), 3.0 * se);
}

TEST(SimulateU, PathsStayNonNegative) {
    const SimplexFactorParams p{2, {-3.0, -1.0}, {0.0, 0.01}, {1.5, 1.0}, 0.0};
    const auto b = simulate_u(p, std::vector<double>{0.01, 0.02}, settings(1e-2, 200, 200, 4));
    for (std::size_t path = 0; path < b.n_paths(); ++path)
        for (std::size_t rec = 0; rec < b.n_records(); ++rec)
            for (double x : b.state(path, rec)) EXPECT_GE(x, 0.0);
    EXPECT_GT(b.clamp_fraction(), 0.0);
}

TEST(SimulateZ, ZeroCoefficientsGiveConstantPaths) {
    const SimplexFactorParams p{2, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, 0.0};
    const auto b = simulate_z(p, std::vector<double>{0.2, 0.5}, settings(0.01, 50, 2, 1));
    for (std::size_t rec = 0; rec < b.n_records(); ++rec) {
        EXPECT_EQ(b.state(1, rec)[0], 0.2);
        EXPECT_EQ(b.state(1, rec)[1], 0.5);
    }
}

TEST(SimulateZ, DeterministicCaseTracksTransformedU) {
    const SimplexFactorParams p{1, {0.3}, {0.2}, {0.0}, 0.0};
    for (double dt : {1e-2, 1e-3}) {
        const auto n = static_cast<std::size_t>(std::llround(1.0 / dt));
        const auto zb = simulate_z(p, std::vector<double>{0.25}, settings(dt, n, 1, 0));
        const auto ub = simulate_u(p, g_inverse(std::vector<double>{0.25}), settings(dt, n, 1, 0));
        double sup = 0.0;
        for (std::size_t rec = 0; rec < zb.n_records(); ++rec)
            sup = std::max(sup, std::abs(zb.state(0, rec)[0] - g_forward(ub.state(0, rec))[0]));
        EXPECT_LE(sup, 10.0 * dt) << "dt = " << dt;
    }
}

TEST(SimulateZ, MeanMatchesTransformedU) {
    const auto p = example_params();
    const std::vector<double> z0{0.2, 0.3};
    const std::size_t n = 20000;
    const auto zb = simulate_z(p, z0, settings(1e-3, 1000, n, 100, 1000));
    const auto ub = simulate_u(p, g_inverse(z0), settings(1e-3, 1000, n, 200, 1000));
    for (std::size_t i = 0; i < 2; ++i) {
        double sz = 0.0, qz = 0.0, su = 0.0, qu = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = zb.terminal(k)[i];
            const double b = g_forward(ub.terminal(k))[i];
            sz += a;
            qz += a * a;
            su += b;
            qu += b * b;
        }
        const double mz = sz / n, mu = su / n;
        const double se = std::sqrt((qz / n - mz * mz) / n + (qu / n - mu * mu) / n);
        EXPECT_LT(std::abs(mz - mu), 3.0 * se) << "component " << i;
    }
}

TEST(SimulateZ, StaysInSimplexWithBoundedShortRate) {
    const auto p = example_params();
    const auto a = to_affine_params(p);
    const double bound = std::abs(a.gamma0) + std::max(std::abs(a.gamma[0]), std::abs(a.gamma[1]));
    const auto b = simulate_z(p, std::vector<double>{0.2, 0.3}, settings(1e-3, 1000, 500, 9));
    for (std::size_t path = 0; path < b.n_paths(); ++path)
        for (std::size_t rec = 0; rec < b.n_records(); ++rec) {
            const auto z = b.state(path, rec);
            EXPECT_GE(z[0], 0.0);
            EXPECT_GE(z[1], 0.0);
            EXPECT_LE(z[0] + z[1], 1.0);
            EXPECT_LE(std::abs(short_rate(a, ExtendedState(z))), bound + 1e-15);
        }
    EXPECT_LT(b.clamp_fraction(), 0.01);
}

TEST(SimulateZ, RejectsStartOutsideSimplex) {
    const auto p = example_params();
    EXPECT_THROW(simulate_z(p, std::vector<double>{0.6, 0.5}, settings(1e-3, 10, 1, 0)), InvalidArgument);
    EXPECT_THROW(simulate_z(p, std::vector<double>{-0.1, 0.5}, settings(1e-3, 10, 1, 0)), InvalidArgument);
    EXPECT_THROW(simulate_z(p, std::vector<double>{0.1}, settings(1e-3, 10, 1, 0)), InvalidArgument);
}

TEST(ProjectToSimplex, ClampsAndRescales) {
    std::vector<double> z{-0.1, 0.5};
    EXPECT_TRUE(project_to_simplex(z));
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 0.5);
    std::vector<double> w{0.7, 0.6};
    EXPECT_TRUE(project_to_simplex(w));
    EXPECT_NEAR(w[0] + w[1], 1.0 - 1e-12, 1e-15);
    EXPECT_NEAR(w[0] / w[1], 0.7 / 0.6, 1e-12);
    std::vector<double> ok{0.2, 0.3};
    EXPECT_FALSE(project_to_simplex(ok));
}

TEST(PathBundle, RecordStrideAndTimes) {
    const auto b = simulate_z(example_params(), std::vector<double>{0.2, 0.3}, settings(0.01, 25, 2, 1, 10));
    // steps 0, 10, 20 and the terminal step 25
    ASSERT_EQ(b.n_records(), 4u);
    EXPECT_EQ(b.record_step(3), 25u);
    EXPECT_DOUBLE_EQ(b.record_time(2), 0.2);
    const auto full = simulate_z(example_params(), std::vector<double>{0.2, 0.3}, settings(0.01, 25, 2, 1));
    EXPECT_EQ(b.terminal(1)[0], full.terminal(1)[0]);
    EXPECT_EQ(b.state(1, 1)[1], full.state(1, 10)[1]);
}

TEST(PathBundle, IndependentOfThreadCount) {
    auto run = [](unsigned threads) {
        set_max_threads(threads);
        const auto b = simulate_z(example_params(), std::vector<double>{0.2, 0.3}, settings(1e-3, 200, 37, 5));
        std::vector<double> out;
        for (std::size_t p = 0; p < b.n_paths(); ++p) out.push_back(b.terminal(p)[1]);
        return out;
    };
    const auto one = run(1);
    EXPECT_EQ(one, run(3));
    EXPECT_EQ(one, run(8));
    set_max_threads(0);
}

TEST(SimSettings, Validation) {
    EXPECT_THROW(settings(0.0, 10, 1, 0).validate(), InvalidArgument);
    EXPECT_THROW(settings(1e-3, 10, 0, 0).validate(), InvalidArgument);
    EXPECT_THROW(settings(1e-3, 10, 1, 0, 0).validate(), InvalidArgument);
}

}  // namespace
}  // namespace dts
