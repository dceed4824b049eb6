#include "discount_ts/discount_ts.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace {

const dts_sim_settings kSmall{1e-2, 100, 50, 3, 10};

dts_simplex_model* reference_model() {
    const double kappa = 0.01, theta = 0.03, q = 0.2;
    dts_simplex_model* m = nullptr;
    EXPECT_EQ(dts_simplex_create(1, &kappa, &theta, &q, 0.005, &m), DTS_OK);
    return m;
}

TEST(CApi, VersionAndStatusNames) {
    EXPECT_STREQ(dts_version(), "0.1.0");
    EXPECT_STREQ(dts_status_name(DTS_OK), "ok");
    EXPECT_STREQ(dts_status_name(DTS_ERR_EXPLOSION), "explosion");
}

TEST(CApi, MatExpIdentityAtZero) {
    const double a[4] = {1, 2, 3, 4};
    double out[4];
    ASSERT_EQ(dts_mat_exp(2, a, 0.0, out), DTS_OK);
    EXPECT_EQ(out[0], 1.0);
    EXPECT_EQ(out[1], 0.0);
    EXPECT_EQ(out[3], 1.0);
    EXPECT_EQ(dts_mat_exp(2, nullptr, 1.0, out), DTS_ERR_INVALID_ARGUMENT);
    EXPECT_NE(std::strlen(dts_last_error()), 0u);
}

TEST(CApi, AffineToyCurve) {
    const double gamma = 1.0, b = 0.0, beta = -0.05;
    dts_affine_model* m = nullptr;
    ASSERT_EQ(dts_affine_create(1, 0.0, &gamma, &b, &beta, &m), DTS_OK);
    EXPECT_EQ(dts_affine_dim(m), 1u);
    double a[4], gbar[2];
    ASSERT_EQ(dts_affine_generator(m, a, gbar), DTS_OK);
    EXPECT_EQ(a[0], 0.0);
    EXPECT_EQ(a[2], -1.0);
    EXPECT_EQ(gbar[1], 1.0);

    const double z = 0.03;
    dts_curve_point pt{};
    ASSERT_EQ(dts_affine_curve_point(m, 10.0, &z, &pt), DTS_OK);
    dts_curve_point toy{};
    int in_domain = -1;
    ASSERT_EQ(dts_toy_curve_point(0.05, 0.03, 10.0, &toy, &in_domain), DTS_OK);
    EXPECT_EQ(in_domain, 1);
    EXPECT_NEAR(pt.bond, toy.bond, 1e-12);
    EXPECT_NEAR(pt.h, toy.h, 1e-12);
    EXPECT_NEAR(toy.bond, 1.0 - 0.6 * (1.0 - std::exp(-0.5)), 1e-12);
    EXPECT_NEAR(pt.short_rate, 0.03, 1e-15);
    dts_affine_destroy(m);
}

TEST(CApi, DegenerateForward) {
    const double gamma = 1.0, b = 0.0, beta = -0.05;
    dts_affine_model* m = nullptr;
    ASSERT_EQ(dts_affine_create(1, 0.0, &gamma, &b, &beta, &m), DTS_OK);
    const double z = 0.2;
    double f = 0.0;
    EXPECT_EQ(dts_affine_forward_rate(m, 100.0, &z, &f), DTS_ERR_DEGENERATE_CURVE);
    dts_curve_point pt{};
    ASSERT_EQ(dts_affine_curve_point(m, 100.0, &z, &pt), DTS_OK);
    EXPECT_TRUE(std::isnan(pt.forward));
    dts_affine_destroy(m);
}

TEST(CApi, ToyOutOfDomainFlagged) {
    dts_curve_point pt{};
    int in_domain = 1;
    ASSERT_EQ(dts_toy_curve_point(0.05, 0.2, 1.0, &pt, &in_domain), DTS_OK);
    EXPECT_EQ(in_domain, 0);
}

TEST(CApi, NullHandles) {
    EXPECT_EQ(dts_affine_curve_point(nullptr, 1.0, nullptr, nullptr), DTS_ERR_NULL_HANDLE);
    EXPECT_EQ(dts_affine_dim(nullptr), 0u);
    EXPECT_EQ(dts_bundle_state(nullptr, 0, 0), nullptr);
    EXPECT_EQ(dts_grid_curve(nullptr, 0, 0), nullptr);
    dts_affine_destroy(nullptr);
    dts_simplex_destroy(nullptr);
    dts_bundle_destroy(nullptr);
    dts_grid_destroy(nullptr);
    dts_report_set_destroy(nullptr);
}

TEST(CApi, BoundaryAndInvalidArgument) {
    const double z[2] = {0.6, 0.5};
    double u[2];
    EXPECT_EQ(dts_g_inverse(2, z, u), DTS_ERR_BOUNDARY);
    const double kappa = 0.0, theta = -1.0, q = 0.0;
    dts_simplex_model* m = nullptr;
    EXPECT_EQ(dts_simplex_create(1, &kappa, &theta, &q, 0.0, &m), DTS_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(m, nullptr);
    EXPECT_NE(std::string(dts_last_error()).size(), 0u);
}

TEST(CApi, GForwardInverseRoundTrip) {
    const double u[2] = {0.5, 1.5};
    double z[2], back[2];
    ASSERT_EQ(dts_g_forward(2, u, z), DTS_OK);
    EXPECT_NEAR(z[0], 0.5 / 3.0, 1e-15);
    ASSERT_EQ(dts_g_inverse(2, z, back), DTS_OK);
    EXPECT_NEAR(back[1], 1.5, 1e-12);
}

TEST(CApi, SimulateZBundle) {
    auto* m = reference_model();
    const double z0 = 0.3;
    dts_path_bundle* b = nullptr;
    ASSERT_EQ(dts_simulate_z(m, &z0, &kSmall, &b), DTS_OK);
    EXPECT_EQ(dts_bundle_dim(b), 1u);
    EXPECT_EQ(dts_bundle_n_paths(b), 50u);
    EXPECT_EQ(dts_bundle_n_records(b), 11u);
    EXPECT_NEAR(dts_bundle_record_time(b, 10), 1.0, 1e-12);
    EXPECT_EQ(dts_bundle_state(b, 0, 0)[0], 0.3);
    EXPECT_EQ(dts_bundle_state(b, 50, 0), nullptr);
    EXPECT_GE(dts_bundle_clamp_fraction(b), 0.0);
    dts_bundle_destroy(b);
    dts_simplex_destroy(m);
}

TEST(CApi, SimplexToAffine) {
    auto* m = reference_model();
    dts_affine_model* a = nullptr;
    ASSERT_EQ(dts_simplex_to_affine(m, &a), DTS_OK);
    double gen[4];
    ASSERT_EQ(dts_affine_generator(a, gen, nullptr), DTS_OK);
    EXPECT_NEAR(gen[0], -0.005, 1e-15);
    EXPECT_NEAR(gen[1], 0.03, 1e-15);
    EXPECT_NEAR(gen[2], -0.03, 1e-15);
    EXPECT_NEAR(gen[3], -0.065, 1e-15);
    dts_affine_destroy(a);
    dts_simplex_destroy(m);
}

TEST(CApi, GridExplosionIsReported) {
    std::vector<double> mat, h0;
    for (int i = 0; i <= 300; ++i) {
        mat.push_back(i * 0.01);
        h0.push_back(0.5);
    }
    dts_grid_options opt{};
    opt.vol_kind = DTS_VOL_ZERO;
    const dts_sim_settings s{0.01, 300, 1, 0, 1};
    dts_grid_ensemble* e = nullptr;
    ASSERT_EQ(dts_grid_simulate(mat.size(), mat.data(), h0.data(), &opt, &s, &e), DTS_OK);
    ASSERT_EQ(dts_grid_n_explosions(e), 1u);
    size_t path = 9;
    double t = 0.0;
    ASSERT_EQ(dts_grid_explosion(e, 0, &path, &t), DTS_OK);
    EXPECT_EQ(path, 0u);
    EXPECT_GT(t, 1.9);
    EXPECT_LT(t, 2.1);
    EXPECT_EQ(dts_grid_explosion(e, 1, &path, &t), DTS_ERR_INVALID_ARGUMENT);

    dts_report_set* set = nullptr;
    ASSERT_EQ(dts_report_set_create(&set), DTS_OK);
    ASSERT_EQ(dts_check_positivity_grid(set, e), DTS_OK);
    EXPECT_EQ(dts_report_set_all_passed(set), 0);
    dts_report_set_destroy(set);
    dts_grid_destroy(e);

    double ct = 0.0;
    ASSERT_EQ(dts_critical_time_sampled(mat.size(), mat.data(), h0.data(), 3.0, &ct), DTS_OK);
    EXPECT_NEAR(ct, 2.0, 1e-9);
    double v = 0.0;
    EXPECT_EQ(dts_spde_flow_sampled(mat.size(), mat.data(), h0.data(), 2.5, 0.1, &v), DTS_ERR_EXPLOSION);
}

TEST(CApi, SpdeFlowStationary) {
    double v = 0.0;
    ASSERT_EQ(dts_spde_flow_exponential(0.05, 0.05, 3.0, 2.0, &v), DTS_OK);
    EXPECT_NEAR(v, 0.05 * std::exp(-0.1), 1e-14);
}

TEST(CApi, ReportSetPricing) {
    auto* m = reference_model();
    const double z0 = 0.3;
    const dts_mc_settings mc{1e-2, 200, 1, 0.0, 0.0};
    dts_report_set* set = nullptr;
    ASSERT_EQ(dts_report_set_create(&set), DTS_OK);
    ASSERT_EQ(dts_check_pricing(set, m, &z0, 1.0, &mc), DTS_OK);
    ASSERT_EQ(dts_check_gains(set, m, &z0, 1.0, &mc), DTS_OK);
    ASSERT_EQ(dts_report_set_size(set), 8u);
    dts_report r{};
    ASSERT_EQ(dts_report_set_get(set, 0, &r), DTS_OK);
    EXPECT_STREQ(r.check_name, "mc_bond_price");
    EXPECT_EQ(r.tolerance_multiplier, 3.0);
    EXPECT_EQ(r.n_paths, 200u);
    EXPECT_EQ(dts_report_set_get(set, 8, &r), DTS_ERR_INVALID_ARGUMENT);
    const std::string json = dts_report_set_json(set, 0);
    EXPECT_NE(json.find("\"runtime\": null"), std::string::npos);
    EXPECT_NE(std::string(dts_report_set_table(set)).find("gains_martingale"), std::string::npos);
    dts_report_set_destroy(set);
    dts_simplex_destroy(m);
}

TEST(CApi, ThreadCap) {
    dts_set_max_threads(3);
    EXPECT_EQ(dts_max_threads(), 3u);
    dts_set_max_threads(0);
    EXPECT_GE(dts_max_threads(), 1u);
}

}  // namespace
