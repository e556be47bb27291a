#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ismp/pipeline/pipeline.hpp"
#include "ismp/registration/rigid.hpp"
#include "support/oracles.hpp"
#include "support/testgen.hpp"

using namespace ismp;

TEST_CASE("rigid transform algebra") {
    const RigidTransform a = testgen::axis_angle(1, 2, 3, 0.7);
    const RigidTransform b = testgen::axis_angle(-2, 1, 0.5, -1.1);
    CHECK(a.orthonormality_error() < 1e-12);

    const Point3 p{0.3, -0.8, 1.2};
    const Point3 via_compose = a.compose(b).apply(p);
    const Point3 via_steps = a.apply(b.apply(p));
    CHECK(distance(via_compose, via_steps) < 1e-12);

    const RigidTransform id = RigidTransform::identity();
    CHECK(distance(id.apply(p), p) == 0.0);
}

TEST_CASE("kabsch fit recovers an exact correspondence") {
    oracle::Rng rng(17);
    RigidTransform gt = testgen::axis_angle(0.2, -1.0, 0.5, 0.9);
    gt.translation = {0.4, -0.1, 2.0};
    std::vector<Point3> src, dst;
    for (int i = 0; i < 24; ++i) {
        const Point3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        src.push_back(p);
        dst.push_back(gt.apply(p));
    }
    const RigidTransform fit = fit_rigid(src, dst);
    CHECK(testgen::rotation_error_deg(fit.rotation, gt.rotation) < 1e-9);
    CHECK(distance(fit.translation, gt.translation) < 1e-9);
    CHECK(fit.orthonormality_error() < 1e-12);

    // Reflection guard: a mostly-planar set still yields det(R) = +1.
    std::vector<Point3> flat_src, flat_dst;
    for (int i = 0; i < 12; ++i) {
        const Point3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
        flat_src.push_back(p);
        flat_dst.push_back(gt.apply(p));
    }
    const RigidTransform f = fit_rigid(flat_src, flat_dst);
    const double det =
        f.rotation[0] * (f.rotation[4] * f.rotation[8] - f.rotation[5] * f.rotation[7]) -
        f.rotation[1] * (f.rotation[3] * f.rotation[8] - f.rotation[5] * f.rotation[6]) +
        f.rotation[2] * (f.rotation[3] * f.rotation[7] - f.rotation[4] * f.rotation[6]);
    CHECK(det == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("registration recovers seeded rigid motions") {
    PipelineConfig cfg;
    cfg.patch.center_count = 160;
    cfg.patch.k_max = 32;
    cfg.patch.radius_fraction = 0.08;

    oracle::Rng rng(99);
    int recovered = 0;
    const int cases = 5;
    for (int c = 0; c < cases; ++c) {
        const PointCloud cloud = testgen::bumpy_cloud(1200 + c, 1600);
        RigidTransform gt = testgen::axis_angle(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                                rng.uniform(-1, 1), rng.uniform(0.05, 1.0));
        const double diag = cloud.bbox_diagonal();
        gt.translation = {rng.uniform(-0.2, 0.2) * diag, rng.uniform(-0.2, 0.2) * diag,
                          rng.uniform(-0.2, 0.2) * diag};
        const PointCloud moved = apply_transform(cloud, gt);

        Warnings w;
        const SampleFeatures a = extract_features(cloud, nullptr, cfg, &w);
        const SampleFeatures b = extract_features(moved, nullptr, cfg, &w);
        const RegistrationResult reg = register_clouds(
            a.center_points, a.center_fpfh, b.center_points, b.center_fpfh, cfg.ransac, &w);
        const double rot_err = testgen::rotation_error_deg(reg.transform.rotation, gt.rotation);
        const double t_err = distance(reg.transform.translation, gt.translation) / diag;
        if (rot_err < 5.0 && t_err < 0.01) ++recovered;
        CHECK(reg.inlier_fraction > 0.5);
    }
    CHECK(recovered == cases);
}

TEST_CASE("registration is deterministic") {
    PipelineConfig cfg;
    cfg.patch.center_count = 120;
    cfg.patch.radius_fraction = 0.08;
    const PointCloud cloud = testgen::bumpy_cloud(7, 1200);
    RigidTransform gt = testgen::axis_angle(1, 0.3, -0.5, 0.6);
    gt.translation = {0.1, 0.2, -0.05};
    const PointCloud moved = apply_transform(cloud, gt);
    const SampleFeatures a = extract_features(cloud, nullptr, cfg, nullptr);
    const SampleFeatures b = extract_features(moved, nullptr, cfg, nullptr);

    const RegistrationResult r1 = register_clouds(a.center_points, a.center_fpfh,
                                                  b.center_points, b.center_fpfh, cfg.ransac);
    const RegistrationResult r2 = register_clouds(a.center_points, a.center_fpfh,
                                                  b.center_points, b.center_fpfh, cfg.ransac);
    for (int i = 0; i < 9; ++i) CHECK(r1.transform.rotation[i] == r2.transform.rotation[i]);
    CHECK(r1.transform.translation.x == r2.transform.translation.x);
    CHECK(r1.inlier_fraction == r2.inlier_fraction);
    CHECK(r1.rms_error == r2.rms_error);
}

TEST_CASE("registration reports failure on feature mismatch") {
    // Feature spaces with disjoint values produce no mutual matches that
    // survive RANSAC; the caller gets a structured failure, not garbage.
    oracle::Rng rng(4);
    std::vector<Point3> src_pts = oracle::random_points(rng, 40);
    std::vector<Point3> dst_pts = oracle::random_points(rng, 40);
    FeatureMatrix src_f(40, 4), dst_f(40, 4);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t c = 0; c < 4; ++c) {
            src_f.at(i, c) = rng.gaussian();
            dst_f.at(i, c) = rng.gaussian() + 100.0;
        }
    CHECK_THROWS_AS(
        register_clouds(src_pts, src_f, dst_pts, dst_f, RansacConfig{}, nullptr), Error);
}

TEST_CASE("apply_transform rotates normals along with points") {
    const PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}},
                           {{0, 0, 1}, {0, 0, 1}, {1, 0, 0}});
    const RigidTransform rot = testgen::axis_angle(0, 1, 0, M_PI / 2.0);
    const PointCloud moved = apply_transform(cloud, rot);
    REQUIRE(moved.has_normals());
    // +z rotates onto +x around the y axis.
    CHECK(moved.normals()[0].x == doctest::Approx(1.0));
    CHECK(moved.normals()[0].z == doctest::Approx(0.0));
    CHECK(moved.normals()[2].z == doctest::Approx(-1.0));
    CHECK(moved[1].z == doctest::Approx(-1.0));
}
