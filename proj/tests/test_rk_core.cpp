#include <doctest.h>

#include <cmath>
#include <random>

#include "rkth/rk_core.hpp"
#include "rkth/scni.hpp"

using namespace rkth;

namespace {

NodeCloud uniform_cloud(int nr, int nz, double r0 = 0.05, double r1 = 1.05, double z0 = 0.0,
                        double z1 = 1.0, double factor = 2.0) {
    const CellPartition p = build_rect_partition(r0, r1, z0, z1, nr, nz);
    return cloud_from_partition(p, factor);
}

}  // namespace

TEST_CASE("cubic B-spline kernel values and support") {
    CHECK(cubic_bspline(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(cubic_bspline(0.5) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(cubic_bspline(1.0) == 0.0);
    CHECK(cubic_bspline(1.7) == 0.0);
    CHECK_THROWS_AS(cubic_bspline(-0.1), std::invalid_argument);
    for (double s = 0.0; s < 1.0; s += 0.01) CHECK(cubic_bspline(s) >= 0.0);
}

TEST_CASE("cubic B-spline is C2 across the knots") {
    const double h = 1e-7;
    for (double knot : {0.5, 1.0 - 1e-12}) {
        const double wl = cubic_bspline(knot - h), wr = cubic_bspline(knot + h);
        CHECK(std::abs(wl - wr) < 1e-6);
        const double dl = cubic_bspline_deriv(knot - h), dr = cubic_bspline_deriv(knot + h);
        CHECK(std::abs(dl - dr) < 1e-5);
        // second derivative via finite differences on each side
        const double d2l = (cubic_bspline(knot - h) - 2 * cubic_bspline(knot - 2 * h) +
                            cubic_bspline(knot - 3 * h)) / (h * h);
        const double d2r = (cubic_bspline(knot + 3 * h) - 2 * cubic_bspline(knot + 2 * h) +
                            cubic_bspline(knot + h)) / (h * h);
        CHECK(std::abs(d2l - d2r) < 1e-2);
    }
    CHECK(cubic_bspline_dratio(1e-14) == doctest::Approx(-8.0).epsilon(1e-10));
}

TEST_CASE("basis vector construction") {
    BasisSpec plain;
    const Eigen::VectorXd h = build_basis(2.0, 3.0, 1.0, 1.0, plain);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == 1.0);
    CHECK(h[1] == 2.0);
    CHECK(h[2] == 3.0);

    BasisSpec enr;
    enr.enriched = true;
    const Eigen::VectorXd h0 = build_basis(0.0, 0.0, 0.7, 0.7, enr);
    REQUIRE(h0.size() == 4);
    CHECK(h0[3] == 0.0);

    const Eigen::VectorXd h2 = build_basis(1.0, 0.0, 2.0, 1.0, enr);
    CHECK(h2[3] == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    CHECK_THROWS_AS(build_basis(0.0, 0.0, -1.0, 1.0, enr), std::invalid_argument);
    CHECK_THROWS_AS(build_basis(0.0, 0.0, 1.0, 0.0, enr), std::invalid_argument);
}

TEST_CASE("reproduction conditions at random points") {
    const NodeCloud cloud = uniform_cloud(10, 10);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ur(0.06, 1.04), uz(0.01, 0.99);

    for (const bool enriched : {false, true}) {
        BasisSpec spec;
        spec.enriched = enriched;
        for (int t = 0; t < 100; ++t) {
            const Vec2 pt(ur(rng), uz(rng));
            const RKShapeSet s = shape_functions(pt, cloud, spec);
            double pu = 0.0, rr = 0.0, zz = 0.0, lg = 0.0;
            for (size_t k = 0; k < s.nodes.size(); ++k) {
                const int i = s.nodes[k];
                const double v = s.value[static_cast<Eigen::Index>(k)];
                pu += v;
                rr += v * cloud.x[i][0];
                zz += v * cloud.x[i][1];
                lg += v * std::log(pt[0] / cloud.x[i][0]);
            }
            CHECK(std::abs(pu - 1.0) <= 1e-10);
            CHECK(std::abs(rr - pt[0]) <= 1e-10);
            CHECK(std::abs(zz - pt[1]) <= 1e-10);
            if (enriched) CHECK(std::abs(lg) <= 1e-10);
            CHECK(verify_reproduction(pt, cloud, spec) <= 1e-10);
        }
    }
}

TEST_CASE("reproduction holds at boundary points with asymmetric coverage") {
    const NodeCloud cloud = uniform_cloud(10, 10);
    BasisSpec spec;
    spec.enriched = true;
    CHECK(verify_reproduction(Vec2(0.0501, 0.0001), cloud, spec) <= 1e-10);
    CHECK(verify_reproduction(Vec2(1.0499, 0.9999), cloud, spec) <= 1e-10);
    CHECK(verify_reproduction(Vec2(0.0501, 0.5), cloud, spec) <= 1e-10);
}

TEST_CASE("compact support: nodes outside the kernel carry exactly zero") {
    const NodeCloud cloud = uniform_cloud(10, 10);
    BasisSpec spec;
    const Vec2 pt(0.5, 0.5);
    const RKShapeSet s = shape_functions(pt, cloud, spec);
    for (int i = 0; i < cloud.size(); ++i) {
        const double d = (pt - cloud.x[i]).norm();
        const bool listed = std::find(s.nodes.begin(), s.nodes.end(), i) != s.nodes.end();
        if (d >= cloud.support[i]) CHECK(!listed);
        else CHECK(listed);
    }
}

TEST_CASE("undersized supports raise a singular-moment error") {
    CellPartition p = build_rect_partition(0.05, 1.05, 0.0, 1.0, 10, 10);
    NodeCloud cloud = cloud_from_partition(p, 0.6);  // supports too small to cover
    BasisSpec spec;
    bool threw = false;
    try {
        shape_functions(Vec2(0.55, 0.55), cloud, spec);
    } catch (const SingularMomentError& e) {
        threw = true;
        CHECK(e.covering < 10);
    }
    CHECK(threw);
}

TEST_CASE("direct gradients match central finite differences") {
    const NodeCloud cloud = uniform_cloud(12, 12);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(0.1, 1.0), uz(0.05, 0.95);

    for (const bool enriched : {false, true}) {
        BasisSpec spec;
        spec.enriched = enriched;
        for (int t = 0; t < 20; ++t) {
            const Vec2 pt(ur(rng), uz(rng));
            const RKShapeSet s = shape_functions(pt, cloud, spec, true);
            REQUIRE(s.has_grad);
            const double h = 2e-7;
            const RKShapeSet sr1 = shape_functions(pt + Vec2(h, 0), cloud, spec);
            const RKShapeSet sr0 = shape_functions(pt - Vec2(h, 0), cloud, spec);
            const RKShapeSet sz1 = shape_functions(pt + Vec2(0, h), cloud, spec);
            const RKShapeSet sz0 = shape_functions(pt - Vec2(0, h), cloud, spec);
            auto value_of = [](const RKShapeSet& ss, int node) {
                for (size_t k = 0; k < ss.nodes.size(); ++k)
                    if (ss.nodes[k] == node) return ss.value[static_cast<Eigen::Index>(k)];
                return 0.0;
            };
            double scale = 0.0;
            for (Eigen::Index k = 0; k < s.grad.rows(); ++k)
                scale = std::max(scale, s.grad.row(k).cwiseAbs().maxCoeff());
            for (size_t k = 0; k < s.nodes.size(); ++k) {
                const int i = s.nodes[k];
                const double fd_r = (value_of(sr1, i) - value_of(sr0, i)) / (2 * h);
                const double fd_z = (value_of(sz1, i) - value_of(sz0, i)) / (2 * h);
                CHECK(std::abs(s.grad(static_cast<Eigen::Index>(k), 0) - fd_r) <= 1e-6 * scale);
                CHECK(std::abs(s.grad(static_cast<Eigen::Index>(k), 1) - fd_z) <= 1e-6 * scale);
            }
        }
    }
}

TEST_CASE("enrichment cutoff drops the log column far from the axis") {
    const NodeCloud cloud = uniform_cloud(10, 10);
    BasisSpec cut;
    cut.enriched = true;
    cut.enrich_cutoff_r = 0.5;
    BasisSpec plain;

    const Vec2 far(0.9, 0.5);
    const RKShapeSet a = shape_functions(far, cloud, cut);
    const RKShapeSet b = shape_functions(far, cloud, plain);
    REQUIRE(a.nodes == b.nodes);
    CHECK((a.value - b.value).cwiseAbs().maxCoeff() < 1e-14);

    const Vec2 near(0.2, 0.5);
    const RKShapeSet c = shape_functions(near, cloud, cut);
    double lg = 0.0;
    for (size_t k = 0; k < c.nodes.size(); ++k)
        lg += c.value[static_cast<Eigen::Index>(k)] * std::log(near[0] / cloud.x[c.nodes[k]][0]);
    CHECK(std::abs(lg) <= 1e-10);
}

TEST_CASE("singular kernel nodes interpolate at their centers") {
    CellPartition p = build_rect_partition(0.00625, 0.2773, 0.0, 0.21, 12, 8);
    NodeCloud cloud = cloud_from_partition(p, 2.0, true, true);
    BasisSpec spec;
    spec.enriched = true;

    // left column nodes sit on r = R_i and carry singular kernels
    for (int j = 0; j < 8; ++j) {
        const int id = j * 12;
        CHECK(cloud.x[id][0] == doctest::Approx(0.00625).epsilon(1e-14));
        const RKShapeSet s = shape_functions(cloud.x[id], cloud, spec);
        for (size_t k = 0; k < s.nodes.size(); ++k)
            CHECK(s.value[static_cast<Eigen::Index>(k)] ==
                  doctest::Approx(s.nodes[k] == id ? 1.0 : 0.0).epsilon(1e-12));
    }

    // partition of unity still holds away from the centers
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.007, 0.27), uz(0.001, 0.209);
    for (int t = 0; t < 50; ++t) {
        const Vec2 pt(ur(rng), uz(rng));
        CHECK(verify_reproduction(pt, cloud, spec) <= 1e-10);
    }
}
