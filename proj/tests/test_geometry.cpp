#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "eyring/geometry.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace eyring;
using eyring::testing::pt;

namespace {

const Expression half_norm_sq_2 = parse("0.5*(x1^2+x2^2)", 2);
const Expression half_norm_sq_3 = parse("0.5*(x1^2+x2^2+x3^2)", 3);

// Ellipse x²/A² + y²/B² < 1 rotated by θ about the origin.
ImplicitDomain rotated_ellipse(double A, double B, double theta) {
    const std::string c = std::to_string(std::cos(theta));
    const std::string s = std::to_string(std::sin(theta));
    // u = c x1 + s x2, v = −s x1 + c x2 (inverse rotation)
    const std::string u = "(" + c + "*x1 + " + s + "*x2)";
    const std::string v = "(-" + s + "*x1 + " + c + "*x2)";
    const std::string g = u + "^2/" + std::to_string(A * A) + " + " + v + "^2/" +
                          std::to_string(B * B) + " - 1";
    const double r = std::max(A, B) * 1.01;
    Box box;
    box.axes = {{-r, r}, {-r, r}};
    return ImplicitDomain(parse(g, 2), box);
}

}  // namespace

TEST_SUITE("geometry") {
    TEST_CASE("projection onto the disc is radial") {
        const auto disc = ImplicitDomain::ball(pt({0.0, -1.0}), 2.0);
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int k = 0; k < 200; ++k) {
            const Point x = pt({u(rng), u(rng) - 1.0});
            const Point c = pt({0.0, -1.0});
            if ((x - c).norm() < 1e-3) continue;
            const Point z = project_to_boundary(disc, x);
            CHECK(std::fabs(disc.value(z)) <= 1e-12);
            const Point radial = c + 2.0 * (x - c).normalized();
            CHECK((z - radial).norm() <= 1e-10);
        }
    }

    TEST_CASE("projection fails where the gradient of g vanishes") {
        const auto disc = ImplicitDomain::ball(pt({0.0, -1.0}), 2.0);
        CHECK_THROWS_AS((void)project_to_boundary(disc, pt({0.0, -1.0})), ProjectionError);
    }

    TEST_CASE("boundary frame is orthonormal with an outward normal") {
        const auto sphere = ImplicitDomain::ball(pt({0.0, 0.0, -1.0}), 2.0);
        std::mt19937_64 rng(2);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int k = 0; k < 100; ++k) {
            Point dir = pt({n(rng), n(rng), n(rng)}).normalized();
            const Point z = pt({0.0, 0.0, -1.0}) + 2.0 * dir;
            const BoundaryFrame frame = boundary_frame(sphere, z);
            CHECK((frame.normal - dir).norm() <= 1e-12);
            Matrix q(3, 3);
            q << frame.normal, frame.tangents;
            CHECK((q.transpose() * q - Matrix::Identity(3, 3)).norm() <= 1e-12);
        }
    }

    TEST_CASE("disc saddle of the worked example") {
        const auto disc = ImplicitDomain::ball(pt({0.0, -1.0}), 2.0);
        const BoundaryHessian bh = boundary_hessian(disc, half_norm_sq_2, pt({0.0, 1.0}));
        const double oracle = testing::circle_arc_second_derivative_half_norm_sq({0.0, -1.0}, 2.0, {0.0, 1.0});
        REQUIRE(bh.h.rows() == 1);
        CHECK(bh.h(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(bh.det == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(bh.mu == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("sphere saddle: restricted Hessian is I/2") {
        const auto sphere = ImplicitDomain::ball(pt({0.0, 0.0, -1.0}), 2.0);
        const BoundaryHessian bh = boundary_hessian(sphere, half_norm_sq_3, pt({0.0, 0.0, 1.0}));
        REQUIRE(bh.h.rows() == 2);
        CHECK((bh.h - 0.5 * Matrix::Identity(2, 2)).norm() <= 1e-12);
        CHECK(bh.det == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(bh.mu == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("unit disc centred at the minimum is degenerate") {
        const auto disc = ImplicitDomain::ball(pt({0.0, 0.0}), 1.0);
        const BoundaryHessian bh = boundary_hessian(disc, half_norm_sq_2, pt({1.0, 0.0}));
        CHECK(std::fabs(bh.det) <= 1e-12);
    }

    TEST_CASE("ellipse saddles agree with the arc-length oracle") {
        const auto domain = ImplicitDomain(parse("x1^2/4 + x2^2 - 1", 2), Box{{{-2.0, 2.0}, {-1.0, 1.0}}});
        for (double theta : {std::numbers::pi / 2, -std::numbers::pi / 2}) {
            const Point z = pt({2.0 * std::cos(theta), std::sin(theta)});
            const BoundaryHessian bh = boundary_hessian(domain, half_norm_sq_2, z);
            const double oracle = testing::ellipse_arc_second_derivative_half_norm_sq(2.0, 1.0, theta);
            CHECK(bh.h(0, 0) == doctest::Approx(oracle).epsilon(1e-10));
            CHECK(oracle == doctest::Approx(0.75).epsilon(1e-12));
        }
        // The minor-axis ends are maxima of f on the ellipse: negative curvature.
        const BoundaryHessian bh = boundary_hessian(domain, half_norm_sq_2, pt({2.0, 0.0}));
        CHECK(bh.h(0, 0) == doctest::Approx(testing::ellipse_arc_second_derivative_half_norm_sq(2.0, 1.0, 0.0)));
        CHECK(bh.h(0, 0) < 0.0);
    }

    TEST_CASE("restricted Hessian does not depend on the orientation of the domain") {
        for (double theta : {0.1, 0.7, 1.3, 2.9}) {
            const auto domain = rotated_ellipse(2.0, 1.0, theta);
            // (0, 1) in the ellipse frame, rotated into place.
            const Point z = pt({-std::sin(theta), std::cos(theta)});
            const Point zp = project_to_boundary(domain, z);
            const BoundaryHessian bh = boundary_hessian(domain, half_norm_sq_2, zp, 1e-6);
            CHECK(bh.det == doctest::Approx(0.75).epsilon(1e-5));
            CHECK(bh.mu == doctest::Approx(1.0).epsilon(1e-5));
        }
    }

    TEST_CASE("interval endpoints have an empty restricted Hessian") {
        const auto domain = ImplicitDomain(parse("(x1+1)*(x1-2)", 1), Box{{{-1.0, 2.0}}});
        const Expression f = parse("x1^2/2", 1);
        const BoundaryHessian left = boundary_hessian(domain, f, pt({-1.0}));
        CHECK(left.h.rows() == 0);
        CHECK(left.det == 1.0);
        CHECK(left.mu == doctest::Approx(1.0));
        CHECK(left.frame.normal[0] == doctest::Approx(-1.0));
        const BoundaryHessian right = boundary_hessian(domain, f, pt({2.0}));
        CHECK(right.mu == doctest::Approx(2.0));
        CHECK(determinant(Matrix(0, 0)) == 1.0);
    }

    TEST_CASE("restricted Hessian refuses non-critical points") {
        const auto disc = ImplicitDomain::ball(pt({0.0, -1.0}), 2.0);
        const Point z = pt({std::sqrt(2.0), -1.0 + std::sqrt(2.0)});
        try {
            (void)boundary_hessian(disc, half_norm_sq_2, z);
            FAIL("expected NotCriticalError");
        } catch (const NotCriticalError& e) {
            CHECK(e.tangential_gradient() > 0.1);
        }
    }

    TEST_CASE("box helpers") {
        const Box box{{{-2.0, 2.0}, {-1.0, 1.0}}};
        CHECK(box.contains(pt({0.0, 0.0})));
        CHECK_FALSE(box.contains(pt({0.0, 1.5})));
        CHECK(box.diameter() == doctest::Approx(std::sqrt(20.0)));
        CHECK(box.max_side() == 4.0);
        const auto disc = ImplicitDomain::ball(pt({0.0, -1.0}), 2.0);
        CHECK(disc.bbox().axes[1].first == doctest::Approx(-3.0));
        CHECK(disc.inside(pt({0.0, 0.0})));
        CHECK_FALSE(disc.inside(pt({0.0, 1.0})));
    }
}
