// SPDX-License-Identifier: Apache-2.0
//
// twosphere - phaseless near-field scattering toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#include "catch_amalgamated.hpp"

#include <twosphere/geometry.hpp>

using namespace twosphere;
using namespace twosphere::geometry;

TEST_CASE("geometry - tangent frames")
{
    auto f = tangent_frame(SpherePoint::spherical(1.0, pi / 2.0, 0.0));
    CHECK((f.e_phi - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((f.e_theta - Vec3(0, 0, -1)).norm() < 1e-15);

    auto g = tangent_frame(SpherePoint::spherical(2.0, pi / 2.0, pi / 2.0));
    CHECK((g.e_phi - Vec3(-1, 0, 0)).norm() < 1e-15);

    CHECK_THROWS_AS(tangent_frame(SpherePoint::spherical(1.0, 0.0, 0.0)), PoleError);
    CHECK_THROWS_AS(tangent_frame(SpherePoint::spherical(1.0, pi, 0.3)), PoleError);

    auto grid = sphere_grid(1.5, 9, 14, GridScheme::gauss_legendre);
    for (const auto &p : grid.points)
    {
        auto t = tangent_frame(p);
        CHECK(std::abs(t.e_phi.dot(t.e_theta)) < 1e-12);
        CHECK(std::abs(t.e_phi.norm() - 1.0) < 1e-12);
        CHECK(std::abs(t.e_theta.norm() - 1.0) < 1e-12);
        CHECK(std::abs(t.nu.dot(t.e_phi)) < 1e-12);
        CHECK(std::abs(t.nu.dot(t.e_theta)) < 1e-12);
        CHECK((t.e_phi.cross(t.nu) - t.e_theta).norm() < 1e-12);
        CHECK((t.nu - p.unit()).norm() < 1e-12);
    }
}

TEST_CASE("geometry - chart round trip")
{
    auto grid = sphere_grid(3.0, 7, 11, GridScheme::uniform_offset);
    for (const auto &p : grid.points)
    {
        CHECK(std::abs(p.cart.norm() - p.r) < 1e-12 * p.r);
        auto q = SpherePoint::cartesian(p.cart);
        auto back = SpherePoint::spherical(q.r, q.theta, q.phi);
        CHECK((back.cart - p.cart).norm() < 1e-12 * p.r);
    }
}

TEST_CASE("geometry - sphere grids")
{
    auto sum = [](const SphereGrid &g) {
        double s = 0.0;
        for (double w : g.weights)
            s += w;
        return s;
    };
    CHECK(std::abs(sum(sphere_grid(1.0, 16, 32, GridScheme::gauss_legendre)) - 4.0 * pi) < 1e-12);
    CHECK(std::abs(sum(sphere_grid(2.0, 8, 16, GridScheme::gauss_legendre)) - 16.0 * pi) < 1e-10);

    auto u = sphere_grid(1.0, 4, 8, GridScheme::uniform_offset);
    CHECK(u.size() == 32);
    for (const auto &p : u.points)
        CHECK(!p.is_pole());
    CHECK(u.weights.empty());

    CHECK_THROWS_AS(sphere_grid(1.0, 1, 8, GridScheme::gauss_legendre), DomainError);
    CHECK_THROWS_AS(sphere_grid(1.0, 4, 3, GridScheme::gauss_legendre), DomainError);
}

TEST_CASE("geometry - great circles")
{
    auto c = SpherePoint::spherical(1.0, pi / 2.0, 0.0);
    auto fr = tangent_frame(c);
    auto pts = great_circle(c, fr.e_phi, 10, 0.1);
    REQUIRE(pts.size() == 10);
    CHECK((pts[0].cart - c.cart).norm() <= 0.1 / 10 + 1e-15);
    double prev = 0.0;
    for (const auto &p : pts)
    {
        CHECK(std::abs(p.cart.norm() - 1.0) < 1e-12);
        CHECK(std::abs((p.cart - c.cart).dot(fr.e_phi)) < 1e-10);
        double d = (p.cart - c.cart).norm();
        CHECK(d > prev);
        prev = d;
    }

    Vec3 v = (fr.e_phi + fr.e_theta).normalized();
    auto c2 = SpherePoint::spherical(2.0, 1.2, 0.7);
    auto f2 = tangent_frame(c2);
    Vec3 v2 = (f2.e_phi + f2.e_theta).normalized();
    for (const auto &p : great_circle(c2, v2, 20, 0.5))
    {
        CHECK(std::abs((p.cart - c2.cart).dot(v2)) < 1e-10);
        CHECK(std::abs(p.cart.norm() - 2.0) < 1e-12);
    }
    for (const auto &p : great_circle(c, v, 5, 0.3))
        CHECK(std::abs((p.cart - c.cart).dot(v)) < 1e-10);

    CHECK_THROWS_AS(great_circle(c, fr.nu, 5, 0.1), DomainError);
}
