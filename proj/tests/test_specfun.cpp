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
#include <twosphere/specfun.hpp>

#include "reference_values.hpp"

using namespace twosphere;
using namespace twosphere::specfun;

static double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST_CASE("specfun - modal table trivial values")
{
    auto t = modal_table(0, pi);
    CHECK(std::abs(t.j[0]) < 1e-16);
    CHECK(t.j[0] == std::sin(pi) / pi);

    auto u = modal_table(0, pi / 2.0);
    CHECK(std::abs(u.y[0]) < 1e-16);

    auto w = modal_table(5, 2.0);
    for (int n = 0; n <= 5; ++n)
        CHECK(std::abs(w.j[n] * w.yp[n] - w.jp[n] * w.y[n] - 0.25) < 1e-12);

    CHECK_THROWS_AS(modal_table(3, 0.0), DomainError);
    CHECK_THROWS_AS(modal_table(3, -1.0), DomainError);
}

TEST_CASE("specfun - Wronskian lattice")
{
    // 200 arguments log-spaced in [0.1, 100], all orders up to 60
    double worst = 0.0;
    for (int i = 0; i < 200; ++i)
    {
        double x = 0.1 * std::pow(1000.0, i / 199.0);
        auto t = modal_table(60, x);
        for (int n = 0; n <= 60; ++n)
        {
            double w = t.j[n] * t.yp[n] - t.jp[n] * t.y[n];
            worst = std::max(worst, rel(w, 1.0 / (x * x)));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("specfun - arbitrary precision references")
{
    for (const auto &r : refdata::bessel)
    {
        auto t = modal_table(r.n, r.x);
        CHECK(rel(t.j[r.n], r.j) < 1e-11);
        CHECK(rel(t.y[r.n], r.y) < 1e-11);
    }
}

TEST_CASE("specfun - truncation notice")
{
    auto t = modal_table(400, 0.1);
    CHECK(t.truncated);
    CHECK(!modal_table(60, 0.1).truncated);
}

TEST_CASE("specfun - legendre")
{
    auto p = legendre(3, 1.0);
    for (double v : p)
        CHECK(v == 1.0);
    CHECK(legendre(2, 0.0)[2] == -0.5);
    CHECK(legendre(1, -1.0)[1] == -1.0);
    CHECK_THROWS_AS(legendre(2, 1.0 + 1e-12), DomainError);
}

TEST_CASE("specfun - spherical harmonics")
{
    CHECK(std::abs(sph_harmonic(0, 0, 0.7, 2.1) - 1.0 / std::sqrt(4.0 * pi)) < 1e-15);
    CHECK(std::abs(sph_harmonic(1, 0, 0.0, 0.0) - std::sqrt(3.0 / (4.0 * pi))) < 1e-15);
    CHECK_THROWS_AS(sph_harmonic(1, 2, 0.3, 0.0), DomainError);

    // closed form Y_2^1 = -sqrt(15/8pi) sin cos e^{i phi}
    double th = 0.8, ph = 1.3;
    cplx y21 = -std::sqrt(15.0 / (8.0 * pi)) * std::sin(th) * std::cos(th) * std::exp(I * ph);
    CHECK(std::abs(sph_harmonic(2, 1, th, ph) - y21) < 1e-14);
    CHECK(std::abs(sph_harmonic(2, -1, th, ph) + std::conj(y21)) < 1e-14);

    auto g = geometry::sphere_grid(1.0, 32, 64, geometry::GridScheme::gauss_legendre);
    double s = 0.0;
    cplx cross = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        cplx y = sph_harmonic(2, 1, g.points[i].theta, g.points[i].phi);
        s += g.weights[i] * std::norm(y);
        cross += g.weights[i] * y * std::conj(sph_harmonic(3, 1, g.points[i].theta, g.points[i].phi));
    }
    CHECK(std::abs(s - 1.0) < 1e-10);
    CHECK(std::abs(cross) < 1e-12);
}

TEST_CASE("specfun - addition theorem and derivatives")
{
    double t1 = 0.4, p1 = 0.2, t2 = 2.3, p2 = 4.0;
    Vec3 a(std::sin(t1) * std::cos(p1), std::sin(t1) * std::sin(p1), std::cos(t1));
    Vec3 b(std::sin(t2) * std::cos(p2), std::sin(t2) * std::sin(p2), std::cos(t2));
    auto A = angular_table(12, t1, p1), B = angular_table(12, t2, p2);
    auto P = legendre(12, a.dot(b));
    for (int n = 0; n <= 12; ++n)
    {
        cplx s = 0.0;
        for (int m = -n; m <= n; ++m)
            s += A.Y(n, m) * std::conj(B.Y(n, m));
        CHECK(std::abs(s - (2 * n + 1) / (4.0 * pi) * P[n]) < 1e-10);
    }

    // theta derivative against central differences, i m Y / sin against direct evaluation
    double th = 1.1, ph = 0.6, h = 1e-6;
    auto T = angular_table(10, th, ph);
    for (int n = 0; n <= 10; ++n)
        for (int m = -n; m <= n; ++m)
        {
            cplx fd = (sph_harmonic(n, m, th + h, ph) - sph_harmonic(n, m, th - h, ph)) / (2.0 * h);
            CHECK(std::abs(fd - T.dY(n, m)) < 1e-8);
            CHECK(std::abs(T.imY_sin(n, m) - I * double(m) * T.Y(n, m) / std::sin(th)) < 1e-12);
        }
}

TEST_CASE("specfun - gauss legendre")
{
    auto g = gauss_legendre(10);
    double s = 0.0, m4 = 0.0;
    for (int i = 0; i < 10; ++i)
    {
        s += g.weights[i];
        m4 += g.weights[i] * std::pow(g.nodes[i], 18);
    }
    CHECK(std::abs(s - 2.0) < 1e-14);
    CHECK(std::abs(m4 - 2.0 / 19.0) < 1e-14);
}
