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

#include <twosphere/acoustic.hpp>
#include <twosphere/geometry.hpp>

using namespace twosphere;
using namespace twosphere::acoustic;

namespace {

Vec3 unit(double th, double ph) { return geometry::SpherePoint::spherical(1.0, th, ph).cart; }

// deterministic scatter of points in a shell
std::vector<Vec3> shell_points(int n, double rmin, double rmax, unsigned seed)
{
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i)
    {
        double u = std::fmod(0.6180339887498949 * (i + seed), 1.0);
        double v = std::fmod(0.7548776662466927 * (i + seed), 1.0);
        double w = std::fmod(0.5698402909980532 * (i + seed), 1.0);
        out.push_back((rmin + (rmax - rmin) * w) * unit(std::acos(1.0 - 2.0 * u), 2.0 * pi * v));
    }
    return out;
}

double fd_helmholtz(const std::function<cplx(const Vec3 &)> &f, const Vec3 &x, double k, double h)
{
    cplx lap = -6.0 * f(x);
    for (int d = 0; d < 3; ++d)
    {
        Vec3 e = Vec3::Zero();
        e[d] = h;
        lap += f(x + e) + f(x - e);
    }
    return std::abs(lap / (h * h) + k * k * f(x));
}

} // namespace

TEST_CASE("acoustic - fundamental solution")
{
    cplx v = fundamental_solution(1.0, Vec3(1, 0, 0), Vec3(0, 0, 0));
    CHECK(std::abs(v - cplx(0.042996, 0.066962)) < 1e-6);
    CHECK(std::abs(v - std::exp(I) / (4.0 * pi)) < 1e-16);
    Vec3 x(0.3, -1.2, 2.0), y(-0.7, 0.4, 0.1);
    CHECK(fundamental_solution(2.3, x, y) == fundamental_solution(2.3, y, x));
    CHECK(std::abs(std::abs(fundamental_solution(2.3, 1e6 * x, y)) - 1.0 / (4.0 * pi * (1e6 * x - y).norm())) <
          1e-22);
    CHECK_THROWS_AS(fundamental_solution(1.0, x, x), SingularityError);

    auto f = [&](const Vec3 &p) { return fundamental_solution(2.3, p, y); };
    double r1 = fd_helmholtz(f, x, 2.3, 1e-2), r2 = fd_helmholtz(f, x, 2.3, 5e-3);
    CHECK(r2 < r1);
    CHECK(r1 / r2 > 3.5);
}

TEST_CASE("acoustic - sphere boundary conditions")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto grid = geometry::sphere_grid(0.5, 10, 20, geometry::GridScheme::gauss_legendre);
    for (Vec3 y : {Vec3(1.0, 0.0, 0.0), Vec3(0.3, -1.1, 1.4), Vec3(0.0, 0.0, 0.7)})
    {
        auto soft = solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), y);
        auto neu = solve_sphere_point_source(cfg, SphereScatterer::impedance(0.5, 0.0), y);
        cplx eta(1.5, 0.7);
        auto imp = solve_sphere_point_source(cfg, SphereScatterer::impedance(0.5, eta), y);
        double rs = 0.0, rn = 0.0, ri = 0.0;
        for (const auto &p : grid.points)
        {
            rs = std::max(rs, std::abs(soft.total(p.cart)));
            rn = std::max(rn, std::abs(neu.total_radial_derivative(p.cart)));
            ri = std::max(ri, std::abs(imp.total_radial_derivative(p.cart) + eta * imp.total(p.cart)));
        }
        CHECK(rs < 1e-8);
        CHECK(rn < 1e-8);
        CHECK(ri < 1e-8);
        CHECK(soft.trunc_certificate() < 1e-12);
    }
    CHECK_THROWS_AS(solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), Vec3(0.2, 0, 0)), DomainError);
    // a source hugging the obstacle needs more orders than h_n(ka) can represent
    CHECK_THROWS_AS(solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), Vec3(0, 0, 0.52)), SolverError);
    CHECK_THROWS_AS(solve_sphere_point_source(cfg, SphereScatterer::impedance(0.5, cplx(1, -1)), Vec3(1, 0, 0)),
                    DomainError);
}

TEST_CASE("acoustic - point source reciprocity")
{
    AcousticConfig cfg{1.0, 1.0, 2.0};
    auto sc = SphereScatterer::sound_soft(0.5);
    auto pts = shell_points(40, 0.6, 3.0, 3);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i)
    {
        Vec3 x = pts[2 * i], y = pts[2 * i + 1];
        if (i == 0)
            y = Vec3(2, 0, 0);
        cplx a = solve_sphere_point_source(cfg, sc, y).scattered(x);
        cplx b = solve_sphere_point_source(cfg, sc, x).scattered(y);
        worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("acoustic - plane wave")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto sc = SphereScatterer::sound_soft(0.5);
    Vec3 d = unit(0.9, 2.0);
    auto f = solve_sphere_plane_wave(cfg, sc, d);
    auto grid = geometry::sphere_grid(0.5, 10, 20, geometry::GridScheme::gauss_legendre);
    double res = 0.0;
    for (const auto &p : grid.points)
        res = std::max(res, std::abs(f.total(p.cart)));
    CHECK(res < 1e-8);

    // rotate d and the probe points together
    Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 2, -1).normalized()).toRotationMatrix();
    auto g = solve_sphere_plane_wave(cfg, sc, R * d);
    for (const auto &x : shell_points(10, 0.6, 3.0, 5))
        CHECK(std::abs(f.scattered(x) - g.scattered(R * x)) < 1e-10 * std::max(1.0, std::abs(f.scattered(x))));

    CHECK_THROWS_AS(solve_sphere_plane_wave(cfg, sc, Vec3(1, 1, 0)), DomainError);
}

TEST_CASE("acoustic - far field")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto sc = SphereScatterer::sound_soft(0.5);
    for (auto f : {solve_sphere_point_source(cfg, sc, Vec3(0.4, 1.0, -0.2)), solve_sphere_plane_wave(cfg, sc, Vec3(0, 0, 1))})
    {
        Vec3 xh = unit(1.2, 0.4);
        // Richardson extrapolation of r e^{-ikr} w^s(r xhat) over r = 1e2, 1e3, 1e4 times R1
        auto g = [&](double r) { return r * std::exp(-I * cfg.k * r) * f.scattered(r * xh); };
        cplx g2 = g(1e3), g3 = g(1e4);
        cplx rich = (10.0 * g3 - g2) / 9.0;
        CHECK(std::abs(rich - f.far_field(xh)) < 1e-8);
        CHECK(std::abs(g(1e2) - f.far_field(xh)) < 1e-2);
    }
}

TEST_CASE("acoustic - radiation residual")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto f = solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), Vec3(1, 0, 0));
    Vec3 xh = unit(0.7, 1.9);
    double r10 = radiation_residual(f, 10.0, xh), r100 = radiation_residual(f, 100.0, xh);
    CHECK(r10 / r100 > 10.0 / 1.5);
    CHECK(r10 / r100 < 10.0 * 1.5);
    // Phi with y at the origin: residual is exactly 1/(4 pi r)
    for (double r : {10.0, 100.0, 1000.0})
        CHECK(std::abs(radiation_residual_point_source(2.0, Vec3::Zero(), r, xh) - 1.0 / (4.0 * pi * r)) < 1e-12);
}

TEST_CASE("acoustic - superposition")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto sc = SphereScatterer::impedance(0.5, cplx(0.5, 0.2));
    Vec3 y1(1.0, 0.2, 0.0), y2(-0.3, 1.0, 0.5), x(0.1, -1.5, 0.7);
    auto f1 = solve_sphere_point_source(cfg, sc, y1);
    auto f2 = solve_sphere_point_source(cfg, sc, y2);
    CHECK(total_field_superposed(f1, f2.deactivated(), x) == f1.total(x));
    CHECK(total_field_superposed(f1, f1, x) == 2.0 * f1.total(x));
    cplx s = total_field_superposed(f1, f2, x), a = f1.total(x), b = f2.total(x);
    CHECK(std::abs(std::norm(s) - std::norm(a) - std::norm(b) - 2.0 * (a * std::conj(b)).real()) <
          1e-14 * std::norm(s));
    auto other = solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), y2);
    CHECK_THROWS_AS(total_field_superposed(f1, other, x), DomainError);
}

TEST_CASE("acoustic - field identities")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    Vec3 y(0.0, 0.8, 0.9);
    auto f = solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), y);

    // scattered field solves Helmholtz with O(h^2) finite-difference residual
    Vec3 x(0.9, -0.4, 0.3);
    auto ws = [&](const Vec3 &p) { return f.scattered(p); };
    double e1 = fd_helmholtz(ws, x, cfg.k, 2e-2), e2 = fd_helmholtz(ws, x, cfg.k, 1e-2);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);

    // total field singular like Phi near the source
    for (double eps : {1e-3, 1e-5, 1e-7})
    {
        Vec3 p = y + eps * Vec3(1, 1, 1).normalized();
        CHECK(std::abs(std::abs(f.total(p)) * 4.0 * pi * eps - 1.0) < 20.0 * eps);
    }

    // |w(x, y0)| on the outer sphere is not identically small
    auto g = geometry::sphere_grid(2.0, 8, 16, geometry::GridScheme::gauss_legendre);
    double mx = 0.0;
    for (const auto &p : g.points)
        mx = std::max(mx, std::abs(f.total(p.cart)));
    CHECK(mx > 1e-6);

    auto j = f.to_json();
    CHECK(j["kind"] == "modal_series");
    CHECK(j["trunc_certificate"].get<double>() < 1e-12);
}

TEST_CASE("acoustic - mixed reciprocity")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    for (auto sc : {SphereScatterer::sound_soft(0.5), SphereScatterer::impedance(0.5, cplx(1.0, 0.3))})
    {
        double worst = 0.0;
        for (const auto &z : shell_points(6, 0.7, 2.5, 11))
            for (const auto &dd : shell_points(6, 1.0, 1.0, 17))
            {
                cplx lhs = 4.0 * pi * solve_sphere_point_source(cfg, sc, z).far_field(-dd);
                cplx rhs = solve_sphere_plane_wave(cfg, sc, dd).scattered(z);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        CHECK(worst < 1e-8);
    }
}
