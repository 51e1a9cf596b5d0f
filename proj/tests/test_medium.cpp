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

double fd_helmholtz(const AcousticField &f, const Vec3 &x, double h)
{
    cplx lap = -6.0 * f.scattered(x);
    for (int d = 0; d < 3; ++d)
    {
        Vec3 e = Vec3::Zero();
        e[d] = h;
        lap += f.scattered(x + e) + f.scattered(x - e);
    }
    return std::abs(lap / (h * h) + f.k() * f.k() * f.scattered(x));
}

} // namespace

TEST_CASE("medium - no contrast means no scattering")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto med = MediumSample::ball(16, 0.5, 0.5, 1.0);
    auto f = solve_medium_ls(cfg, med, Vec3(1.0, 0.1, 0.0));
    for (Vec3 x : {Vec3(1.5, 0, 0), Vec3(0, -1.2, 0.4)})
        CHECK(f.scattered(x) == cplx(0.0));
    CHECK(f.far_field(Vec3(0, 0, 1)) == cplx(0.0));
}

TEST_CASE("medium - discrete equation residual and reciprocity")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto med = MediumSample::ball(32, 0.5, 0.45, cplx(1.3, 0.05));
    MediumSolver solver(cfg, med);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i)
    {
        Vec3 x = (1.0 + 0.1 * i) * unit(0.3 + 0.25 * i, 0.7 * i);
        Vec3 y = (2.0 - 0.08 * i) * unit(2.8 - 0.2 * i, 1.0 + 0.5 * i);
        auto fy = solver.solve(Source::point(y)), fx = solver.solve(Source::point(x));
        CHECK(fy.ls_residual() < 1e-8);
        cplx a = fy.scattered(x), b = fx.scattered(y);
        worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("medium - Born regime")
{
    // compact weak medium: the LS - Born remainder is O(delta (k rho)^2) relative to w^s
    AcousticConfig cfg{1.0, 1.0, 2.0};
    auto med = MediumSample::ball(32, 0.1, 0.1, 1.0 + 1e-4);
    Vec3 y(1.0, 0.2, 0.3);
    auto f = solve_medium_ls(cfg, med, y);
    for (Vec3 x : {Vec3(-0.3, 1.5, 0.4), Vec3(0.0, 0.0, 1.9), Vec3(1.2, -1.2, 0.1)})
    {
        cplx b = born_scattered(cfg, med, Source::point(y), x);
        CHECK(std::abs(f.scattered(x) - b) / std::abs(b) < 1e-6);
    }

    // default-size ball: remainder is linear in the contrast and second order against w^i
    AcousticConfig c2{2.0, 1.0, 2.0};
    Vec3 x(-0.3, 1.5, 0.4);
    double rel[2];
    int i = 0;
    for (double delta : {1e-4, 1e-3})
    {
        auto m = MediumSample::ball(32, 0.5, 0.5, 1.0 + delta);
        auto g = solve_medium_ls(c2, m, y);
        cplx b = born_scattered(c2, m, Source::point(y), x);
        rel[i++] = std::abs(g.scattered(x) - b) / std::abs(b);
        if (delta == 1e-4)
            CHECK(std::abs(g.scattered(x) - b) / std::abs(g.incident(x)) < 1e-6);
    }
    CHECK(std::abs(rel[1] / rel[0] - 10.0) < 0.1);
}

TEST_CASE("medium - exterior Helmholtz residual is O(h^2)")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto f = solve_medium_ls(cfg, MediumSample::ball(24, 0.5, 0.5, 1.2), Vec3(0.0, 1.0, 0.2));
    Vec3 x(1.3, 0.4, -0.6);
    double e1 = fd_helmholtz(f, x, 2e-2), e2 = fd_helmholtz(f, x, 1e-2);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("medium - far field and radiation")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    auto f = solve_medium_ls(cfg, MediumSample::ball(16, 0.5, 0.5, 1.5), Vec3(0.0, 0.0, 1.0));
    Vec3 xh = unit(1.0, 2.0);
    auto g = [&](double r) { return r * std::exp(-I * cfg.k * r) * f.scattered(r * xh); };
    cplx rich = (10.0 * g(1e4) - g(1e3)) / 9.0;
    CHECK(std::abs(rich - f.far_field(xh)) < 1e-8 * std::abs(f.far_field(xh)) + 1e-12);
    double r10 = radiation_residual(f, 10.0, xh), r100 = radiation_residual(f, 100.0, xh);
    CHECK(r10 / r100 > 10.0 / 1.5);
    CHECK(r10 / r100 < 15.0);
}

TEST_CASE("medium - strong contrast uses the dense path")
{
    AcousticConfig cfg{3.0, 1.0, 2.0};
    auto med = MediumSample::ball(8, 0.5, 0.5, cplx(6.0, 0.5));
    auto f = solve_medium_ls(cfg, med, Vec3(1.0, 0.0, 0.0));
    CHECK(f.ls_residual() < 1e-8);
    LsOptions opt;
    opt.dense_limit = 0;
    opt.max_iter = 3;
    CHECK_THROWS_AS(solve_medium_ls(cfg, med, Vec3(1.0, 0.0, 0.0), opt), SolverError);
}

TEST_CASE("medium - validation and source placement")
{
    AcousticConfig cfg{2.0, 1.0, 2.0};
    CHECK_THROWS_AS(solve_medium_ls(cfg, MediumSample::ball(8, 0.9, 2.0, 1.1), Vec3(1.5, 0, 0)), DomainError);
    CHECK_THROWS_AS(solve_medium_ls(cfg, MediumSample::ball(8, 0.5, 0.5, cplx(1.1, -0.1)), Vec3(1.5, 0, 0)),
                    DomainError);

    // a source exactly on a voxel centre outside the support
    auto m = MediumSample::from_function(8, 0.8, [](const Vec3 &z) { return z.norm() < 0.3 ? cplx(1.1) : cplx(1.0); });
    Vec3 c = m.center(7, 7, 7);
    REQUIRE(c.norm() > m.support_radius());
    CHECK_THROWS_AS(solve_medium_ls(cfg, m, c), SingularityError);
    LsOptions opt;
    opt.offset_sources = true;
    auto f = solve_medium_ls(cfg, m, c, opt);
    CHECK((f.source().v - c).norm() > 0.0);

    auto j = MediumSample::from_json(m.to_json());
    CHECK(j.n_values == m.n_values);
}
