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

// Acceptance run: one PASS/FAIL line per criterion.
// usage: acceptance PATH_TO_TWOSPHERE_CLI

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <twosphere/eigencheck.hpp>
#include <twosphere/verify.hpp>

#include "reference_values.hpp"

using namespace twosphere;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool ok = true;
    std::ostringstream note;

    void require(bool cond, const std::string &what)
    {
        if (!cond)
        {
            ok = false;
            note << " [" << what << "]";
        }
    }
};

const acoustic::AcousticConfig cfg{2.0, 1.0, 2.0};

geometry::SphereGrid grid(double r, int nt, int np)
{
    return geometry::sphere_grid(r, nt, np, geometry::GridScheme::gauss_legendre);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string cli;
fs::path scratch;

// ---------------------------------------------------------------------------------------------

void special_functions(Outcome &o)
{
    double worst = 0.0;
    for (int i = 0; i < 200; ++i)
    {
        const double x = 0.1 * std::pow(1000.0, i / 199.0);
        const auto t = specfun::modal_table(60, x);
        for (int n = 0; n <= 60; ++n)
            worst = std::max(worst, rel(t.j[n] * t.yp[n] - t.jp[n] * t.y[n], 1.0 / (x * x)));
    }
    o.note << " wronskian " << worst;
    o.require(worst < 1e-10, "wronskian");
    double spot = 0.0;
    for (const auto &r : refdata::bessel)
    {
        const auto t = specfun::modal_table(r.n, r.x);
        spot = std::max({spot, rel(t.j[r.n], r.j), rel(t.y[r.n], r.y)});
    }
    o.note << " references " << spot;
    o.require(spot < 1e-11, "references");
}

double fd_helmholtz(const acoustic::AcousticField &f, const Vec3 &x, double h)
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

void forward_solvers(Outcome &o)
{
    using acoustic::SphereScatterer;
    const auto surface = grid(0.5, 10, 20);
    double rs = 0.0, rn = 0.0;
    for (Vec3 y : {Vec3(1.0, 0.0, 0.0), Vec3(0.3, -1.1, 1.4), Vec3(0.0, 0.0, 0.7)})
    {
        const auto soft = acoustic::solve_sphere_point_source(cfg, SphereScatterer::sound_soft(0.5), y);
        const auto neu = acoustic::solve_sphere_point_source(cfg, SphereScatterer::impedance(0.5, 0.0), y);
        for (const auto &p : surface.points)
        {
            rs = std::max(rs, std::abs(soft.total(p.cart)));
            rn = std::max(rn, std::abs(neu.total_radial_derivative(p.cart)));
        }
    }
    o.note << " soft " << rs << " neumann " << rn;
    o.require(rs < 1e-8, "sound-soft residual");
    o.require(rn < 1e-8, "neumann residual");

    // weak compact medium against the Born oracle
    const acoustic::AcousticConfig weak{1.0, 1.0, 2.0};
    const auto med = acoustic::MediumSample::ball(32, 0.1, 0.1, 1.0 + 1e-4);
    const Vec3 y(1.0, 0.2, 0.3);
    const auto f = acoustic::solve_medium_ls(weak, med, y);
    double born = 0.0;
    for (Vec3 x : {Vec3(-0.3, 1.5, 0.4), Vec3(0.0, 0.0, 1.9), Vec3(1.2, -1.2, 0.1)})
    {
        const cplx b = acoustic::born_scattered(weak, med, acoustic::Source::point(y), x);
        born = std::max(born, std::abs(f.scattered(x) - b) / std::abs(b));
    }
    o.note << " born " << born;
    o.require(born < 1e-6, "born");

    const auto g = acoustic::solve_medium_ls(cfg, acoustic::MediumSample::ball(24, 0.5, 0.5, 1.2), Vec3(0.0, 1.0, 0.2));
    const Vec3 x(1.3, 0.4, -0.6);
    const double ratio = fd_helmholtz(g, x, 2e-2) / fd_helmholtz(g, x, 1e-2);
    o.note << " refinement ratio " << ratio;
    o.require(ratio > 3.5 && ratio < 4.5, "O(h^2) residual");
    o.require(g.ls_residual() < 1e-8, "ls residual");
}

void reciprocity(Outcome &o)
{
    using acoustic::PointSourceFactory;
    using acoustic::SphereScatterer;
    const auto soft = PointSourceFactory(cfg, SphereScatterer::sound_soft(0.5));
    const auto imp = PointSourceFactory(cfg, SphereScatterer::impedance(0.5, cplx(1.0, 0.5)));
    const auto med = PointSourceFactory(cfg, acoustic::MediumSample::ball(12, 0.5, 0.4, cplx(1.5, 0.1)));
    const std::vector<verify::CheckReport> reports = {
        verify::check_acoustic_reciprocity(soft, 50, 1e-10),
        verify::check_acoustic_reciprocity(imp, 50, 1e-10),
        verify::check_acoustic_reciprocity(med, 10, 1e-6),
        verify::check_em_reciprocity(cfg, 0.5, 50, 1e-8),
        verify::check_mixed_reciprocity_acoustic(soft, 8, 8, 1e-7),
        verify::check_mixed_reciprocity_acoustic(med, 4, 4, 1e-7),
        verify::check_em_mixed_reciprocity(cfg, 0.5, 8, 8, 1e-7),
    };
    for (const auto &r : reports)
    {
        o.note << " " << r.check_name << " " << r.max_abs_error;
        o.require(r.pass, r.check_name);
    }
}

void phase_recovery(Outcome &o)
{
    const auto g1 = grid(1.0, 8, 16), g2 = grid(2.0, 8, 16);
    const acoustic::PointSourceFactory soft(cfg, acoustic::SphereScatterer::sound_soft(0.5));
    const auto W = phaseless::acoustic_field_table(soft, g1, g2);
    const auto d = phaseless::dataset_from_acoustic_table(cfg, {{"type", "sphere"}}, g1, g2, 0, W);

    const auto e1 = grid(1.0, 4, 9), e2 = grid(2.0, 4, 9);
    const auto T = phaseless::em_field_table(cfg, 0.5, e1, e2);
    const auto e = phaseless::dataset_from_em_table(cfg, {{"type", "pec_sphere"}}, e1, e2, T);

    for (const auto &[name, reports] :
         {std::pair{"acoustic", verify::check_phase_recovery(d, verify::acoustic_components(W))},
          std::pair{"em", verify::check_phase_recovery(e, verify::em_components(T))}})
        for (const auto &r : reports)
        {
            o.note << " " << name << ":" << r.check_name << " " << r.max_abs_error;
            o.require(r.pass, std::string(name) + " " + r.check_name);
        }
}

void conjugate_elimination(Outcome &o)
{
    using acoustic::PointSourceFactory;
    using acoustic::SphereScatterer;
    const std::vector<std::pair<std::string, PointSourceFactory>> configs = {
        {"sound_soft", PointSourceFactory(cfg, SphereScatterer::sound_soft(0.5))},
        {"impedance", PointSourceFactory(cfg, SphereScatterer::impedance(0.5, cplx(1.0, 0.5)))},
        {"medium", PointSourceFactory(cfg, acoustic::MediumSample::ball(12, 0.5, 0.4, cplx(1.2, 0.05)))},
    };
    const auto g = grid(1.0, 3, 6);
    const Vec3 y0 = grid(1.0, 24, 48).points[0].cart;
    for (const auto &[name, f] : configs)
    {
        std::vector<cplx> w, wc;
        for (std::size_t j = 0; j < g.size(); j += 3)
        {
            const auto field = f(g.points[j].cart);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (i != j)
                {
                    w.push_back(field.total(g.points[i].cart));
                    wc.push_back(std::conj(w.back()));
                }
        }
        const auto id = phaseless::classify_branch(w, w), cj = phaseless::classify_branch(wc, w);
        o.require(id.branch == phaseless::Branch::identity && id.margin > 1e4, name + " identity branch");
        o.require(cj.branch == phaseless::Branch::conjugate && cj.margin > 1e4, name + " conjugate branch");

        const auto r = verify::check_conjugate_elimination(f, y0, 10.0);
        const double growth = r.details["conjugated"]["margin"].get<double>();
        o.note << " " << name << " growth " << growth;
        o.require(r.pass, name + " discriminator");
    }
}

void eigenvalues(Outcome &o)
{
    using namespace eigencheck;
    const auto roots = find_eigen_k(0, 1.0, 2.0, RootKind::dirichlet, 0.5, 10.0);
    o.require(roots.size() == 3, "three n = 0 roots");
    for (std::size_t m = 1; m <= roots.size(); ++m)
        o.require(std::abs(roots[m - 1].k - double(m) * pi) < 1e-9, "root m pi");

    for (int n = 1; n <= 6; ++n)
    {
        const auto mm = find_eigen_k(n, 1.0, 2.0, RootKind::maxwell_M, 0.5, 10.0);
        const auto dd = find_eigen_k(n, 1.0, 2.0, RootKind::dirichlet, 0.5, 10.0);
        bool same = mm.size() == dd.size();
        for (std::size_t i = 0; same && i < mm.size(); ++i)
            same = mm[i].k == dd[i].k;
        o.require(same, "maxwell_M roots equal dirichlet roots");
    }

    for (Kind kind : {Kind::dirichlet, Kind::maxwell})
    {
        const auto c = certify_eigenvalue_free({1.0, 2.0, 1.3}, kind);
        o.note << " " << to_string(kind) << " margin " << c.margin;
        o.require(c.free && c.margin > 1e-3, "k = 1.3 certified free");
    }
    o.require(!certify_eigenvalue_free({1.0, 2.0, pi}, Kind::dirichlet).free, "k = pi refused");

    bool exact = true;
    for (double lam : {0.25, 0.5, 2.0, 8.0})
        for (int n = 1; n <= 8; ++n)
        {
            const auto a = maxwell_determinants(n, 1.3, 1.0, 2.0);
            const auto b = maxwell_determinants(n, 1.3 * lam, 1.0 / lam, 2.0 / lam);
            exact = exact && a.d_M == b.d_M && a.d_N == b.d_N &&
                    dirichlet_determinant(n, 1.3, 1.0, 2.0) == dirichlet_determinant(n, 1.3 * lam, 1.0 / lam, 2.0 / lam);
        }
    o.require(exact, "scaling invariance");
}

void singularities(Outcome &o)
{
    const auto y = geometry::SpherePoint::spherical(1.0, 1.1, 0.7);
    std::vector<double> angles;
    for (int i = 0; i <= 30; ++i)
        angles.push_back(1e-1 * std::pow(10.0, -i / 6.0)); // 1e-1 .. 1e-6

    const auto pp = em::singularity_probe(em::ProbeKind::phi_phi, cfg.k, 0.5, y, angles);
    const double last_ratio = std::abs(pp.rows.back().ratio - 1.0);
    o.note << " phi_phi |ratio - 1| " << last_ratio;
    o.require(!pp.rows.empty() && last_ratio < 1e-3, "phi_phi ratio");

    const auto pt = em::singularity_probe(em::ProbeKind::phi_theta, cfg.k, 0.5, y, angles);
    o.require(pt.rows.size() > 6, "phi_theta rows");
    if (pt.rows.size() > 6)
    {
        // last decade of approach: the final seven angles
        double lo = HUGE_VAL, hi = 0.0;
        for (std::size_t i = pt.rows.size() - 7; i < pt.rows.size(); ++i)
        {
            lo = std::min(lo, pt.rows[i].scaled_modulus);
            hi = std::max(hi, pt.rows[i].scaled_modulus);
        }
        o.note << " phi_theta scaled " << hi << " spread " << (hi - lo) / hi;
        o.require(lo > 0.0 && (hi - lo) / hi < 0.01, "phi_theta stabilizes");
    }
}

void uniqueness(Outcome &o)
{
    using acoustic::MediumSample;
    using acoustic::SphereScatterer;
    const auto g1 = grid(1.0, 4, 8), g2 = grid(2.0, 4, 8);
    const std::vector<std::tuple<std::string, acoustic::Scatterer, acoustic::Scatterer>> pairs = {
        {"radius", SphereScatterer::sound_soft(0.5), SphereScatterer::sound_soft(0.55)},
        {"boundary", SphereScatterer::sound_soft(0.5), SphereScatterer::impedance(0.5, 1.0)},
        {"contrast", MediumSample::ball(12, 0.5, 0.4, cplx(1.0)), MediumSample::ball(12, 0.5, 0.4, cplx(1.1))},
    };
    for (const auto &[name, a, b] : pairs)
    {
        const auto r = verify::uniqueness_premise_witness(cfg, a, b, g1, g2);
        o.note << " " << name << " " << r.details["max_modulus_difference"].get<double>();
        o.require(r.pass, name + " distinct");
        const auto s = verify::uniqueness_premise_witness(cfg, a, a, g1, g2, 0, false);
        o.require(s.pass && s.max_abs_error < 1e-12, name + " identical");
    }
}

int run(const std::string &args)
{
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write(const fs::path &p, const std::string &text) { std::ofstream(p) << text; }

void cli_contract(Outcome &o)
{
    if (cli.empty())
    {
        o.require(false, "no CLI path given");
        return;
    }
    fs::create_directories(scratch);
    const auto ini = scratch / "run.ini", bad = scratch / "bad.ini", eig = scratch / "eig.ini";
    write(ini, "[problem]\nk = 2.0\nseed = 5\n[grids]\nn_theta1 = 4\nn_phi1 = 8\n");
    write(bad, "[problem\nk = 2.0\n");
    write(eig, "[problem]\nk = 3.141592653589793\n[grids]\nn_theta1 = 4\nn_phi1 = 8\n");

    const auto a = scratch / "a", b = scratch / "b";
    const int s1 = run("synth --config " + ini.string() + " --out " + a.string() + " --jobs 1");
    const int s2 = run("synth --config " + ini.string() + " --out " + b.string() + " --jobs 0");
    o.require(s1 == 0 && s2 == 0, "synth exit 0");
    for (const char *f : {"dataset.jsonl", "dataset.csv"})
    {
        const auto x = slurp(a / f), y = slurp(b / f);
        o.require(!x.empty() && x == y, std::string("byte-identical ") + f);
    }

    const int v0 = run("verify --config " + ini.string() + " --out " + a.string());
    const int v1 = run("verify --config " + ini.string() + " --out " + a.string() +
                       " --tol-override acoustic_reciprocity=1e-30");
    const int c2 = run("synth --config " + bad.string() + " --out " + a.string());
    const int c3 = run("synth --config " + eig.string() + " --out " + a.string());
    o.note << " exits " << s1 << "/" << v0 << "/" << v1 << "/" << c2 << "/" << c3;
    o.require(v0 == 0, "verify exit 0");
    o.require(v1 == 1, "failed check exit 1");
    o.require(c2 == 2, "malformed config exit 2");
    o.require(c3 == 3, "eigenvalue refusal exit 3");
    fs::remove_all(scratch);
}

} // namespace

int main(int argc, char **argv)
{
    if (argc > 1)
        cli = argv[1];
    scratch = fs::temp_directory_path() / ("twosphere_acceptance_" + std::to_string(::getpid()));

    struct Criterion
    {
        int id;
        const char *name;
        double budget;
        std::function<void(Outcome &)> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "special-function kernel", 1.0, special_functions},
        {2, "forward-solver correctness", 60.0, forward_solvers},
        {3, "reciprocity suite", 120.0, reciprocity},
        {4, "phase-recovery round trip", 30.0, phase_recovery},
        {5, "branch dichotomy and conjugate elimination", 120.0, conjugate_elimination},
        {6, "eigenvalue certification", 10.0, eigenvalues},
        {7, "singularity asymptotics", 10.0, singularities},
        {8, "uniqueness-premise witness", 60.0, uniqueness},
        {9, "determinism and CLI contract", 120.0, cli_contract},
    };

    int failed = 0;
    for (const auto &c : criteria)
    {
        Outcome o;
        o.note.precision(3);
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            c.body(o);
        }
        catch (const std::exception &e)
        {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget)
            o.require(false, "over time budget");
        failed += !o.ok;
        std::printf("%s %d %s (%.2f s of %.0f s)%s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, c.budget,
                    o.note.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
