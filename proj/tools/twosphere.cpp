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

// twosphere: dataset synthesis, verification, eigenvalue scans, probes and the conjugate discriminator.
//
// Exit codes: 0 success, 1 check failure, 2 usage or parse error, 3 ill-posed configuration.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <twosphere/acoustic.hpp>
#include <twosphere/config.hpp>
#include <twosphere/eigencheck.hpp>
#include <twosphere/em.hpp>
#include <twosphere/phaseless.hpp>
#include <twosphere/verify.hpp>

namespace fs = std::filesystem;
using namespace twosphere;

namespace {

enum Exit : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2, exit_ill_posed = 3 };

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> overrides;
};

config::RunConfig load(const Common &o) {
  config::RunConfig c;
  if (o.config_path.empty()) {
    std::istringstream empty;
    c = config::parse_config(empty);
  } else {
    c = config::load_config(o.config_path);
  }
  for (const auto &kv : o.overrides) config::apply_tol_override(c, kv);
  if (o.seed) c.seed = *o.seed;
  return c;
}

fs::path output_dir(const config::RunConfig &c, const Common &o) {
  const fs::path dir = config::output_dir(c, o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

// write through a temporary so a crash never leaves a half-written file under the final name
template <class F> void write_file(const fs::path &path, F &&fill) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    fill(f);
    if (!f) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

eigencheck::Certificate certify(const config::RunConfig &c) {
  const auto kind = c.mode == phaseless::Mode::acoustic ? eigencheck::Kind::dirichlet : eigencheck::Kind::maxwell;
  return eigencheck::certify_eigenvalue_free({c.problem.R1, c.problem.R2, c.problem.k, -1}, kind, c.tol_cert);
}

// refuses eigenvalue-adjacent wavenumbers
void require_free(const eigencheck::Certificate &cert) {
  if (cert.free) return;
  std::ostringstream m;
  m << "k = " << cert.k << " is not certified free of shell " << eigencheck::to_string(cert.kind)
    << " eigenvalues (margin " << std::scientific << std::setprecision(3) << cert.margin << " at n = " << cert.worst_n
    << ")";
  throw IllPosedError(m.str());
}

int cmd_synth(const Common &o) {
  const auto c = load(o);
  const auto cert = certify(c);
  require_free(cert);
  const auto g1 = c.grid1(), g2 = c.grid2();
  const auto d = c.mode == phaseless::Mode::acoustic
                     ? phaseless::synthesize_acoustic(c.problem, c.scatterer, g1, g2, c.y0_index, o.jobs)
                     : phaseless::synthesize_em(c.problem, c.obstacle_radius(), g1, g2, o.jobs);
  const auto dir = output_dir(c, o);
  const auto jsonl = dir / (c.prefix + ".jsonl"), csv = dir / (c.prefix + ".csv");
  write_file(jsonl, [&](std::ostream &f) { d.write_jsonl(f); });
  write_file(csv, [&](std::ostream &f) { d.write_csv(f); });
  write_file(dir / (c.prefix + ".certificate.json"), [&](std::ostream &f) { f << cert.to_json().dump(2) << '\n'; });

  double mn = HUGE_VAL, mx = 0.0;
  for (const auto &s : d.samples) {
    mn = std::min(mn, s.modulus);
    mx = std::max(mx, s.modulus);
  }
  const std::size_t expected = c.sample_count();
  std::cout << "mode " << phaseless::to_string(c.mode) << ", k = " << c.problem.k << ", R1 = " << c.problem.R1
            << ", R2 = " << c.problem.R2 << "\n";
  std::cout << "eigencheck margin " << std::scientific << std::setprecision(3) << cert.margin << "\n";
  std::cout << "samples " << d.samples.size() << " (census " << expected << ")\n";
  for (const auto &[set, n] : d.set_counts()) std::cout << "  " << set << " " << n << "\n";
  std::cout << "modulus min " << mn << " max " << mx << "\n";
  for (const auto &ch : d.degenerate_channels) std::cout << "note: " << ch << "\n";
  std::cout << "wrote " << jsonl.string() << "\nwrote " << csv.string() << "\n";
  return d.samples.size() == expected ? exit_ok : exit_check_failed;
}

int cmd_verify(const Common &o, const std::string &dataset_path) {
  const auto c = load(o);
  std::optional<phaseless::PhaselessDataset> data;
  if (!dataset_path.empty()) { // parse before any computation so bad files fail fast
    std::ifstream f(dataset_path);
    if (!f) throw ConfigError("cannot open dataset '" + dataset_path + "'");
    data = phaseless::PhaselessDataset::read_jsonl(f);
  }
  require_free(certify(c));
  auto reports = verify::run_suite(c.suite_options(o.jobs));
  if (data) {
    reports.push_back(verify::check_dataset_consistency(*data, c.tol.cos_delta));
    verify::NonvanishingSpec ns;
    ns.modulus_floor = c.tol.modulus_floor;
    auto nv = verify::check_nonvanishing(*data, ns);
    nv.check_name = "dataset_nonvanishing";
    reports.push_back(nv);
  }
  const auto dir = output_dir(c, o);
  write_file(dir / "verify_report.json", [&](std::ostream &f) { f << verify::suite_json(reports).dump(2) << '\n'; });
  verify::print_table(std::cout, reports);
  std::size_t failed = 0;
  for (const auto &r : reports) failed += r.pass ? 0 : 1;
  std::cout << reports.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? exit_ok : exit_check_failed;
}

struct EigenOptions {
  double k_min = 0.5, k_max = 4.0, k_step = 0.01;
  std::string kind = "dirichlet";
  std::optional<double> R1, R2;
};

int cmd_eigencheck(const Common &o, const EigenOptions &e) {
  const auto c = load(o);
  const double R1 = e.R1.value_or(c.problem.R1), R2 = e.R2.value_or(c.problem.R2);
  const auto kind = eigencheck::kind_from_string(e.kind);
  eigencheck::ShellSpec{R1, R2, 1.0, -1}.validate();
  if (!(e.k_step > 0.0)) throw ConfigError("--k-step must be positive");

  std::ostringstream scan, roots;
  scan << "k,margin,worst_n,free\n" << std::setprecision(17);
  roots << "n,kind,k,residual\n" << std::setprecision(17);
  std::size_t n_roots = 0;
  if (e.k_max > e.k_min && e.k_min > 0.0) {
    const auto steps = std::size_t(std::floor((e.k_max - e.k_min) / e.k_step + 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) {
      const double k = e.k_min + double(i) * e.k_step;
      const auto cert = eigencheck::certify_eigenvalue_free({R1, R2, k, -1}, kind, c.tol_cert);
      scan << k << ',' << cert.margin << ',' << cert.worst_n << ',' << (cert.free ? 1 : 0) << '\n';
    }
    const int n_max = eigencheck::default_order_max(e.k_max, R2);
    std::vector<std::pair<eigencheck::RootKind, const char *>> kinds;
    if (kind == eigencheck::Kind::dirichlet) kinds = {{eigencheck::RootKind::dirichlet, "dirichlet"}};
    else kinds = {{eigencheck::RootKind::maxwell_M, "maxwell_M"}, {eigencheck::RootKind::maxwell_N, "maxwell_N"}};
    for (const auto &[rk, name] : kinds)
      for (int n = (rk == eigencheck::RootKind::dirichlet ? 0 : 1); n <= n_max; ++n)
        for (const auto &r : eigencheck::find_eigen_k(n, R1, R2, rk, e.k_min, e.k_max)) {
          roots << n << ',' << name << ',' << r.k << ',' << r.residual << '\n';
          ++n_roots;
        }
  }
  const auto dir = output_dir(c, o);
  write_file(dir / "eigencheck_scan.csv", [&](std::ostream &f) { f << scan.str(); });
  write_file(dir / "eigencheck_roots.csv", [&](std::ostream &f) { f << roots.str(); });
  std::cout << roots.str();
  std::cerr << n_roots << " roots in [" << e.k_min << ", " << e.k_max << "], scan written to "
            << (dir / "eigencheck_scan.csv").string() << "\n";
  return exit_ok;
}

struct ProbeOptions {
  std::string kind = "phi_phi";
  double theta = 1.0, phi = 0.5;
  int samples = 40;
  std::optional<double> obstacle;
};

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
    sxx += std::log(x[i]) * std::log(x[i]);
    sxy += std::log(x[i]) * std::log(y[i]);
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_probe(const Common &o, const ProbeOptions &p) {
  const auto c = load(o);
  if (p.samples < 2) throw ConfigError("--samples must be at least 2");
  const auto y = geometry::SpherePoint::spherical(c.problem.R1, p.theta, p.phi);
  const auto dir = output_dir(c, o);
  const fs::path out = dir / ("probe_" + p.kind + ".csv");
  std::ostringstream csv;
  csv << std::setprecision(17);
  double slope = 0.0;
  if (p.kind == "phi_phi" || p.kind == "phi_theta") {
    const double a = p.obstacle.value_or(c.obstacle_radius());
    std::vector<double> angles;
    for (int i = 0; i < p.samples; ++i) angles.push_back(0.5 * std::pow(1e-7 / 0.5, double(i) / (p.samples - 1)));
    const auto t = em::singularity_probe(p.kind == "phi_phi" ? em::ProbeKind::phi_phi : em::ProbeKind::phi_theta,
                                         c.problem.k, a, y, angles);
    csv << "angle,r,measured_re,measured_im,predicted_re,predicted_im,ratio_re,ratio_im,scattered_abs,scaled_modulus\n";
    for (const auto &r : t.rows)
      csv << r.angle << ',' << r.r << ',' << r.measured.real() << ',' << r.measured.imag() << ','
          << r.predicted.real() << ',' << r.predicted.imag() << ',' << r.ratio.real() << ',' << r.ratio.imag() << ','
          << r.scattered_abs << ',' << r.scaled_modulus << '\n';
    slope = t.slope;
    if (!t.rows.empty()) {
      const auto &last = t.rows.back();
      std::cout << "last r " << last.r << ", ratio " << last.ratio.real() << (last.ratio.imag() < 0 ? " - " : " + ")
                << std::abs(last.ratio.imag()) << "i, scaled modulus " << last.scaled_modulus << "\n";
    }
    if (t.truncated) std::cout << "note: " << t.notice << "\n";
  } else if (p.kind == "radiation") {
    acoustic::PointSourceFactory factory(c.problem, c.scatterer);
    const auto f = factory(y.cart);
    const Vec3 xhat = y.unit();
    std::vector<double> rs, res;
    csv << "r,residual,r_times_residual\n";
    for (int i = 0; i < p.samples; ++i) {
      const double r = 10.0 * c.problem.R2 * std::pow(1e3, double(i) / (p.samples - 1));
      const double v = acoustic::radiation_residual(f, r, xhat);
      rs.push_back(r);
      res.push_back(v);
      csv << r << ',' << v << ',' << r * v << '\n';
    }
    slope = fit_slope(rs, res);
  } else {
    throw ConfigError("unknown probe kind '" + p.kind + "' (phi_phi, phi_theta, radiation)");
  }
  write_file(out, [&](std::ostream &f) { f << csv.str(); });
  std::cout << "log-log slope " << std::setprecision(6) << slope << "\nwrote " << out.string() << "\n";
  return exit_ok;
}

struct DiscriminateOptions {
  bool conjugate = false;
  int n_theta = 24, n_phi = 48;
};

int cmd_discriminate(const Common &o, const DiscriminateOptions &d) {
  const auto c = load(o);
  if (c.mode != phaseless::Mode::acoustic) throw ConfigError("discriminate works on acoustic configurations");
  acoustic::PointSourceFactory factory(c.problem, c.scatterer);
  const Vec3 y0 = c.grid1().points.at(c.y0_index).cart;
  const auto f = factory(y0);
  auto in = phaseless::discriminator_input(f, f, c.problem, y0, d.n_theta, d.n_phi);
  if (d.conjugate)
    for (auto *v : {&in.w2_R1, &in.w2_R2})
      for (auto &z : *v) z = std::conj(z);
  const auto res = phaseless::conjugate_discriminator(in);
  nlohmann::json j = {{"config", c.summary()}, {"conjugated_candidate", d.conjugate}, {"result", res.to_json()}};
  const auto dir = output_dir(c, o);
  write_file(dir / "discriminate.json", [&](std::ostream &f) { f << j.dump(2) << '\n'; });
  std::cout << "verdict " << phaseless::to_string(res.verdict) << " (margin " << std::scientific << std::setprecision(3)
            << res.margin << ")\n" << res.note << "\n";
  return exit_ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"twosphere - phaseless near-field scattering toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Exit codes: 0 success, 1 check failure, 2 usage or parse error, 3 ill-posed configuration.\n"
             "TWOSPHERE_OUT_DIR overrides the configured output directory; --out overrides both.");

  Common common;
  app.add_option("--config", common.config_path, "INI configuration file (built-in defaults when omitted)");
  app.add_option("--out", common.out, "output directory");
  app.add_option("--seed", common.seed, "seed for verification probe points");
  app.add_option("--jobs", common.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--tol-override", common.overrides, "KEY=VAL tolerance override, repeatable");

  auto *synth = app.add_subcommand("synth", "synthesize the phaseless dataset (JSONL + CSV)");

  std::string dataset;
  auto *verify = app.add_subcommand("verify", "run the verification suite; exit 1 on any failed check");
  verify->add_option("--dataset", dataset, "also check a dataset file written by synth");

  EigenOptions eo;
  auto *eig = app.add_subcommand("eigencheck", "scan shell eigenvalue margins and locate roots");
  eig->add_option("--k-min", eo.k_min, "scan start")->capture_default_str();
  eig->add_option("--k-max", eo.k_max, "scan end")->capture_default_str();
  eig->add_option("--k-step", eo.k_step, "scan step")->capture_default_str();
  eig->add_option("--kind", eo.kind, "dirichlet or maxwell")->capture_default_str();
  eig->add_option("--R1", eo.R1, "inner radius (default from config)");
  eig->add_option("--R2", eo.R2, "outer radius (default from config)");
  eig->footer("Writes eigencheck_scan.csv (k,margin,worst_n,free) and eigencheck_roots.csv (n,kind,k,residual).");

  ProbeOptions po;
  auto *probe = app.add_subcommand("probe", "singularity and radiation probes as CSV");
  probe->add_option("--kind", po.kind, "phi_phi, phi_theta or radiation")->capture_default_str();
  probe->add_option("--theta", po.theta, "source polar angle on R1")->capture_default_str();
  probe->add_option("--phi", po.phi, "source azimuth on R1")->capture_default_str();
  probe->add_option("--samples", po.samples, "rows")->capture_default_str();
  probe->add_option("--obstacle", po.obstacle, "PEC radius for em probes, 0 = free space (default from config)");
  probe->footer("Columns, phi_phi / phi_theta: angle,r,measured_re,measured_im,predicted_re,predicted_im,\n"
                "  ratio_re,ratio_im,scattered_abs,scaled_modulus (r = |x - y|, scaled_modulus = |measured| 4 pi r^3).\n"
                "Columns, radiation: r,residual,r_times_residual with residual = |r (dw/dr - i k w)| of the scattered field.\n"
                "A source at a pole has no tangent frame and is rejected with exit code 2.");

  DiscriminateOptions dopt;
  auto *disc = app.add_subcommand("discriminate", "conjugate-branch discriminator on the configured scatterer");
  disc->add_flag("--conjugate", dopt.conjugate, "conjugate the candidate traces before testing");
  disc->add_option("--n-theta", dopt.n_theta, "Gauss-Legendre rows of the trace grids")->capture_default_str();
  disc->add_option("--n-phi", dopt.n_phi, "azimuthal points of the trace grids")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*verify) return cmd_verify(common, dataset);
    if (*eig) return cmd_eigencheck(common, eo);
    if (*probe) return cmd_probe(common, po);
    if (*disc) return cmd_discriminate(common, dopt);
  } catch (const IllPosedError &e) {
    std::cerr << "twosphere: ill-posed: " << e.what() << "\n";
    return exit_ill_posed;
  } catch (const ConfigError &e) {
    std::cerr << "twosphere: " << e.what() << "\n";
    return exit_usage;
  } catch (const DomainError &e) {
    std::cerr << "twosphere: invalid input: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception &e) {
    std::cerr << "twosphere: " << e.what() << "\n";
    return exit_check_failed;
  }
  return exit_usage;
}
