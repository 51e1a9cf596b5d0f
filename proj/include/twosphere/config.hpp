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

#pragma once

// Run configuration read from an INI file:
//
//   [problem]     mode = acoustic|em, k (1/length), R1, R2 (length), seed
//   [scatterer]   type = sphere|medium
//                 sphere: radius (length), bc = sound_soft|impedance|pec, eta_re, eta_im
//                 medium: file = JSON voxel grid, or voxels, half_width, ball_radius, index_re, index_im
//   [grids]       n_theta1, n_phi1, n_theta2, n_phi2, scheme = gauss_legendre|uniform_offset, y0_index
//                 (defaults 8 x 16 acoustic, 4 x 9 em; R2 copies R1 unless given)
//   [tolerances]  any verify::Tolerances key, plus tol_cert
//   [output]      dir, prefix
//
// Relative paths resolve against the directory of the config file.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "acoustic.hpp"
#include "eigencheck.hpp"
#include "geometry.hpp"
#include "phaseless.hpp"
#include "verify.hpp"

namespace twosphere::config {

struct RunConfig {
  phaseless::Mode mode = phaseless::Mode::acoustic;
  acoustic::AcousticConfig problem;
  std::uint64_t seed = 0;
  acoustic::Scatterer scatterer = acoustic::SphereScatterer::sound_soft(0.5);
  bool pec = false; // em obstacle
  int n_theta1 = 8, n_phi1 = 16, n_theta2 = 8, n_phi2 = 16;
  geometry::GridScheme scheme = geometry::GridScheme::gauss_legendre;
  int y0_index = 0;
  verify::Tolerances tol;
  double tol_cert = eigencheck::tol_cert_default;
  std::string out_dir = ".";
  std::string prefix = "dataset";
  std::string source_path; // empty for built-in defaults

  geometry::SphereGrid grid1() const { return geometry::sphere_grid(problem.R1, n_theta1, n_phi1, scheme); }
  geometry::SphereGrid grid2() const { return geometry::sphere_grid(problem.R2, n_theta2, n_phi2, scheme); }

  double obstacle_radius() const { return acoustic::support_radius(scatterer); }

  std::size_t sample_count() const {
    const std::size_t n1 = std::size_t(n_theta1) * n_phi1, n2 = std::size_t(n_theta2) * n_phi2;
    return mode == phaseless::Mode::acoustic ? phaseless::acoustic_census(n1, n2).total()
                                             : phaseless::em_census(n1, n2).total();
  }

  verify::SuiteOptions suite_options(int jobs) const {
    verify::SuiteOptions o;
    o.mode = mode;
    o.cfg = problem;
    o.scatterer = scatterer;
    o.grid1 = grid1();
    o.grid2 = grid2();
    o.y0_index = y0_index;
    o.tol = tol;
    o.seed = seed;
    o.jobs = jobs;
    return o;
  }

  nlohmann::json summary() const {
    return {{"mode", phaseless::to_string(mode)},
            {"k", problem.k},
            {"R1", problem.R1},
            {"R2", problem.R2},
            {"seed", seed},
            {"scatterer", verify::scatterer_json(scatterer)},
            {"grids",
             {{"R1", {n_theta1, n_phi1}}, {"R2", {n_theta2, n_phi2}}, {"scheme", geometry::to_string(scheme)}}},
            {"y0_index", y0_index}};
  }

  void validate() const {
    try {
      problem.validate();
      eigencheck::ShellSpec{problem.R1, problem.R2, problem.k, -1}.validate();
      acoustic::validate_scatterer(problem, scatterer);
      if (mode == phaseless::Mode::em && !pec) throw DomainError("em mode needs [scatterer] bc = pec");
      if (mode == phaseless::Mode::acoustic && pec) throw DomainError("bc = pec is only valid in em mode");
      const auto g1 = grid1();
      const auto g2 = grid2();
      phaseless::check_grids(problem, g1, g2);
      if (y0_index < 0 || y0_index >= int(g1.size())) throw DomainError("y0_index outside the R1 grid");
      if (sample_count() > 5'000'000) throw DomainError("grids too fine: more than 5e6 phaseless samples");
    } catch (const ConfigError &) {
      throw;
    } catch (const Error &e) {
      throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
  }
};

namespace detail {

inline std::string strip(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && sp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && sp(s[i])) ++i;
  s = s.substr(i);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

inline double to_double(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception &) {
    throw ConfigError("config: '" + key + "' is not a number: '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw ConfigError("config: '" + key + "' is not a number: '" + v + "'");
  return x;
}

inline long long to_int(const std::string &key, const std::string &v) {
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw ConfigError("config: '" + key + "' must be an integer");
  return (long long)x;
}

class Section {
public:
  Section(const boost::property_tree::ptree *t, std::string name) : t_(t), name_(std::move(name)) {}

  bool has(const std::string &k) const { return t_ && t_->find(k) != t_->not_found(); }
  std::string str(const std::string &k, const std::string &def) const {
    used_.insert(k);
    if (!has(k)) return def;
    return strip(t_->get<std::string>(k));
  }
  double num(const std::string &k, double def) const {
    const auto v = str(k, "");
    return has(k) ? to_double(name_ + "." + k, v) : def;
  }
  long long integer(const std::string &k, long long def) const {
    const auto v = str(k, "");
    return has(k) ? to_int(name_ + "." + k, v) : def;
  }

  // every key present must have been read
  void finish() const {
    if (!t_) return;
    for (const auto &kv : *t_)
      if (!used_.count(kv.first)) throw ConfigError("config: unknown key '" + name_ + "." + kv.first + "'");
  }

private:
  const boost::property_tree::ptree *t_;
  std::string name_;
  mutable std::set<std::string> used_;
};

} // namespace detail

inline RunConfig parse_config(std::istream &is, const std::filesystem::path &base_dir = ".") {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> sections = {"problem", "scatterer", "grids", "tolerances", "output"};
  for (const auto &kv : pt) {
    if (kv.second.empty() && !kv.second.data().empty())
      throw ConfigError("config: key '" + kv.first + "' outside any section");
    if (!sections.count(kv.first)) throw ConfigError("config: unknown section '" + kv.first + "'");
  }
  auto section = [&](const std::string &name) {
    auto it = pt.find(name);
    return detail::Section(it == pt.not_found() ? nullptr : &it->second, name);
  };
  auto resolve = [&](const std::string &p) {
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  };

  RunConfig c;
  try {
    auto pr = section("problem");
    c.mode = phaseless::mode_from_string(pr.str("mode", "acoustic"));
    c.problem.k = pr.num("k", 2.0);
    c.problem.R1 = pr.num("R1", 1.0);
    c.problem.R2 = pr.num("R2", 2.0);
    const long long seed = pr.integer("seed", 0);
    if (seed < 0) throw ConfigError("config: problem.seed must be nonnegative");
    c.seed = std::uint64_t(seed);
    pr.finish();

    auto sc = section("scatterer");
    const auto type = sc.str("type", "sphere");
    if (type == "sphere") {
      const double a = sc.num("radius", 0.5);
      const auto bc = sc.str("bc", c.mode == phaseless::Mode::em ? "pec" : "sound_soft");
      const cplx eta(sc.num("eta_re", 0.0), sc.num("eta_im", 0.0));
      if (bc == "sound_soft") c.scatterer = acoustic::SphereScatterer::sound_soft(a);
      else if (bc == "impedance") c.scatterer = acoustic::SphereScatterer::impedance(a, eta);
      else if (bc == "pec") {
        c.scatterer = acoustic::SphereScatterer::sound_soft(a);
        c.pec = true;
      } else throw ConfigError("config: scatterer.bc must be sound_soft, impedance or pec");
    } else if (type == "medium") {
      if (sc.has("file")) {
        const auto path = resolve(sc.str("file", ""));
        std::ifstream f(path);
        if (!f) throw ConfigError("config: cannot open medium file '" + path.string() + "'");
        try {
          c.scatterer = acoustic::MediumSample::from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception &e) {
          throw ConfigError("config: medium file '" + path.string() + "': " + e.what());
        }
      } else {
        const auto n = sc.integer("voxels", 16);
        if (n < 2 || n > 256) throw ConfigError("config: scatterer.voxels must lie in [2, 256]");
        c.scatterer = acoustic::MediumSample::ball(int(n), sc.num("half_width", 0.5), sc.num("ball_radius", 0.4),
                                                   cplx(sc.num("index_re", 1.1), sc.num("index_im", 0.0)));
      }
    } else {
      throw ConfigError("config: scatterer.type must be sphere or medium");
    }
    sc.finish();

    auto gr = section("grids");
    const bool em = c.mode == phaseless::Mode::em; // em sample counts grow like n1^2 n2
    c.n_theta1 = int(gr.integer("n_theta1", em ? 4 : 8));
    c.n_phi1 = int(gr.integer("n_phi1", em ? 9 : 16));
    c.n_theta2 = int(gr.integer("n_theta2", c.n_theta1));
    c.n_phi2 = int(gr.integer("n_phi2", c.n_phi1));
    c.scheme = geometry::grid_scheme_from_string(gr.str("scheme", "gauss_legendre"));
    c.y0_index = int(gr.integer("y0_index", 0));
    gr.finish();

    auto tl = section("tolerances");
    if (const auto *t = pt.get_child_optional("tolerances").get_ptr())
      for (const auto &kv : *t) {
        if (kv.first == "tol_cert") c.tol_cert = tl.num("tol_cert", c.tol_cert);
        else c.tol.at(kv.first) = tl.num(kv.first, 0.0);
      }
    tl.finish();

    auto out = section("output");
    if (out.has("dir")) c.out_dir = resolve(out.str("dir", ".")).string();
    c.prefix = out.str("prefix", "dataset");
    if (c.prefix.empty() || c.prefix.find('/') != std::string::npos)
      throw ConfigError("config: output.prefix must be a plain file name stem");
    out.finish();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  auto c = parse_config(f, std::filesystem::path(path).parent_path());
  c.source_path = path;
  return c;
}

// KEY=VAL with KEY a tolerance name or tol_cert
inline void apply_tol_override(RunConfig &c, const std::string &kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("--tol-override expects KEY=VAL, got '" + kv + "'");
  const auto key = detail::strip(kv.substr(0, eq));
  const double v = detail::to_double(key, detail::strip(kv.substr(eq + 1)));
  if (key == "tol_cert") c.tol_cert = v;
  else c.tol.at(key) = v;
}

// --out beats TWOSPHERE_OUT_DIR, which beats [output] dir
inline std::string output_dir(const RunConfig &c, const std::string &cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char *env = std::getenv("TWOSPHERE_OUT_DIR"); env && *env) return env;
  return c.out_dir;
}

} // namespace twosphere::config
