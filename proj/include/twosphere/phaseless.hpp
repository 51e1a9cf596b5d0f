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

#include <array>
#include <cstdint>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "acoustic.hpp"
#include "core.hpp"
#include "detail/parallel.hpp"
#include "eigencheck.hpp"
#include "em.hpp"
#include "geometry.hpp"
#include "specfun.hpp"

namespace twosphere::phaseless {

enum class Mode { acoustic, em };

inline std::string to_string(Mode m) { return m == Mode::acoustic ? "acoustic" : "em"; }

inline Mode mode_from_string(const std::string &s) {
  if (s == "acoustic") return Mode::acoustic;
  if (s == "em") return Mode::em;
  throw DomainError("unknown dataset mode '" + s + "'");
}

enum class SetId : std::uint8_t { single_R1R1, single_R2y0, single_R2R2, sup_R1R1, sup_R2R2, ele_a1, ele_a2 };

inline const char *to_string(SetId s) {
  static const char *names[] = {"single_R1R1", "single_R2y0", "single_R2R2", "sup_R1R1", "sup_R2R2", "ele_a1", "ele_a2"};
  return names[int(s)];
}

inline SetId set_from_string(const std::string &s) {
  for (int i = 0; i < 7; ++i)
    if (s == to_string(SetId(i))) return SetId(i);
  throw ConfigError("dataset: unknown set '" + s + "'");
}

// Tangential direction label; none for acoustic records.
enum class Pol : std::int8_t { none = -1, phi = 0, theta = 1 };

inline const char *to_string(Pol p) { return p == Pol::phi ? "phi" : p == Pol::theta ? "theta" : ""; }

inline Pol pol_from_string(const std::string &s) {
  if (s == "phi") return Pol::phi;
  if (s == "theta") return Pol::theta;
  throw ConfigError("dataset: unknown polarization '" + s + "'");
}

// A source location on one of the two grids; sphere 0 marks an absent source.
struct SourceRef {
  std::int8_t sphere = 0;
  Pol pol = Pol::none;
  std::int32_t index = 0;

  explicit operator bool() const { return sphere != 0; }
  bool operator==(const SourceRef &o) const = default;
};

struct Sample {
  SetId set = SetId::single_R1R1;
  std::int8_t x_sphere = 1;
  Pol m = Pol::none; // measured tangential component (em)
  std::array<std::int8_t, 2> tau{1, 0};
  std::int32_t x_index = 0;
  std::array<SourceRef, 2> sources;
  double modulus = 0.0;
};

inline constexpr double tol_amp_rel = 1e-10;

struct PhaselessDataset {
  Mode mode = Mode::acoustic;
  acoustic::AcousticConfig cfg;
  nlohmann::json scatterer;
  geometry::SphereGrid grid1, grid2;
  int y0_index = -1; // acoustic reference source on grid1
  std::vector<Sample> samples;
  std::vector<std::string> degenerate_channels;

  const geometry::SphereGrid &grid(int sphere) const { return sphere == 1 ? grid1 : grid2; }
  const geometry::SpherePoint &point(int sphere, int index) const { return grid(sphere).points.at(index); }

  double max_modulus() const {
    double m = 0.0;
    for (const auto &s : samples) m = std::max(m, s.modulus);
    return m;
  }
  double tol_amp() const { return tol_amp_rel * max_modulus(); }

  std::map<std::string, std::size_t> set_counts() const {
    std::map<std::string, std::size_t> c;
    for (const auto &s : samples) ++c[to_string(s.set)];
    return c;
  }

  nlohmann::json header() const {
    auto grid_json = [](const geometry::SphereGrid &g) {
      return nlohmann::json{{"radius", g.radius},
                            {"n_theta", g.n_theta},
                            {"n_phi", g.n_phi},
                            {"scheme", geometry::to_string(g.scheme)}};
    };
    nlohmann::json h = {{"type", "header"},
                        {"format_version", 1},
                        {"mode", to_string(mode)},
                        {"k", cfg.k},
                        {"R1", cfg.R1},
                        {"R2", cfg.R2},
                        {"scatterer", scatterer},
                        {"grids", {{"R1", grid_json(grid1)}, {"R2", grid_json(grid2)}}},
                        {"sample_count", samples.size()},
                        {"sets", set_counts()}};
    if (mode == Mode::acoustic) {
      const auto &y0 = grid1.points.at(y0_index);
      h["y0"] = {{"index", y0_index}, {"point", {y0.r, y0.theta, y0.phi}}};
      // both readings of the R2 index set are present: single_R2y0 holds |w(x, y0)| for x on R2,
      // sup_R2R2 pairs every y on R2 with the partner y0
      h["y0_partner_on_R2"] = "sup_R2R2 uses y0 as partner; single_R2y0 carries the R2 x {y0} moduli";
    } else {
      h["degenerate_channels"] = degenerate_channels;
    }
    return h;
  }

  nlohmann::json record(const Sample &s) const {
    const auto &x = point(s.x_sphere, s.x_index);
    nlohmann::json src = nlohmann::json::array(), refs = nlohmann::json::array();
    for (const auto &o : s.sources) {
      if (!o) {
        src.push_back(nullptr);
        refs.push_back(nullptr);
        continue;
      }
      const auto &y = point(o.sphere, o.index);
      src.push_back({y.r, y.theta, y.phi});
      refs.push_back({int(o.sphere), o.index});
    }
    nlohmann::json pol = nullptr;
    if (mode == Mode::em) {
      pol = nlohmann::json::array({to_string(s.m)});
      for (const auto &o : s.sources) pol.push_back(o ? nlohmann::json(to_string(o.pol)) : nlohmann::json(nullptr));
    }
    return {{"set", to_string(s.set)},
            {"x", {x.r, x.theta, x.phi}},
            {"sources", src},
            {"tau", {s.tau[0], s.tau[1]}},
            {"pol", pol},
            {"modulus", s.modulus},
            {"indices", {{"x", {s.x_sphere, s.x_index}}, {"sources", refs}}}};
  }

  void write_jsonl(std::ostream &os) const {
    os << header().dump() << '\n';
    for (const auto &s : samples) os << record(s).dump() << '\n';
  }

  void write_csv(std::ostream &os) const {
    os << "set,x_r,x_theta,x_phi,y1_r,y1_theta,y1_phi,y2_r,y2_theta,y2_phi,tau1,tau2,m,n,l,modulus\n";
    os << std::setprecision(17);
    for (const auto &s : samples) {
      const auto &x = point(s.x_sphere, s.x_index);
      os << to_string(s.set) << ',' << x.r << ',' << x.theta << ',' << x.phi;
      for (const auto &o : s.sources) {
        if (o) {
          const auto &y = point(o.sphere, o.index);
          os << ',' << y.r << ',' << y.theta << ',' << y.phi;
        } else {
          os << ",,,";
        }
      }
      os << ',' << int(s.tau[0]) << ',' << int(s.tau[1]) << ',' << to_string(s.m);
      for (const auto &o : s.sources) os << ',' << to_string(o.pol);
      os << ',' << s.modulus << '\n';
    }
  }

  // Parse failures, truncation and out-of-range indices all raise ConfigError.
  static PhaselessDataset read_jsonl(std::istream &is) {
    try {
      return read_jsonl_unchecked(is);
    } catch (const ConfigError &) {
      throw;
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(std::string("dataset: malformed record: ") + e.what());
    } catch (const std::exception &e) {
      throw ConfigError(std::string("dataset: ") + e.what());
    }
  }

private:
  static PhaselessDataset read_jsonl_unchecked(std::istream &is) {
    PhaselessDataset d;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("dataset: empty stream");
    const auto h = nlohmann::json::parse(line);
    if (h.value("type", "") != "header") throw ConfigError("dataset: first record is not a header");
    d.mode = mode_from_string(h.at("mode").get<std::string>());
    d.cfg = {h.at("k").get<double>(), h.at("R1").get<double>(), h.at("R2").get<double>()};
    d.scatterer = h.at("scatterer");
    auto grid_from = [](const nlohmann::json &g) {
      return geometry::sphere_grid(g.at("radius").get<double>(), g.at("n_theta").get<int>(),
                                   g.at("n_phi").get<int>(),
                                   geometry::grid_scheme_from_string(g.at("scheme").get<std::string>()));
    };
    d.grid1 = grid_from(h.at("grids").at("R1"));
    d.grid2 = grid_from(h.at("grids").at("R2"));
    if (h.contains("y0")) d.y0_index = h["y0"].at("index").get<int>();
    if (h.contains("degenerate_channels")) d.degenerate_channels = h["degenerate_channels"].get<std::vector<std::string>>();
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto r = nlohmann::json::parse(line);
      Sample s;
      s.set = set_from_string(r.at("set").get<std::string>());
      const auto &ix = r.at("indices").at("x");
      s.x_sphere = ix[0].get<int>();
      s.x_index = ix[1].get<int>();
      const auto &refs = r.at("indices").at("sources");
      const auto &pol = r.at("pol");
      for (int q = 0; q < 2; ++q) {
        if (refs[q].is_null()) continue;
        SourceRef o{std::int8_t(refs[q][0].get<int>()), Pol::none, refs[q][1].get<std::int32_t>()};
        if (!pol.is_null() && !pol[q + 1].is_null()) o.pol = pol_from_string(pol[q + 1].get<std::string>());
        s.sources[q] = o;
      }
      s.tau = {std::int8_t(r.at("tau")[0].get<int>()), std::int8_t(r.at("tau")[1].get<int>())};
      if (!pol.is_null()) s.m = pol_from_string(pol[0].get<std::string>());
      s.modulus = r.at("modulus").get<double>();
      auto in_grid = [&](int sphere, int index) {
        return (sphere == 1 || sphere == 2) && index >= 0 && std::size_t(index) < d.grid(sphere).size();
      };
      if (!in_grid(s.x_sphere, s.x_index)) throw ConfigError("dataset: record index outside the grids");
      for (const auto &o : s.sources)
        if (o && !in_grid(o.sphere, o.index)) throw ConfigError("dataset: record index outside the grids");
      d.samples.push_back(std::move(s));
    }
    if (d.samples.size() != h.at("sample_count").get<std::size_t>())
      throw ConfigError("dataset: truncated, " + std::to_string(d.samples.size()) + " of " +
                        std::to_string(h.at("sample_count").get<std::size_t>()) + " records");
    return d;
  }
};

// ---------------------------------------------------------------------------------------------
// field tables

// Total fields w(x, y) for every source y on both grids and every x on both grids.
struct AcousticTable {
  int n1 = 0, n2 = 0;
  std::vector<cplx> data; // [flat(source) * (n1 + n2) + flat(x)], zero where x = y

  int flat(int sphere, int index) const { return sphere == 1 ? index : n1 + index; }
  cplx operator()(int xs, int xi, int ss, int si) const {
    return data[std::size_t(flat(ss, si)) * (n1 + n2) + flat(xs, xi)];
  }
};

inline AcousticTable acoustic_field_table(const acoustic::PointSourceFactory &factory, const geometry::SphereGrid &g1,
                                          const geometry::SphereGrid &g2, int jobs = 1) {
  AcousticTable t;
  t.n1 = int(g1.size());
  t.n2 = int(g2.size());
  const std::size_t n = std::size_t(t.n1 + t.n2);
  t.data.assign(n * n, 0.0);
  auto pt = [&](std::size_t q) -> const geometry::SpherePoint & {
    return q < std::size_t(t.n1) ? g1.points[q] : g2.points[q - t.n1];
  };
  detail::parallel_for(n, jobs, [&](std::size_t s) {
    const auto f = factory(pt(s).cart);
    for (std::size_t q = 0; q < n; ++q)
      if (q != s) t.data[s * n + q] = f.total(pt(q).cart);
  });
  return t;
}

inline void check_grids(const acoustic::AcousticConfig &cfg, const geometry::SphereGrid &g1,
                        const geometry::SphereGrid &g2) {
  cfg.validate();
  if (std::abs(g1.radius - cfg.R1) > 1e-12 * cfg.R1 || std::abs(g2.radius - cfg.R2) > 1e-12 * cfg.R2)
    throw DomainError("dataset grids must lie on the measurement spheres R1 and R2");
  for (const auto *g : {&g1, &g2})
    for (const auto &p : g->points)
      if (p.is_pole()) throw DomainError("dataset grids must exclude the poles");
}

struct AcousticCensus {
  std::size_t single = 0, superposed = 0;
  std::size_t total() const { return single + superposed; }
};

// Index sets: single R1xR1, R2x{y0}, R2xR2; superposed R1xR1 (x != y0) and R2xR2, all without x = y.
inline AcousticCensus acoustic_census(std::size_t n1, std::size_t n2) {
  return {n1 * (n1 - 1) + n2 + n2 * (n2 - 1), (n1 - 1) * (n1 - 1) + n2 * (n2 - 1)};
}

inline PhaselessDataset dataset_from_acoustic_table(const acoustic::AcousticConfig &cfg, const nlohmann::json &scatterer,
                                                    const geometry::SphereGrid &g1, const geometry::SphereGrid &g2,
                                                    int y0_index, const AcousticTable &W) {
  PhaselessDataset d;
  d.mode = Mode::acoustic;
  d.samples.reserve(acoustic_census(g1.size(), g2.size()).total());
  d.cfg = cfg;
  d.scatterer = scatterer;
  d.grid1 = g1;
  d.grid2 = g2;
  d.y0_index = y0_index;
  const int n1 = int(g1.size()), n2 = int(g2.size());
  const SourceRef y0{1, Pol::none, y0_index};
  auto single = [&](SetId set, int xs, int xi, SourceRef y) {
    Sample s;
    s.set = set;
    s.x_sphere = std::int8_t(xs);
    s.x_index = xi;
    s.sources[0] = y;
    s.tau = {1, 0};
    s.modulus = std::abs(W(xs, xi, y.sphere, y.index));
    d.samples.push_back(s);
  };
  auto sup = [&](SetId set, int xs, int xi, SourceRef y) {
    Sample s;
    s.set = set;
    s.x_sphere = std::int8_t(xs);
    s.x_index = xi;
    s.sources[0] = y;
    s.sources[1] = y0;
    s.tau = {1, 1};
    s.modulus = std::abs(W(xs, xi, y.sphere, y.index) + W(xs, xi, 1, y0_index));
    d.samples.push_back(s);
  };
  for (int x = 0; x < n1; ++x)
    for (int y = 0; y < n1; ++y)
      if (x != y) single(SetId::single_R1R1, 1, x, {1, Pol::none, y});
  for (int x = 0; x < n2; ++x) single(SetId::single_R2y0, 2, x, y0);
  for (int x = 0; x < n2; ++x)
    for (int y = 0; y < n2; ++y)
      if (x != y) single(SetId::single_R2R2, 2, x, {2, Pol::none, y});
  for (int x = 0; x < n1; ++x)
    for (int y = 0; y < n1; ++y)
      if (x != y && x != y0_index) sup(SetId::sup_R1R1, 1, x, {1, Pol::none, y});
  for (int x = 0; x < n2; ++x)
    for (int y = 0; y < n2; ++y)
      if (x != y) sup(SetId::sup_R2R2, 2, x, {2, Pol::none, y});
  return d;
}

inline PhaselessDataset synthesize_acoustic(const acoustic::AcousticConfig &cfg, const acoustic::Scatterer &sc,
                                            const geometry::SphereGrid &g1, const geometry::SphereGrid &g2,
                                            int y0_index, int jobs = 1, acoustic::LsOptions opt = {}) {
  check_grids(cfg, g1, g2);
  if (y0_index < 0 || y0_index >= int(g1.size())) throw DomainError("synthesize_acoustic: y0 index outside the R1 grid");
  acoustic::PointSourceFactory factory(cfg, sc, opt); // validates the scatterer against R1
  const auto W = acoustic_field_table(factory, g1, g2, jobs);
  nlohmann::json sj = std::visit([](const auto &s) { return s.to_json(); }, sc);
  return dataset_from_acoustic_table(cfg, sj, g1, g2, y0_index, W);
}

// Tangential components e_m(x) . E(x, y) e_pol(y) for sources on both grids, x on grid1.
struct EmTable {
  int n1 = 0, n2 = 0;
  std::vector<cplx> data; // [((flat(source) * 2 + pol) * n1 + x) * 2 + m], pol/m: 0 phi, 1 theta

  int flat(int sphere, int index) const { return sphere == 1 ? index : n1 + index; }
  cplx operator()(int x, Pol m, const SourceRef &src) const {
    return data[((std::size_t(flat(src.sphere, src.index)) * 2 + int(src.pol)) * n1 + x) * 2 + int(m)];
  }
};

inline EmTable em_field_table(const acoustic::AcousticConfig &cfg, double a, const geometry::SphereGrid &g1,
                              const geometry::SphereGrid &g2, int jobs = 1) {
  EmTable t;
  t.n1 = int(g1.size());
  t.n2 = int(g2.size());
  const std::size_t n = std::size_t(t.n1 + t.n2);
  t.data.assign(n * 2 * t.n1 * 2, 0.0);
  std::vector<geometry::TangentFrame> fx;
  for (const auto &p : g1.points) fx.push_back(geometry::tangent_frame(p));
  detail::parallel_for(n * 2, jobs, [&](std::size_t job) {
    const std::size_t s = job / 2;
    const int pol = int(job % 2);
    const auto &y = s < std::size_t(t.n1) ? g1.points[s] : g2.points[s - t.n1];
    const auto fy = geometry::tangent_frame(y);
    const auto f = em::solve_pec_sphere_dipole(cfg, a, {y.cart, pol == 0 ? fy.e_phi : fy.e_theta, 1});
    for (int x = 0; x < t.n1; ++x) {
      if (s == std::size_t(x)) continue;
      const CVec3 E = f.total(g1.points[x].cart);
      t.data[((s * 2 + pol) * t.n1 + x) * 2 + 0] = dot(fx[x].e_phi, E);
      t.data[((s * 2 + pol) * t.n1 + x) * 2 + 1] = dot(fx[x].e_theta, E);
    }
  });
  return t;
}

struct EmCensus {
  std::size_t a1 = 0, a2 = 0;
  std::size_t total() const { return a1 + a2; }
};

inline EmCensus em_census(std::size_t n1, std::size_t n2) {
  EmCensus c;
  c.a1 = 2 * n1 * (n1 - 1) * 2 + 2 * n1 * (n1 - 1) * (n1 - 1);
  c.a2 = 4 * n1 * n2 + 8 * n1 * (n1 - 1) * n2;
  return c;
}

inline PhaselessDataset dataset_from_em_table(const acoustic::AcousticConfig &cfg, const nlohmann::json &obstacle,
                                              const geometry::SphereGrid &g1, const geometry::SphereGrid &g2,
                                              const EmTable &T) {
  PhaselessDataset d;
  d.mode = Mode::em;
  d.cfg = cfg;
  d.scatterer = obstacle;
  d.grid1 = g1;
  d.grid2 = g2;
  const int n1 = int(g1.size()), n2 = int(g2.size());
  const std::array<Pol, 2> comps{Pol::phi, Pol::theta};
  const SourceRef none{};
  auto add = [&](SetId set, int x, Pol m, SourceRef s1, SourceRef s2) {
    Sample s;
    s.set = set;
    s.x_sphere = 1;
    s.x_index = x;
    s.sources = {s1, s2};
    s.tau = {std::int8_t(s1 ? 1 : 0), std::int8_t(s2 ? 1 : 0)};
    s.m = m;
    cplx v = 0.0;
    if (s1) v += T(x, m, s1);
    if (s2) v += T(x, m, s2);
    s.modulus = std::abs(v);
    d.samples.push_back(s);
  };
  d.samples.reserve(em_census(n1, n2).total());
  for (int x = 0; x < n1; ++x)
    for (Pol m : comps) {
      for (int y = 0; y < n1; ++y)
        if (y != x) add(SetId::ele_a1, x, m, {1, Pol::phi, y}, none);
      for (int y = 0; y < n1; ++y)
        if (y != x) add(SetId::ele_a1, x, m, none, {1, Pol::theta, y});
      for (int y1 = 0; y1 < n1; ++y1)
        for (int y2 = 0; y2 < n1; ++y2)
          if (y1 != x && y2 != x) add(SetId::ele_a1, x, m, {1, Pol::phi, y1}, {1, Pol::theta, y2});
    }
  for (int x = 0; x < n1; ++x)
    for (Pol m : comps) {
      for (int y2 = 0; y2 < n2; ++y2)
        for (Pol l : comps) add(SetId::ele_a2, x, m, none, {2, l, y2});
      for (int y1 = 0; y1 < n1; ++y1) {
        if (y1 == x) continue;
        for (Pol n : comps)
          for (int y2 = 0; y2 < n2; ++y2)
            for (Pol l : comps) add(SetId::ele_a2, x, m, {1, n, y1}, {2, l, y2});
      }
    }

  // a channel whose moduli vanish on its whole product set carries no phase information
  const double tol = d.tol_amp();
  std::map<std::string, bool> all_zero;
  for (const auto &s : d.samples) {
    std::string key = std::string(to_string(s.set)) + " tau=" + std::to_string(s.tau[0]) + std::to_string(s.tau[1]) +
                      " m=" + to_string(s.m) + " n=" + (s.sources[0] ? to_string(s.sources[0].pol) : "-") +
                      " l=" + (s.sources[1] ? to_string(s.sources[1].pol) : "-");
    auto it = all_zero.emplace(key, true).first;
    if (s.modulus > tol) it->second = false;
  }
  for (const auto &[k, z] : all_zero)
    if (z) d.degenerate_channels.push_back("degenerate polarization channel: " + k);
  return d;
}

inline PhaselessDataset synthesize_em(const acoustic::AcousticConfig &cfg, double pec_radius,
                                      const geometry::SphereGrid &g1, const geometry::SphereGrid &g2, int jobs = 1) {
  check_grids(cfg, g1, g2);
  if (!(pec_radius > 0.0 && pec_radius < cfg.R1))
    throw DomainError("synthesize_em: obstacle must lie strictly inside B_R1");
  const auto T = em_field_table(cfg, pec_radius, g1, g2, jobs);
  return dataset_from_em_table(cfg, {{"type", "pec_sphere"}, {"radius", pec_radius}}, g1, g2, T);
}

// ---------------------------------------------------------------------------------------------
// phase-difference recovery

inline double recover_real_cross(double m_sup, double m1, double m2) {
  return 0.5 * (m_sup * m_sup - m1 * m1 - m2 * m2);
}

struct PhaseDiffRecord {
  std::size_t sample = 0; // index of the superposed sample
  double r_xy = 0.0, r_xy0 = 0.0;
  double real_cross = 0.0;
  double cos_delta = 0.0;
  bool defined = false;
  bool flagged = false; // |cos| exceeded 1 + 1e-9 before clamping
};

inline PhaseDiffRecord recover_cos_delta(double r_xy, double r_xy0, double real_cross, double tol_amp) {
  PhaseDiffRecord r;
  r.r_xy = r_xy;
  r.r_xy0 = r_xy0;
  r.real_cross = real_cross;
  const double prod = r_xy * r_xy0;
  r.defined = prod > tol_amp;
  if (!r.defined) return r;
  if (std::abs(real_cross) > prod * (1.0 + 1e-6))
    throw InconsistentDataError("phase recovery: |Re(w conj w0)| exceeds the amplitude product");
  double c = real_cross / prod;
  if (std::abs(c) > 1.0 + 1e-9) r.flagged = true;
  r.cos_delta = std::clamp(c, -1.0, 1.0);
  return r;
}

inline double em_recover_real_cross(double m_sup, double m1, double m2) { return recover_real_cross(m_sup, m1, m2); }

inline PhaseDiffRecord em_recover_cos_delta(double r1, double r2, double real_cross, double tol_amp) {
  return recover_cos_delta(r1, r2, real_cross, tol_amp);
}

// One record per superposed sample, combining it with the matching single-source moduli.
inline std::vector<PhaseDiffRecord> phase_records(const PhaselessDataset &d) {
  using Key = std::tuple<int, int, int, int, int, int>;
  std::map<Key, double> single;
  for (const auto &s : d.samples) {
    if (s.tau[0] + s.tau[1] != 1) continue;
    const auto &o = s.tau[0] ? s.sources[0] : s.sources[1];
    single[{s.x_sphere, s.x_index, o.sphere, o.index, int(o.pol), int(s.m)}] = s.modulus;
  }
  const double tol = d.tol_amp();
  std::vector<PhaseDiffRecord> out;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto &s = d.samples[i];
    if (s.tau[0] != 1 || s.tau[1] != 1) continue;
    auto find = [&](const SourceRef &o) {
      auto it = single.find({s.x_sphere, s.x_index, o.sphere, o.index, int(o.pol), int(s.m)});
      if (it == single.end())
        throw InsufficientDataError(std::string("phase recovery: single-source modulus missing in ") + to_string(s.set));
      return it->second;
    };
    const double m1 = find(s.sources[0]), m2 = find(s.sources[1]);
    auto r = recover_cos_delta(m1, m2, recover_real_cross(s.modulus, m1, m2), tol);
    r.sample = i;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// branch dichotomy

enum class Branch { identity, conjugate, neither };

inline std::string to_string(Branch b) {
  return b == Branch::identity ? "identity" : b == Branch::conjugate ? "conjugate" : "neither";
}

struct BranchResult {
  Branch branch = Branch::neither;
  double identity_error = 0.0, conjugate_error = 0.0; // relative to max |candidate|
  std::size_t usable = 0;
  double margin = 0.0;
};

inline BranchResult classify_branch(const std::vector<cplx> &candidate, const std::vector<cplx> &reference,
                                    double tol_match = 1e-8) {
  if (candidate.size() != reference.size()) throw DomainError("classify_branch: sample sets differ in size");
  double amax = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i)
    amax = std::max({amax, std::abs(candidate[i]), std::abs(reference[i])});
  const double tol_amp = tol_amp_rel * amax;
  BranchResult r;
  double cmax = 0.0, eid = 0.0, econj = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (!(std::abs(candidate[i]) > tol_amp && std::abs(reference[i]) > tol_amp)) continue;
    ++r.usable;
    cmax = std::max(cmax, std::abs(candidate[i]));
    eid = std::max(eid, std::abs(candidate[i] - reference[i]));
    econj = std::max(econj, std::abs(candidate[i] - std::conj(reference[i])));
  }
  if (r.usable < 8) throw InsufficientDataError("classify_branch: fewer than 8 usable sample pairs");
  r.identity_error = eid / cmax;
  r.conjugate_error = econj / cmax;
  if (r.identity_error < tol_match) {
    r.branch = Branch::identity;
    r.margin = r.conjugate_error / std::max(r.identity_error, 1e-16);
  } else if (r.conjugate_error < tol_match) {
    r.branch = Branch::conjugate;
    r.margin = r.identity_error / std::max(r.conjugate_error, 1e-16);
  } else {
    r.branch = Branch::neither;
    r.margin = std::min(r.identity_error, r.conjugate_error) / tol_match;
  }
  return r;
}

// ---------------------------------------------------------------------------------------------
// conjugate-branch discriminator

// Spherical harmonic coefficients of samples on a Gauss-Legendre grid, orders 0..L.
inline std::vector<cplx> project_harmonics(const geometry::SphereGrid &g, const std::vector<cplx> &values, int L) {
  if (g.scheme != geometry::GridScheme::gauss_legendre) throw DomainError("projection needs a Gauss-Legendre grid");
  std::vector<cplx> c(std::size_t(L + 1) * (L + 1), 0.0);
  const double r2 = g.radius * g.radius;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (values[i] == 0.0) continue;
    const auto A = specfun::angular_table(L, g.points[i].theta, g.points[i].phi);
    const cplx wv = values[i] * (g.weights[i] / r2);
    for (std::size_t q = 0; q < c.size(); ++q) c[q] += wv * std::conj(A.y[q]);
  }
  return c;
}

inline int projection_order(const geometry::SphereGrid &g) { return std::min(g.n_theta - 1, g.n_phi / 2 - 1); }

enum class Verdict { consistent_radiating, conjugate_branch_rejected };

inline std::string to_string(Verdict v) {
  return v == Verdict::consistent_radiating ? "consistent_radiating" : "conjugate_branch_rejected";
}

struct DiscriminatorInput {
  acoustic::AcousticConfig cfg;
  Vec3 y0 = Vec3::Zero();
  geometry::SphereGrid grid1, grid2; // Gauss-Legendre grids on R1 and R2
  std::vector<cplx> w1_R1, w2_R1, w1_R2, w2_R2;
};

struct DiscriminatorResult {
  Verdict verdict = Verdict::consistent_radiating;
  double margin = 0.0;
  bool hypothesis = false; // w1 = conj(w2) on both spheres
  double identity_error = 0.0, conjugate_error = 0.0;
  double shell_max = 0.0; // max |v| at mid-shell from the modal Dirichlet solve
  double residual_near = 0.0, residual_far = 0.0;
  double r_near = 0.0, r_far = 0.0;
  double eigen_margin = 0.0;
  std::string note;

  nlohmann::json to_json() const {
    return {{"verdict", to_string(verdict)},
            {"margin", margin},
            {"hypothesis_holds", hypothesis},
            {"identity_error", identity_error},
            {"conjugate_error", conjugate_error},
            {"shell_max", shell_max},
            {"residual_near", residual_near},
            {"residual_far", residual_far},
            {"r_near", r_near},
            {"r_far", r_far},
            {"eigen_margin", eigen_margin},
            {"note", note}};
  }
};

inline DiscriminatorInput discriminator_input(const acoustic::AcousticField &f1, const acoustic::AcousticField &f2,
                                              const acoustic::AcousticConfig &cfg, const Vec3 &y0,
                                              int n_theta = 24, int n_phi = 48) {
  DiscriminatorInput in;
  in.cfg = cfg;
  in.y0 = y0;
  in.grid1 = geometry::sphere_grid(cfg.R1, n_theta, n_phi, geometry::GridScheme::gauss_legendre);
  in.grid2 = geometry::sphere_grid(cfg.R2, n_theta, n_phi, geometry::GridScheme::gauss_legendre);
  auto sample = [&](const acoustic::AcousticField &f, const geometry::SphereGrid &g) {
    std::vector<cplx> v;
    for (const auto &p : g.points) v.push_back((p.cart - y0).norm() < 1e-9 * cfg.R1 ? cplx(0.0) : f.total(p.cart));
    return v;
  };
  in.w1_R1 = sample(f1, in.grid1);
  in.w2_R1 = sample(f2, in.grid1);
  in.w1_R2 = sample(f1, in.grid2);
  in.w2_R2 = sample(f2, in.grid2);
  return in;
}

inline DiscriminatorResult conjugate_discriminator(const DiscriminatorInput &in, double tol = 1e-8) {
  const auto &cfg = in.cfg;
  cfg.validate();
  const double k = cfg.k;
  if (std::abs(in.grid1.radius - cfg.R1) > 1e-12 * cfg.R1 || std::abs(in.grid2.radius - cfg.R2) > 1e-12 * cfg.R2)
    throw DomainError("discriminator: grids must lie on R1 and R2");
  if (in.w1_R1.size() != in.grid1.size() || in.w2_R1.size() != in.grid1.size() ||
      in.w1_R2.size() != in.grid2.size() || in.w2_R2.size() != in.grid2.size())
    throw DomainError("discriminator: sample arrays do not match the grids");

  DiscriminatorResult res;
  const auto cert = eigencheck::certify_eigenvalue_free({cfg.R1, cfg.R2, k, -1}, eigencheck::Kind::dirichlet);
  res.eigen_margin = cert.margin;
  if (cert.margin < 1e-6)
    throw IllPosedError("discriminator: k^2 is within 1e-6 of a shell Dirichlet eigenvalue (n = " +
                        std::to_string(cert.worst_n) + ")");

  // branch errors on both spheres, skipping the reference source itself
  double wmax = 0.0, eid = 0.0, econj = 0.0;
  auto scan = [&](const geometry::SphereGrid &g, const std::vector<cplx> &a, const std::vector<cplx> &b) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if ((g.points[i].cart - in.y0).norm() < 1e-9 * cfg.R1) continue;
      wmax = std::max(wmax, std::abs(a[i]));
      eid = std::max(eid, std::abs(a[i] - b[i]));
      econj = std::max(econj, std::abs(a[i] - std::conj(b[i])));
    }
  };
  scan(in.grid1, in.w1_R1, in.w2_R1);
  scan(in.grid2, in.w1_R2, in.w2_R2);
  res.identity_error = eid / wmax;
  res.conjugate_error = econj / wmax;
  res.hypothesis = res.conjugate_error < tol;

  const int L1 = projection_order(in.grid1), L2 = projection_order(in.grid2);
  if (res.hypothesis) {
    // v = w1 - conj(w2) solves the shell Dirichlet problem with the sampled traces
    const int L = std::min(L1, L2);
    std::vector<cplx> v1(in.grid1.size()), v2(in.grid2.size());
    for (std::size_t i = 0; i < v1.size(); ++i)
      v1[i] = (in.grid1.points[i].cart - in.y0).norm() < 1e-9 * cfg.R1 ? cplx(0.0)
                                                                      : in.w1_R1[i] - std::conj(in.w2_R1[i]);
    for (std::size_t i = 0; i < v2.size(); ++i) v2[i] = in.w1_R2[i] - std::conj(in.w2_R2[i]);
    const auto c1 = project_harmonics(in.grid1, v1, L), c2 = project_harmonics(in.grid2, v2, L);
    const auto t1 = specfun::modal_table(L, k * cfg.R1), t2 = specfun::modal_table(L, k * cfg.R2);
    const double rm = 0.5 * (cfg.R1 + cfg.R2);
    const auto tm = specfun::modal_table(L, k * rm);
    std::vector<cplx> cm(c1.size());
    for (int n = 0; n <= L; ++n) {
      const double det = t1.j[n] * t2.y[n] - t1.y[n] * t2.j[n];
      for (int m = -n; m <= n; ++m) {
        const auto q = specfun::AngularTable::index(n, m);
        const cplx A = (c1[q] * t2.y[n] - c2[q] * t1.y[n]) / det;
        const cplx B = (c2[q] * t1.j[n] - c1[q] * t2.j[n]) / det;
        cm[q] = A * tm.j[n] + B * tm.y[n];
      }
    }
    const auto mid = geometry::sphere_grid(rm, 8, 16, geometry::GridScheme::gauss_legendre);
    for (const auto &p : mid.points) {
      const auto A = specfun::angular_table(L, p.theta, p.phi);
      cplx s = 0.0;
      for (std::size_t q = 0; q < cm.size(); ++q) s += cm[q] * A.y[q];
      res.shell_max = std::max(res.shell_max, std::abs(s));
    }
  }

  // outgoing extension of w2^s from its R2 trace, then the field implied by w1 = conj(w2)
  std::vector<cplx> u2(in.grid2.size());
  for (std::size_t i = 0; i < u2.size(); ++i)
    u2[i] = in.w2_R2[i] - acoustic::fundamental_solution(k, in.grid2.points[i].cart, in.y0);
  const auto c = project_harmonics(in.grid2, u2, L2);
  const auto tR = specfun::modal_table(L2, k * cfg.R2);
  auto residual = [&](double r) {
    const auto t = specfun::modal_table(L2, k * r);
    const auto dirs = geometry::sphere_grid(r, 4, 8, geometry::GridScheme::gauss_legendre);
    double worst = 0.0;
    for (const auto &p : dirs.points) {
      const auto A = specfun::angular_table(L2, p.theta, p.phi);
      cplx u = 0.0, du = 0.0;
      for (int n = 0; n <= L2; ++n) {
        const cplx g = t.h(n) / tR.h(n), dg = k * t.hp(n) / tR.h(n);
        for (int m = -n; m <= n; ++m) {
          const auto q = specfun::AngularTable::index(n, m);
          u += c[q] * g * A.y[q];
          du += c[q] * dg * A.y[q];
        }
      }
      const Vec3 xh = p.unit();
      const cplx phi = acoustic::fundamental_solution(k, p.cart, in.y0);
      const cplx dphi = dot(acoustic::fundamental_solution_gradient(k, p.cart, in.y0), xh);
      const cplx uc = std::conj(phi + u) - phi, duc = std::conj(dphi + du) - dphi;
      worst = std::max(worst, std::abs(r * (duc - I * k * uc)));
    }
    return worst;
  };
  res.r_near = 10.0 * cfg.R2;
  res.r_far = 1000.0 * cfg.R2;
  res.residual_near = residual(res.r_near);
  res.residual_far = residual(res.r_far);
  // a radiating field keeps r * residual bounded; an incoming one grows it like r
  res.margin = (res.residual_far * res.r_far) / (res.residual_near * res.r_near);

  if (res.hypothesis && res.margin >= 10.0) {
    res.verdict = Verdict::conjugate_branch_rejected;
    res.note = "conjugate branch implies a non-radiating scattered field";
  } else if (res.hypothesis) {
    res.verdict = Verdict::consistent_radiating;
    res.note = "conjugate branch hypothesis holds and the implied field radiates";
  } else {
    res.verdict = Verdict::consistent_radiating;
    res.note = res.identity_error < tol ? "hypothesis vacuous: identity branch" : "hypothesis vacuous";
  }
  return res;
}

} // namespace twosphere::phaseless
