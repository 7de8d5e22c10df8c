#include "tailslab/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace tailslab {

ConfigError::ConfigError(const std::string& key_, int line_, const std::string& msg)
    : std::runtime_error(line_ > 0 ? fmt::format("line {}: {}: {}", line_, key_, msg)
                                   : fmt::format("{}: {}", key_, msg)),
      key(key_),
      line(line_) {}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw std::invalid_argument("expected true or false");
}

std::pair<double, double> to_range(const std::string& v) {
  const auto c = v.find(':');
  if (c == std::string::npos) throw std::invalid_argument("expected a:b");
  return {to_double(trim(v.substr(0, c))), to_double(trim(v.substr(c + 1)))};
}

std::string num(double x) { return fmt::format("{}", x); }

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

struct Key {
  std::string section, key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define NUM_KEY(sec, name, field)                                                       \
  Key {                                                                                 \
    sec, name, [](RunConfig& c, const std::string& v) { c.field = to_double(v); },      \
        [](const RunConfig& c) { return num(c.field); }                                 \
  }
#define INT_KEY(sec, name, field)                                                       \
  Key {                                                                                 \
    sec, name, [](RunConfig& c, const std::string& v) { c.field = to_int(v); },         \
        [](const RunConfig& c) { return fmt::format("{}", c.field); }                   \
  }
#define STR_KEY(sec, name, field)                                                       \
  Key {                                                                                 \
    sec, name, [](RunConfig& c, const std::string& v) { c.field = v; },                 \
        [](const RunConfig& c) { return c.field; }                                      \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      STR_KEY("", "name", name),
      STR_KEY("metric", "kind", metric.kind),
      NUM_KEY("metric", "mass", metric.mass),
      NUM_KEY("metric", "height_scale", metric.height_scale),
      NUM_KEY("metric", "height_slope", metric.height_slope),
      NUM_KEY("metric", "normal_form_gtilde", metric.normal_form_gtilde),
      INT_KEY("grid", "n", grid.n),
      NUM_KEY("grid", "cfl", grid.cfl),
      NUM_KEY("grid", "ko", grid.ko),
      NUM_KEY("evolution", "t_final", t_final),
      Key{"evolution", "probes",
          [](RunConfig& c, const std::string& v) {
            c.plan.probe_r.clear();
            for (const auto& x : split(v, ',')) c.plan.probe_r.push_back(to_double(x));
            if (c.plan.probe_r.empty()) throw std::invalid_argument("need at least one radius");
          },
          [](const RunConfig& c) { return join_numbers(c.plan.probe_r); }},
      INT_KEY("evolution", "near_scri", plan.near_scri),
      Key{"evolution", "snapshots",
          [](RunConfig& c, const std::string& v) { c.plan.snapshots = to_bool(v); },
          [](const RunConfig& c) { return std::string(c.plan.snapshots ? "true" : "false"); }},
      NUM_KEY("evolution", "probe_dt", plan.probe_cadence.dense_dt),
      NUM_KEY("evolution", "probe_dense_until", plan.probe_cadence.dense_until),
      NUM_KEY("evolution", "probe_ratio", plan.probe_cadence.ratio),
      NUM_KEY("evolution", "trace_dt", plan.trace_cadence.dense_dt),
      NUM_KEY("evolution", "trace_dense_until", plan.trace_cadence.dense_until),
      NUM_KEY("evolution", "trace_ratio", plan.trace_cadence.ratio),
      NUM_KEY("evolution", "snapshot_dt", plan.snapshot_cadence.dense_dt),
      NUM_KEY("evolution", "snapshot_dense_until", plan.snapshot_cadence.dense_until),
      NUM_KEY("evolution", "snapshot_ratio", plan.snapshot_cadence.ratio),
      INT_KEY("nonlinearity", "p", spec.power),
      NUM_KEY("nonlinearity", "amplitude", spec.coeff.amplitude),
      NUM_KEY("nonlinearity", "radial", spec.coeff.radial),
      NUM_KEY("nonlinearity", "temporal", spec.coeff.temporal),
      STR_KEY("data", "symmetry", data.symmetry),
      INT_KEY("data", "lmax", data.lmax),
      NUM_KEY("data", "c1", data.c1),
      NUM_KEY("data", "c2", data.c2),
      NUM_KEY("data", "d1", data.d1),
      STR_KEY("data", "c1_harmonics", data.c1_harmonics),
      STR_KEY("data", "c2_harmonics", data.c2_harmonics),
      STR_KEY("data", "d1_harmonics", data.d1_harmonics),
      NUM_KEY("data", "bump0_amplitude", data.bump0.amplitude),
      NUM_KEY("data", "bump0_center", data.bump0.center),
      NUM_KEY("data", "bump0_width", data.bump0.width),
      STR_KEY("data", "bump0_harmonics", data.pattern0_harmonics),
      NUM_KEY("data", "bump1_amplitude", data.bump1.amplitude),
      NUM_KEY("data", "bump1_center", data.bump1.center),
      NUM_KEY("data", "bump1_width", data.bump1.width),
      STR_KEY("data", "bump1_harmonics", data.pattern1_harmonics),
      Key{"cutoff", "windows",
          [](RunConfig& c, const std::string& v) {
            c.cutoffs.clear();
            for (const auto& w : split(v, ',')) {
              const auto [a, b] = to_range(w);
              c.cutoffs.emplace_back(a, b);
            }
            if (c.cutoffs.empty()) throw std::invalid_argument("need at least one window");
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.cutoffs.size(); ++i)
              s += (i ? ", " : "") + num(c.cutoffs[i].t0) + ":" + num(c.cutoffs[i].t1);
            return s;
          }},
      NUM_KEY("cutoff", "tolerance", truncation_tolerance),
      Key{"fit", "window",
          [](RunConfig& c, const std::string& v) {
            std::tie(c.fit.t_a, c.fit.t_b) = to_range(v);
          },
          [](const RunConfig& c) { return num(c.fit.t_a) + ":" + num(c.fit.t_b); }},
      NUM_KEY("fit", "exponent_tol", fit.tol.exponent),
      NUM_KEY("fit", "ratio_lo", fit.tol.ratio_lo),
      NUM_KEY("fit", "ratio_hi", fit.tol.ratio_hi),
      NUM_KEY("fit", "profile_t_min", fit.profile_t_min),
      Key{"fit", "profile_v",
          [](RunConfig& c, const std::string& v) {
            std::tie(c.fit.profile_v_lo, c.fit.profile_v_hi) = to_range(v);
          },
          [](const RunConfig& c) {
            return num(c.fit.profile_v_lo) + ":" + num(c.fit.profile_v_hi);
          }},
      NUM_KEY("fit", "apriori_ratio", fit.apriori_ratio),
      NUM_KEY("fit", "c_average_rel", fit.c_average_rel),
      NUM_KEY("fit", "cutoff_agreement", fit.cutoff_agreement),
      NUM_KEY("fit", "radiation_limit_t", fit.radiation_limit_t),
      NUM_KEY("fit", "radiation_limit_tol", fit.radiation_limit_tol),
      Key{"fit", "probes",
          [](RunConfig& c, const std::string& v) {
            c.fit.probes.clear();
            for (const auto& x : split(v, ',')) c.fit.probes.push_back(to_double(x));
          },
          [](const RunConfig& c) { return join_numbers(c.fit.probes); }},
      NUM_KEY("fit", "profile_tol", fit.profile_tol),
      NUM_KEY("fit", "recursion_t_min", fit.recursion_t_min),
      NUM_KEY("fit", "noise_floor", fit.noise_floor),
  };
  return table;
}

const Key* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : keys())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

std::string dotted(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

AngularField angular(const std::shared_ptr<const SphereGrid>& grid, double constant,
                     const std::string& harmonics, const std::string& key,
                     const RunConfig& cfg) {
  struct Term {
    int l, m;
    double a;
  };
  std::vector<Term> terms;
  for (const auto& item : split(harmonics, ',')) {
    const auto parts = split(item, ':');
    try {
      if (parts.size() != 3) throw std::invalid_argument("expected l:m:amplitude");
      Term t{to_int(parts[0]), to_int(parts[1]), to_double(parts[2])};
      if (t.l < 0 || std::abs(t.m) > t.l) throw std::invalid_argument("need |m| <= l");
      if (t.l > grid->lmax())
        throw std::invalid_argument(
            fmt::format("l = {} exceeds data.lmax = {}", t.l, grid->lmax()));
      terms.push_back(t);
    } catch (const std::invalid_argument& e) {
      const auto it = cfg.key_lines.find(key);
      throw ConfigError(key, it == cfg.key_lines.end() ? 0 : it->second,
                        fmt::format("bad harmonic '{}' ({})", item, e.what()));
    }
  }
  return AngularField::from_function(grid, [&](double th, double ph) {
    double v = constant;
    for (const auto& t : terms) v += t.a * real_ylm(t.l, t.m, th, ph);
    return v;
  });
}

}  // namespace

void RunConfig::finalize() {
  auto line_of = [&](const std::string& k) {
    const auto it = key_lines.find(k);
    return it == key_lines.end() ? 0 : it->second;
  };
  try {
    spec.metric = build_metric(metric_kind_from_string(metric.kind), metric.mass,
                               HeightParams{metric.height_scale, metric.height_slope},
                               metric.normal_form_gtilde);
  } catch (const std::exception& e) {
    const std::string k = line_of("metric.kind") ? "metric.kind" : "metric.mass";
    throw ConfigError(k, line_of(k), e.what());
  }
  if (data.symmetry == "spherical") {
    spec.symmetry = Symmetry::spherical;
  } else if (data.symmetry == "banded") {
    spec.symmetry = Symmetry::banded;
  } else {
    throw ConfigError("data.symmetry", line_of("data.symmetry"),
                      "expected spherical or banded, got '" + data.symmetry + "'");
  }
  if (data.lmax < 0 || data.lmax > 16)
    throw ConfigError("data.lmax", line_of("data.lmax"), "must lie in [0, 16]");
  if (spec.symmetry == Symmetry::spherical && data.lmax != 0)
    throw ConfigError("data.lmax", line_of("data.lmax"), "spherical runs need lmax = 0");
  const auto grid_ptr = SphereGrid::make(data.lmax);
  spec.lmax = data.lmax;
  spec.data.c1 = angular(grid_ptr, data.c1, data.c1_harmonics, "data.c1_harmonics", *this);
  spec.data.c2 = angular(grid_ptr, data.c2, data.c2_harmonics, "data.c2_harmonics", *this);
  spec.data.d1 = angular(grid_ptr, data.d1, data.d1_harmonics, "data.d1_harmonics", *this);
  spec.data.bump0 = data.bump0;
  spec.data.bump1 = data.bump1;
  spec.data.pattern0 = data.pattern0_harmonics.empty()
                           ? AngularField(grid_ptr, 1.0)
                           : angular(grid_ptr, 0.0, data.pattern0_harmonics,
                                     "data.bump0_harmonics", *this);
  spec.data.pattern1 = data.pattern1_harmonics.empty()
                           ? AngularField(grid_ptr, 1.0)
                           : angular(grid_ptr, 0.0, data.pattern1_harmonics,
                                     "data.bump1_harmonics", *this);
  if (spec.power < 2)
    throw ConfigError("nonlinearity.p", line_of("nonlinearity.p"), "power must be >= 2");
  if (grid.n < 32) throw ConfigError("grid.n", line_of("grid.n"), "need n >= 32");
  if (!(grid.cfl > 0) || grid.cfl > 1)
    throw ConfigError("grid.cfl", line_of("grid.cfl"), "must lie in (0, 1]");
  if (!(t_final > 0))
    throw ConfigError("evolution.t_final", line_of("evolution.t_final"), "must be positive");
  if (!(fit.t_a > 0) || fit.t_b / fit.t_a < 5)
    throw ConfigError("fit.window", line_of("fit.window"), "need t_b / t_a >= 5");
}

std::string RunConfig::to_text() const {
  std::string out;
  std::string section = "\x01";
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!k.section.empty()) out += (out.empty() ? "" : "\n") + fmt::format("[{}]\n", k.section);
      section = k.section;
    }
    out += fmt::format("{} = {}\n", k.key, k.get(*this));
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(s, line, fmt::format("{}: malformed section header", origin));
      section = trim(s.substr(1, s.size() - 2));
      static const std::vector<std::string> known{"metric",       "grid", "evolution",
                                                  "nonlinearity", "data", "cutoff", "fit"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw ConfigError("[" + section + "]", line,
                          fmt::format("{}: unknown section", origin));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(s, line, fmt::format("{}: expected key = value", origin));
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    const std::string full = dotted(section, key);
    const Key* k = find_key(section, key);
    if (!k) throw ConfigError(full, line, fmt::format("{}: unknown key", origin));
    if (cfg.key_lines.count(full))
      throw ConfigError(full, line,
                        fmt::format("{}: duplicate key (first set on line {})", origin,
                                    cfg.key_lines[full]));
    try {
      k->set(cfg, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(full, line,
                        fmt::format("{}: invalid value '{}' ({})", origin, value, e.what()));
    }
    cfg.key_lines[full] = line;
  }
  cfg.finalize();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

RunConfig with_override(const RunConfig& cfg, const std::string& dotted_key,
                        const std::string& value) {
  const auto dot = dotted_key.find('.');
  const std::string section = dot == std::string::npos ? "" : dotted_key.substr(0, dot);
  const std::string key = dot == std::string::npos ? dotted_key : dotted_key.substr(dot + 1);
  const Key* k = find_key(section, key);
  if (!k) throw ConfigError(dotted_key, 0, "unknown key in override");
  RunConfig out = cfg;
  try {
    k->set(out, value);
  } catch (const std::exception& e) {
    throw ConfigError(dotted_key, 0, fmt::format("invalid value '{}' ({})", value, e.what()));
  }
  out.finalize();
  return out;
}

std::pair<std::string, std::vector<std::string>> parse_sweep(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(arg, 0, "sweep must look like section.key=v1,v2,...");
  auto values = split(arg.substr(eq + 1), ',');
  if (values.empty()) throw ConfigError(arg, 0, "sweep needs at least one value");
  return {trim(arg.substr(0, eq)), values};
}

}  // namespace tailslab
