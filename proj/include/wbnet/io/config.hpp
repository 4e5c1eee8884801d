#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <concepts>
#include <optional>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wbnet/io/blob.hpp"
#include "wbnet/pipeline/evaluate.hpp"
#include "wbnet/pipeline/train.hpp"

namespace wbnet::io {

using Ini = boost::property_tree::ptree;

// ---- scalar formatting: shortest strings that parse back to the same value ----

inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
template <std::integral I>
std::string fmt(I v) {
  return std::to_string(v);
}

template <class T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + fmt(v[k]);
  return out;
}

template <class T>
T parse(const std::string& s, const std::string& key) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  if (b < e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e) throw ConfigError("bad value '" + s + "' for " + key);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (item.find_first_not_of(' ') != std::string::npos) out.push_back(parse<T>(item, key));
  return out;
}

/// Seeds as compact ranges "a-b,c" (inclusive).
inline std::string fmt_seeds(const std::vector<std::uint64_t>& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size();) {
    std::size_t j = k;
    while (j + 1 < s.size() && s[j + 1] == s[j] + 1) ++j;
    out += (out.empty() ? "" : ",") + fmt(s[k]) + (j > k ? "-" + fmt(s[j]) : "");
    k = j + 1;
  }
  return out;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& s, const std::string& key) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse<std::uint64_t>(item, key));
      continue;
    }
    const auto a = parse<std::uint64_t>(item.substr(0, dash), key), b = parse<std::uint64_t>(item.substr(dash + 1), key);
    if (b < a) throw ConfigError("descending seed range in " + key);
    for (auto v = a; v <= b; ++v) out.push_back(v);
  }
  return out;
}

// ---- typed access with key checking ----

class Section {
 public:
  Section(const Ini& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) node_ = &*child;
  }

  bool present() const { return node_ != nullptr; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (auto s = raw(key)) {
      if constexpr (std::is_same_v<T, std::string>) out = *s;
      else if constexpr (std::is_same_v<T, bool>) out = parse_bool(*s, full(key));
      else out = parse<T>(*s, full(key));
    }
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& out) {
    seen_.insert(key);
    if (auto s = raw(key)) out = parse_list<T>(*s, full(key));
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!node_) return std::nullopt;
    if (auto v = node_->get_optional<std::string>(key)) return *v;
    return std::nullopt;
  }

  std::string require(const std::string& key) {
    if (auto s = raw(key)) return *s;
    throw ConfigError("missing key " + full(key));
  }

  /// Rejects keys nobody asked for (typos would otherwise be silently ignored).
  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : *node_)
      if (!seen_.count(k)) throw ConfigError("unknown key " + full(k));
  }

 private:
  static bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw ConfigError("bad boolean '" + s + "' for " + key);
  }
  std::string full(const std::string& key) const { return "[" + name_ + "] " + key; }

  std::string name_;
  const Ini* node_ = nullptr;
  std::set<std::string> seen_;
};

inline Ini read_ini(const std::filesystem::path& path) {
  Ini ini;
  try {
    boost::property_tree::read_ini(path.string(), ini);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return ini;
}

inline void write_ini(const std::filesystem::path& path, const Ini& ini) {
  try {
    boost::property_tree::write_ini(path.string(), ini);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError(FormatErrc::io, e.what());
  }
}

inline std::string to_string(Shape s) { return s == Shape::square ? "square" : "triangle"; }

inline Shape shape_from_string(const std::string& s) {
  if (s == "square") return Shape::square;
  if (s == "triangle") return Shape::triangle;
  throw ConfigError("unknown shape '" + s + "'");
}

// ---- grid and family ----

inline void put_grid(Ini& ini, const GridSpec& g) {
  ini.put("grid.levels", g.tree.levels);
  ini.put("grid.leaf", g.tree.leaf);
  ini.put("grid.domain_min", fmt(g.domain_min));
  ini.put("grid.domain_max", fmt(g.domain_max));
  ini.put("grid.f_max", fmt(g.f_max));
}

/// Reads [grid]; f_max defaults to 8 points per wavelength, or set `ppw` instead.
inline GridSpec get_grid(const Ini& ini) {
  Section s(ini, "grid");
  GridSpec g;
  s.get("levels", g.tree.levels);
  s.get("leaf", g.tree.leaf);
  s.get("domain_min", g.domain_min);
  s.get("domain_max", g.domain_max);
  double ppw = 8.0;
  s.get("ppw", ppw);
  g.f_max = GridSpec::f_max_for_ppw(g.tree, g.length(), ppw);
  s.get("f_max", g.f_max);
  s.finish();
  g.validate();
  return g;
}

template <class Spec, class F>
void visit_family(Spec& s, F&& f) {
  f("amplitude", s.amplitude);
  f("min_count", s.min_count);
  f("max_count", s.max_count);
  f("disk_radius", s.disk_radius);
  f("sides", s.sides);
  f("gaussian_std_px", s.gaussian_std_px);
  f("corr_len", s.corr_len);
  f("grf_std", s.grf_std);
  f("sl_center_jitter", s.sl_center_jitter);
  f("sl_axis_jitter", s.sl_axis_jitter);
  f("sl_angle_jitter_deg", s.sl_angle_jitter_deg);
  f("sl_intensity_jitter", s.sl_intensity_jitter);
  f("sl_scale", s.sl_scale);
  f("blob_r0_min", s.blob_r0_min);
  f("blob_r0_max", s.blob_r0_max);
  f("blob_max_coeff", s.blob_max_coeff);
  f("blob_harmonics", s.blob_harmonics);
  f("collision_gap", s.collision_gap);
}

inline void put_family(Ini& ini, const ScattererSpec& spec, const std::string& section = "family") {
  ini.put(section + ".name", to_string(spec.family));
  ini.put(section + ".collision_shape", to_string(spec.collision_shape));
  visit_family(spec, [&](const char* key, const auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::vector<int>>) ini.put(section + "." + key, fmt_list(v));
    else ini.put(section + "." + key, fmt(v));
  });
}

/// Family from its name, then any overrides present in the section.
inline ScattererSpec get_family(const Ini& ini, const std::string& section = "family") {
  Section s(ini, section);
  ScattererSpec spec = ScattererSpec::for_family(family_from_string(s.require("name")));
  if (auto shape = s.raw("collision_shape")) spec.collision_shape = shape_from_string(*shape);
  visit_family(spec, [&](const char* key, auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::vector<int>>) s.get_list(key, v);
    else s.get(key, v);
  });
  s.finish();
  if (spec.min_count < 0 || spec.max_count < spec.min_count) throw ConfigError("[" + section + "] bad count range");
  return spec;
}

// ---- network ----

inline void put_network(Ini& ini, const nn::NetworkConfig& c, const std::string& section = "network") {
  ini.put(section + ".variant", nn::to_string(c.variant));
  ini.put(section + ".levels", c.levels);
  ini.put(section + ".leaf", c.leaf);
  ini.put(section + ".rank", c.rank);
  ini.put(section + ".n_cnn", c.n_cnn);
  ini.put(section + ".n_rnn", c.n_rnn);
  ini.put(section + ".conv_kernel", c.conv_kernel);
  ini.put(section + ".conv_width", c.conv_width);
}

/// Network settings; levels and leaf default to the grid's quad-tree.
inline nn::NetworkConfig get_network(const Ini& ini, const QuadTree& tree, const std::string& section = "network") {
  Section s(ini, section);
  nn::NetworkConfig c;
  c.levels = tree.levels;
  c.leaf = tree.leaf;
  if (auto v = s.raw("variant")) c.variant = nn::variant_from_string(*v);
  s.get("levels", c.levels);
  s.get("leaf", c.leaf);
  s.get("rank", c.rank);
  s.get("n_cnn", c.n_cnn);
  s.get("n_rnn", c.n_rnn);
  s.get("conv_kernel", c.conv_kernel);
  s.get("conv_width", c.conv_width);
  s.finish();
  return c;
}

// ---- full run configuration ----

struct FbpSettings {
  double eps = 1.0;
  GmresOptions gmres{1e-4, 10, 500};
  pipeline::FbpBand band = pipeline::FbpBand::top;
};

struct RunConfig {
  GridSpec grid;
  ScattererSpec family;
  std::size_t n_train = 2000;
  std::size_t n_test = 200;
  std::uint64_t seed = 0;
  pipeline::TrainConfig train;
  double eval_sigma = 1.0;
  std::vector<double> noise_sigmas{0, 0.5, 1, 1.5, 2, 3};
  FbpSettings fbp;
  pipeline::CollisionOptions collision;
  std::vector<Family> matrix_families;
};

inline RunConfig parse_run_config(const Ini& ini) {
  static const std::set<std::string> sections{"grid", "family", "data", "network", "train", "eval", "fbp",
                                              "collision", "matrix"};
  for (const auto& [k, v] : ini)
    if (!sections.count(k)) throw ConfigError("unknown section [" + k + "]");
  RunConfig rc;
  rc.grid = get_grid(ini);
  rc.family = ini.get_child_optional("family") ? get_family(ini) : ScattererSpec::for_family(Family::squares);
  {
    Section s(ini, "data");
    s.get("train", rc.n_train);
    s.get("test", rc.n_test);
    s.get("seed", rc.seed);
    s.finish();
  }
  rc.train.net = get_network(ini, rc.grid.tree);
  rc.train.seed = rc.seed;
  {
    Section s(ini, "train");
    s.get("epochs", rc.train.epochs);
    s.get("batch", rc.train.batch);
    s.get("sigma", rc.train.sigma);
    s.get("smoothing", rc.train.smoothing);
    s.get("lr", rc.train.schedule.base);
    s.get("lr_decay", rc.train.schedule.rate);
    s.get("lr_interval", rc.train.schedule.interval);
    s.get("checkpoint_every", rc.train.checkpoint_every);
    s.get("max_steps", rc.train.max_steps);
    s.finish();
  }
  {
    Section s(ini, "eval");
    s.get("sigma", rc.eval_sigma);
    s.get_list("noise_sigmas", rc.noise_sigmas);
    s.finish();
  }
  {
    Section s(ini, "fbp");
    s.get("eps", rc.fbp.eps);
    s.get("tol", rc.fbp.gmres.tol);
    s.get("restart", rc.fbp.gmres.restart);
    s.get("max_iter", rc.fbp.gmres.max_iter);
    if (auto b = s.raw("band")) {
      if (*b != "top" && *b != "all") throw ConfigError("fbp.band must be top or all, got '" + *b + "'");
      rc.fbp.band = *b == "top" ? pipeline::FbpBand::top : pipeline::FbpBand::all;
    }
    s.finish();
  }
  {
    Section s(ini, "collision");
    auto& c = rc.collision;
    if (auto shape = s.raw("shape")) c.shape = shape_from_string(*shape);
    s.get_list("sides", c.sides);
    s.get_list("gaps", c.gaps);
    s.get("amplitude", c.amplitude);
    s.get("sigma", c.sigma);
    s.get("draws", c.draws);
    s.get("detect_fraction", c.detect_fraction);
    s.finish();
    c.fbp_eps = rc.fbp.eps;
    c.fbp_band = rc.fbp.band;
  }
  {
    Section s(ini, "matrix");
    if (auto fams = s.raw("families")) {
      std::stringstream ss(*fams);
      for (std::string f; std::getline(ss, f, ',');) rc.matrix_families.push_back(family_from_string(f));
    }
    s.finish();
  }
  if (rc.train.net.n() != rc.grid.n()) throw ConfigError("network n does not match the grid");
  rc.train.validate();
  if (rc.n_train == 0 || rc.n_test == 0) throw ConfigError("[data] train and test counts must be positive");
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " not found");
  return parse_run_config(read_ini(path));
}

}  // namespace wbnet::io
