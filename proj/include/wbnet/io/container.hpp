#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "wbnet/io/blob.hpp"
#include "wbnet/io/config.hpp"

namespace wbnet::io {

inline constexpr int kContainerVersion = 1;

namespace detail {

inline void check_version(const Ini& ini, const std::string& kind, const std::filesystem::path& path) {
  const auto v = ini.get_optional<int>("format.version");
  const auto k = ini.get_optional<std::string>("format.kind");
  if (!v || !k) throw FormatError(FormatErrc::magic, path.string() + " lacks a [format] section");
  if (*k != kind) throw FormatError(FormatErrc::magic, path.string() + " is a " + *k + ", expected a " + kind);
  if (*v != kContainerVersion)
    throw FormatError(FormatErrc::version, path.string() + " has version " + std::to_string(*v) + ", expected " +
                                               std::to_string(kContainerVersion));
}

inline std::vector<std::uint64_t> dims_of(const Ini& ini, const std::string& key) {
  return parse_list<std::uint64_t>(ini.get<std::string>(key, ""), key);
}

/// Reads a blob whose dims and CRC are recorded in the manifest under `[blobs] <name>_*`.
template <class T>
Array<T> read_listed(const std::filesystem::path& dir, const Ini& ini, const std::string& name) {
  const auto file = ini.get_optional<std::string>("blobs." + name);
  if (!file) throw FormatError(FormatErrc::dims, "manifest does not list blob '" + name + "'");
  BlobHeader h;
  Array<T> a = read_blob<T>(dir / *file, dims_of(ini, "blobs." + name + "_dims"), &h);
  if (fmt(std::uint64_t(h.crc)) != ini.get<std::string>("blobs." + name + "_crc32", ""))
    throw FormatError(FormatErrc::checksum, (dir / *file).string() + " does not match the manifest checksum");
  return a;
}

template <class T>
void write_listed(const std::filesystem::path& dir, Ini& ini, const std::string& name, const Array<T>& a) {
  const std::string file = name + ".wbds";
  const std::uint32_t crc = write_blob(dir / file, a);
  ini.put("blobs." + name, file);
  ini.put("blobs." + name + "_dims", fmt_list(a.dims));
  ini.put("blobs." + name + "_crc32", fmt(std::uint64_t(crc)));
}

}  // namespace detail

// ---- datasets: manifest.ini + eta.wbds [N,n,n] f32 + data.wbds [N,F,S,R] c64 ----

inline void save_dataset(const std::filesystem::path& dir, const pipeline::Dataset& d) {
  d.check();
  std::filesystem::create_directories(dir);
  Ini ini;
  ini.put("format.kind", "dataset");
  ini.put("format.version", kContainerVersion);
  put_grid(ini, d.grid);
  put_family(ini, d.spec);
  ini.put("data.stencil_order", int(d.order));
  ini.put("data.frequencies", fmt_list(d.hertz));
  ini.put("data.count", d.size());
  ini.put("data.seeds", fmt_seeds(d.seeds));
  const auto n = std::uint64_t(d.grid.n());
  Array<float> eta{{d.size(), n, n}, {}};
  for (const auto& e : d.eta)
    for (Eigen::Index k = 0; k < e.size(); ++k) eta.values.push_back(float(e.data()[k]));
  const auto geo = AcquisitionGeometry::for_grid(d.grid);
  Array<std::complex<float>> data{{d.size(), d.hertz.size(), std::uint64_t(geo.n_src), std::uint64_t(geo.n_rcv)}, {}};
  for (const auto& c : d.data)
    for (const auto& s : c.slices) {
      if (s.rows() != geo.n_src || s.cols() != geo.n_rcv) throw DataError("slice does not match the acquisition");
      for (Eigen::Index k = 0; k < s.size(); ++k) data.values.push_back(std::complex<float>(s.data()[k]));
    }
  detail::write_listed(dir, ini, "eta", eta);
  detail::write_listed(dir, ini, "data", data);
  write_ini(dir / "manifest.ini", ini);
}

inline pipeline::Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.ini";
  if (!std::filesystem::exists(manifest)) throw FormatError(FormatErrc::io, "no dataset at " + dir.string());
  const Ini ini = read_ini(manifest);
  detail::check_version(ini, "dataset", manifest);
  pipeline::Dataset d;
  d.grid = get_grid(ini);
  d.spec = get_family(ini);
  const Ini empty;
  const Ini& data = ini.get_child("data", empty);
  d.order = stencil_from_int(data.get<int>("stencil_order", 0));
  d.hertz = parse_list<double>(data.get<std::string>("frequencies", ""), "[data] frequencies");
  d.seeds = parse_seeds(data.get<std::string>("seeds", ""), "[data] seeds");
  const std::size_t count = data.get<std::size_t>("count", 0);
  if (d.seeds.size() != count) throw FormatError(FormatErrc::dims, "manifest seed list does not match count");
  const auto n = std::uint64_t(d.grid.n());
  const auto geo = AcquisitionGeometry::for_grid(d.grid);
  const auto eta = detail::read_listed<float>(dir, ini, "eta");
  const auto cube = detail::read_listed<std::complex<float>>(dir, ini, "data");
  if (eta.dims != std::vector<std::uint64_t>{count, n, n} ||
      cube.dims != std::vector<std::uint64_t>{count, d.hertz.size(), std::uint64_t(geo.n_src), std::uint64_t(geo.n_rcv)})
    throw FormatError(FormatErrc::dims, "blob shapes disagree with the manifest grid/frequencies/count");
  std::size_t pe = 0, pc = 0;
  for (std::size_t k = 0; k < count; ++k) {
    RealGrid e(d.grid.n(), d.grid.n());
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = eta.values[pe++];
    d.eta.push_back(std::move(e));
    FarFieldCube c;
    c.hertz = d.hertz;
    c.stencil_order = int(d.order);
    for (std::size_t f = 0; f < d.hertz.size(); ++f) {
      ComplexGrid s(geo.n_src, geo.n_rcv);
      for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = std::complex<double>(cube.values[pc++]);
      c.slices.push_back(std::move(s));
    }
    d.data.push_back(std::move(c));
  }
  d.check();
  return d;
}

// ---- checkpoints: checkpoint.ini + params.wbds (+ adam_m.wbds, adam_v.wbds) ----

struct Checkpoint {
  pipeline::Model model;
  std::optional<nn::AdamState<float>> adam;
  std::size_t epoch = 0;
};

inline void save_checkpoint(const std::filesystem::path& dir, const pipeline::Model& m,
                            const nn::AdamState<float>* adam = nullptr, std::size_t epoch = 0) {
  std::filesystem::create_directories(dir);
  Ini ini;
  ini.put("format.kind", "checkpoint");
  ini.put("format.version", kContainerVersion);
  put_network(ini, m.config());
  ini.put("model.smoothing", fmt(m.smoothing));
  ini.put("model.train_family", to_string(m.train_family));
  ini.put("model.train_seeds", fmt_seeds(m.train_seeds));
  ini.put("model.epoch", epoch);
  ini.put("stats.mean", fmt_list(m.stats.mean));
  ini.put("stats.std", fmt_list(m.stats.std));
  const auto& store = m.net.params();
  ini.put("registry.count", store.entries().size());
  for (std::size_t k = 0; k < store.entries().size(); ++k) {
    const auto& e = store.entries()[k];
    std::vector<std::uint64_t> shape(e.shape.begin(), e.shape.end());
    ini.put("registry.p" + std::to_string(k), e.name + " " + fmt_list(shape) + " " + fmt(std::uint64_t(e.offset)));
  }
  detail::write_listed(dir, ini, "params", Array<float>{{store.size()}, store.values()});
  if (adam) {
    ini.put("optimizer.step", adam->step);
    ini.put("optimizer.beta1", fmt(adam->beta1));
    ini.put("optimizer.beta2", fmt(adam->beta2));
    ini.put("optimizer.eps", fmt(adam->eps));
    ini.put("optimizer.lr", fmt(adam->schedule.base));
    ini.put("optimizer.lr_decay", fmt(adam->schedule.rate));
    ini.put("optimizer.lr_interval", adam->schedule.interval);
    detail::write_listed(dir, ini, "adam_m", Array<float>{{adam->m.size()}, adam->m});
    detail::write_listed(dir, ini, "adam_v", Array<float>{{adam->v.size()}, adam->v});
  }
  write_ini(dir / "checkpoint.ini", ini);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "checkpoint.ini";
  if (!std::filesystem::exists(path)) throw FormatError(FormatErrc::io, "no checkpoint at " + dir.string());
  const Ini ini = read_ini(path);
  detail::check_version(ini, "checkpoint", path);
  const nn::NetworkConfig cfg = get_network(ini, QuadTree{});
  Checkpoint ck{pipeline::Model(cfg), std::nullopt, ini.get<std::size_t>("model.epoch", 0)};
  auto& m = ck.model;
  m.smoothing = parse<double>(ini.get<std::string>("model.smoothing", "0.75"), "smoothing");
  m.train_family = family_from_string(ini.get<std::string>("model.train_family", ""));
  m.train_seeds = parse_seeds(ini.get<std::string>("model.train_seeds", ""), "train_seeds");
  m.stats.mean = parse_list<double>(ini.get<std::string>("stats.mean", ""), "stats.mean");
  m.stats.std = parse_list<double>(ini.get<std::string>("stats.std", ""), "stats.std");
  if (m.stats.mean.size() != m.stats.std.size() || m.stats.mean.empty())
    throw FormatError(FormatErrc::dims, "checkpoint normalisation stats are incomplete");
  auto& store = m.net.params();
  if (ini.get<std::size_t>("registry.count", 0) != store.entries().size())
    throw FormatError(FormatErrc::dims, "checkpoint registry size differs from the network built from its config");
  for (std::size_t k = 0; k < store.entries().size(); ++k) {
    const auto& e = store.entries()[k];
    std::vector<std::uint64_t> shape(e.shape.begin(), e.shape.end());
    const std::string expect = e.name + " " + fmt_list(shape) + " " + fmt(std::uint64_t(e.offset));
    if (ini.get<std::string>("registry.p" + std::to_string(k), "") != expect)
      throw FormatError(FormatErrc::dims, "registry entry " + std::to_string(k) + " differs: expected '" + expect + "'");
  }
  auto params = detail::read_listed<float>(dir, ini, "params");
  if (params.values.size() != store.size()) throw FormatError(FormatErrc::dims, "parameter payload size");
  store.values() = std::move(params.values);
  if (ini.get_child_optional("optimizer")) {
    nn::AdamState<float> a;
    a.step = ini.get<std::int64_t>("optimizer.step");
    a.beta1 = parse<double>(ini.get<std::string>("optimizer.beta1"), "beta1");
    a.beta2 = parse<double>(ini.get<std::string>("optimizer.beta2"), "beta2");
    a.eps = parse<double>(ini.get<std::string>("optimizer.eps"), "eps");
    a.schedule.base = parse<double>(ini.get<std::string>("optimizer.lr"), "lr");
    a.schedule.rate = parse<double>(ini.get<std::string>("optimizer.lr_decay"), "lr_decay");
    a.schedule.interval = ini.get<std::int64_t>("optimizer.lr_interval");
    a.m = detail::read_listed<float>(dir, ini, "adam_m").values;
    a.v = detail::read_listed<float>(dir, ini, "adam_v").values;
    if (a.m.size() != store.size() || a.v.size() != store.size())
      throw FormatError(FormatErrc::dims, "optimiser moments do not match the parameters");
    ck.adam = std::move(a);
  }
  return ck;
}

// ---- CSV ----

inline void write_history(const std::filesystem::path& path, const std::vector<pipeline::HistoryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  f << "epoch,step,lr,train_loss\n";
  for (const auto& r : rows) f << r.epoch << ',' << r.step << ',' << fmt(r.lr) << ',' << fmt(r.train_loss) << '\n';
}

inline void write_metrics(const std::filesystem::path& path, const pipeline::Metrics& m,
                          const std::vector<std::uint64_t>& seeds) {
  std::ofstream f(path);
  if (!f) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  f << "index,seed,mse_per_pixel,rel_l2\n";
  for (std::size_t k = 0; k < m.mse.size(); ++k)
    f << k << ',' << (k < seeds.size() ? seeds[k] : 0) << ',' << fmt(m.mse[k]) << ',' << fmt(m.rel_l2[k]) << '\n';
  f << "mean,," << fmt(m.mean_mse()) << ',' << fmt(m.mean_rel_l2()) << '\n';
}

}  // namespace wbnet::io
