// wbnet: command-line driver for data generation, training, evaluation and benchmarks.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wbnet/diagnostics.hpp"
#include "wbnet/io/config.hpp"
#include "wbnet/io/container.hpp"
#include "wbnet/io/image.hpp"
#include "wbnet/pipeline/evaluate.hpp"
#include "wbnet/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace wbnet;

namespace {

// ---- logging ----

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

class Log {
 public:
  explicit Log(std::string event) : line_("event=" + event) {}

  template <class T>
  Log& kv(const std::string& key, const T& v) {
    if constexpr (std::is_floating_point_v<T>)
      line_ += " " + key + "=" + io::fmt(double(v));
    else if constexpr (std::is_arithmetic_v<T>)
      line_ += " " + key + "=" + std::to_string(v);
    else
      line_ += " " + key + "=" + as_value(std::string(v));
    return *this;
  }

  ~Log() { std::cerr << line_ << '\n'; }

 private:
  static std::string as_value(const std::string& s) {
    return s.find_first_of(" \"=") == std::string::npos && !s.empty() ? s : quoted(s);
  }

  std::string line_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- shared helpers ----

/// A split directory (with train/ and test/) or a single dataset directory.
pipeline::Dataset load_split_part(const fs::path& dir, const std::string& part) {
  if (fs::exists(dir / "manifest.ini")) return io::load_dataset(dir);
  return io::load_dataset(dir / part);
}

io::ImageOptions image_options(bool png) {
  io::ImageOptions o;
  o.png = png;
  o.colormap = io::Colormap::hot;
  return o;
}

void emit_pair(const fs::path& dir, const std::string& stem, const RealGrid& pred, const RealGrid& target, bool png) {
  // Shared range so prediction and target are directly comparable.
  io::ImageOptions o = image_options(png);
  o.range = std::pair{std::min(pred.minCoeff(), target.minCoeff()), std::max(pred.maxCoeff(), target.maxCoeff())};
  io::emit_image(dir / (stem + "_pred"), pred, o);
  io::emit_image(dir / (stem + "_target"), target, o);
}

std::vector<pipeline::HistoryRow> read_history(const fs::path& path) {
  std::vector<pipeline::HistoryRow> rows;
  std::ifstream f(path);
  if (!f) return rows;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string c[4];
    for (auto& x : c) std::getline(ss, x, ',');
    rows.push_back({io::parse<std::size_t>(c[0], "history epoch"), io::parse<std::int64_t>(c[1], "history step"),
                    io::parse<double>(c[2], "history lr"), io::parse<double>(c[3], "history loss")});
  }
  return rows;
}

void write_f32_images(const fs::path& path, const std::vector<RealGrid>& imgs) {
  if (imgs.empty()) throw DataError("no images to write");
  const auto n = std::uint64_t(imgs.front().rows());
  io::Array<float> a{{std::uint64_t(imgs.size()), n, n}, {}};
  a.values.reserve(a.count());
  for (const auto& im : imgs)
    for (Eigen::Index i = 0; i < im.rows(); ++i)
      for (Eigen::Index j = 0; j < im.cols(); ++j) a.values.push_back(float(im(i, j)));
  io::write_blob(path, a);
}

int report_checks(const std::vector<diag::Check>& checks, const std::string& what) {
  int failed = 0;
  for (const auto& c : checks) {
    Log(what).kv("check", c.name).kv("value", c.value).kv("bound", c.bound).kv("pass", c.pass() ? "yes" : "no");
    failed += !c.pass();
  }
  Log(what + ".done").kv("checks", checks.size()).kv("failed", failed);
  if (failed) throw NumericalError(what + ": " + std::to_string(failed) + " of " + std::to_string(checks.size()) +
                                   " checks failed");
  return 0;
}

struct Options {
  std::string config, out, data, checkpoint, input, resume, variant, family;
  std::vector<std::string> checkpoints, datas;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::optional<int> order;
  std::optional<std::size_t> epochs;
  std::optional<std::int64_t> max_steps;
  std::vector<double> freqs;
  std::string band = "top";
  double eps = 1.0, tol = 1e-4;
  int restart = 10, max_iter = 500;
  int images = 0;
  bool png = false, no_fbp = false;
};

// ---- subcommands ----

int cmd_generate(const Options& o) {
  io::RunConfig rc = io::load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (!o.family.empty()) rc.family = ScattererSpec::for_family(family_from_string(o.family));
  const auto t0 = std::chrono::steady_clock::now();
  pipeline::Split split;
  if (o.order) {
    const auto order = stencil_from_int(*o.order);
    const std::uint64_t base = rc.seed * 1000003ull;
    split.train = pipeline::generate_dataset(rc.grid, rc.family, order, pipeline::seed_range(base, rc.n_train));
    split.test = pipeline::generate_dataset(rc.grid, rc.family, order, pipeline::seed_range(base + rc.n_train, rc.n_test));
  } else {
    split = pipeline::generate_split(rc.grid, rc.family, rc.seed, rc.n_train, rc.n_test);
  }
  io::save_dataset(fs::path(o.out) / "train", split.train);
  io::save_dataset(fs::path(o.out) / "test", split.test);
  Log("generate.done")
      .kv("family", to_string(rc.family.family))
      .kv("n", rc.grid.n())
      .kv("train", split.train.size())
      .kv("test", split.test.size())
      .kv("seed", rc.seed)
      .kv("seconds", seconds_since(t0))
      .kv("out", o.out);
  return 0;
}

int cmd_train(const Options& o) {
  io::RunConfig rc = io::load_run_config(o.config);
  auto& tc = rc.train;
  if (o.seed) tc.seed = *o.seed;
  if (o.sigma) tc.sigma = *o.sigma;
  if (!o.variant.empty()) tc.net.variant = nn::variant_from_string(o.variant);
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.max_steps) tc.max_steps = *o.max_steps;
  tc.validate();
  const pipeline::Dataset train = load_split_part(o.data, "train");
  pipeline::Trainer t(tc, train);
  const fs::path out = o.out;
  fs::create_directories(out);
  if (!o.resume.empty()) {
    io::Checkpoint ck = io::load_checkpoint(o.resume);
    if (!ck.adam) throw DataError("checkpoint " + o.resume + " has no optimizer state to resume from");
    if (ck.model.config() != tc.net) throw ConfigError("checkpoint network differs from the configured network");
    t.resume(ck.model, *ck.adam, ck.epoch, read_history(fs::path(o.resume) / "history.csv"));
    Log("train.resume").kv("from", o.resume).kv("epoch", ck.epoch).kv("step", t.step());
  }
  Log("train.start")
      .kv("variant", nn::to_string(tc.net.variant))
      .kv("params", t.model().net.params().size())
      .kv("samples", train.size())
      .kv("epochs", tc.epochs)
      .kv("batch", tc.batch)
      .kv("sigma", tc.sigma)
      .kv("seed", tc.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const auto save = [&](const pipeline::Trainer& tr, const fs::path& dir) {
    io::save_checkpoint(dir, tr.model(), &tr.adam(), tr.epoch());
    io::write_history(dir / "history.csv", tr.history());
  };
  pipeline::train(
      t, [&](const pipeline::Trainer& tr) { save(tr, out / ("checkpoint-epoch-" + std::to_string(tr.epoch()))); },
      [&](const pipeline::HistoryRow& r) {
        Log("train.epoch").kv("epoch", r.epoch).kv("step", r.step).kv("lr", r.lr).kv("loss", r.train_loss).kv(
            "seconds", seconds_since(t0));
        return true;
      });
  save(t, out / "final");
  io::write_history(out / "history.csv", t.history());
  Log("train.done").kv("epoch", t.epoch()).kv("step", t.step()).kv("seconds", seconds_since(t0)).kv("out", o.out);
  return 0;
}

int cmd_eval(const Options& o) {
  const io::Checkpoint ck = io::load_checkpoint(o.checkpoint);
  const pipeline::Dataset test = load_split_part(o.data, "test");
  const double sigma = o.sigma.value_or(1.0);
  const std::uint64_t seed = o.seed.value_or(0);
  const auto ev = pipeline::evaluate(ck.model, test, sigma, seed);
  const fs::path out = o.out;
  fs::create_directories(out);
  io::write_metrics(out / "metrics.csv", ev.metrics, test.seeds);
  for (int k = 0; k < std::min<int>(o.images, int(test.size())); ++k)
    emit_pair(out, "eval_" + std::to_string(k), ev.predictions[std::size_t(k)], ev.targets[std::size_t(k)], o.png);
  Log("eval.done")
      .kv("samples", test.size())
      .kv("sigma", sigma)
      .kv("mse_per_pixel", ev.metrics.mean_mse())
      .kv("rel_l2", ev.metrics.mean_rel_l2())
      .kv("out", o.out);
  std::cout << "mse_per_pixel=" << io::fmt(ev.metrics.mean_mse()) << " rel_l2=" << io::fmt(ev.metrics.mean_rel_l2())
            << '\n';
  return 0;
}

int cmd_infer(const Options& o) {
  const io::Checkpoint ck = io::load_checkpoint(o.checkpoint);
  const pipeline::Dataset d = io::load_dataset(o.input);
  const double sigma = o.sigma.value_or(0.0);
  const std::uint64_t seed = o.seed.value_or(0);
  std::vector<FarFieldCube> views;
  for (std::size_t k = 0; k < d.size(); ++k) views.push_back(pipeline::eval_view(d.data[k], d.seeds[k], sigma, seed));
  const auto preds = pipeline::predict(ck.model, views);
  const fs::path out = o.out;
  fs::create_directories(out);
  for (std::size_t k = 0; k < preds.size(); ++k) io::emit_image(out / ("pred_" + std::to_string(k)), preds[k], image_options(o.png));
  write_f32_images(out / "predictions.wbds", preds);
  Log("infer.done").kv("samples", preds.size()).kv("sigma", sigma).kv("out", o.out);
  return 0;
}

int cmd_fbp(const Options& o) {
  const pipeline::Dataset d = io::load_dataset(o.input);
  const auto stats = o.checkpoint.empty() ? pipeline::NormalizationStats::fit(d.data)
                                          : io::load_checkpoint(o.checkpoint).model.stats;
  if (stats.frequencies() != d.hertz.size()) throw DataError("statistics and dataset frequency counts differ");
  std::vector<std::size_t> slices;
  if (!o.freqs.empty()) {
    for (double f : o.freqs) {
      std::size_t k = 0;
      while (k < d.hertz.size() && std::abs(d.hertz[k] - f) > 1e-9 * f) ++k;
      if (k == d.hertz.size()) throw ConfigError("frequency " + io::fmt(f) + " Hz is not in the dataset band " + io::fmt_list(d.hertz));
      slices.push_back(k);
    }
  } else if (o.band == "all") {
    for (std::size_t k = 0; k < d.hertz.size(); ++k) slices.push_back(k);
  } else if (o.band == "top") {
    slices.push_back(d.hertz.size() - 1);
  } else {
    throw ConfigError("--band must be top or all");
  }
  const auto geo = AcquisitionGeometry::for_grid(d.grid);
  std::vector<BornOperator> ops;
  for (std::size_t k : slices) ops.emplace_back(d.grid, geo, d.hertz[k]);
  const double sigma = o.sigma.value_or(0.0);
  const std::uint64_t seed = o.seed.value_or(0);
  const GmresOptions gopt{o.tol, o.restart, o.max_iter};
  const fs::path out = o.out;
  fs::create_directories(out);
  pipeline::Metrics metrics;
  std::vector<RealGrid> imgs;
  int unconverged = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const FarFieldCube view = pipeline::eval_view(d.data[k], d.seeds[k], sigma, seed);
    std::vector<FbpTerm> terms;
    for (std::size_t t = 0; t < slices.size(); ++t)
      terms.push_back({&ops[t], &view.slices[slices[t]], 1.0, stats.std[slices[t]]});
    const FbpResult r = fbp_solve(terms, o.eps, gopt);
    unconverged += !r.converged;
    imgs.push_back(r.image);
    const RealGrid target = pipeline::smooth_target(d.eta[k]);
    metrics.add(r.image, target);
    if (int(k) < o.images) emit_pair(out, "fbp_" + std::to_string(k), r.image, target, o.png);
  }
  write_f32_images(out / "fbp.wbds", imgs);
  io::write_metrics(out / "metrics.csv", metrics, d.seeds);
  Log("fbp.done")
      .kv("samples", d.size())
      .kv("frequencies", slices.size())
      .kv("eps", o.eps)
      .kv("sigma", sigma)
      .kv("unconverged", unconverged)
      .kv("mse_per_pixel", metrics.mean_mse())
      .kv("out", o.out);
  return 0;
}

std::vector<io::Checkpoint> load_checkpoints(const std::vector<std::string>& dirs) {
  std::vector<io::Checkpoint> out;
  for (const auto& d : dirs) out.push_back(io::load_checkpoint(d));
  return out;
}

int cmd_bench_collision(const Options& o) {
  io::RunConfig rc = io::load_run_config(o.config);
  auto opt = rc.collision;
  opt.seed = o.seed.value_or(rc.seed);
  if (o.sigma) opt.sigma = *o.sigma;
  const auto cks = load_checkpoints(o.checkpoints);
  std::vector<pipeline::NamedModel> models;
  for (std::size_t k = 0; k < cks.size(); ++k) {
    std::string name = nn::to_string(cks[k].model.config().variant);
    for (std::size_t j = 0; j < k; ++j)
      if (models[j].name == name) name += "_" + std::to_string(k);
    models.push_back({name, &cks[k].model});
  }
  const auto rep = pipeline::benchmark_collision(rc.grid, models, opt);
  const fs::path out = o.out;
  fs::create_directories(out);
  std::ofstream f(out / "collision.csv");
  f << "gap,method,detected,total,rate\n";
  for (const auto& r : rep.rows) {
    f << r.gap << ',' << r.method << ',' << r.detected << ',' << r.total << ',' << io::fmt(r.rate()) << '\n';
    Log("collision").kv("gap", r.gap).kv("method", r.method).kv("detected", r.detected).kv("total", r.total);
  }
  for (std::size_t g = 0; g < rep.media.size(); ++g) {
    const std::string stem = "gap" + std::to_string(opt.gaps[g]);
    io::ImageOptions io_opt = image_options(o.png);
    io_opt.range = std::pair{0.0, opt.amplitude};
    io::emit_image(out / (stem + "_medium"), rep.media[g], io_opt);
    for (std::size_t m = 0; m < rep.images[g].size(); ++m)
      io::emit_image(out / (stem + "_" + (m < models.size() ? models[m].name : "fbp")), rep.images[g][m], io_opt);
  }
  Log("collision.done").kv("draws", opt.draws).kv("sigma", opt.sigma).kv("out", o.out);
  return 0;
}

int cmd_bench_noise(const Options& o) {
  const io::Checkpoint ck = io::load_checkpoint(o.checkpoint);
  const pipeline::Dataset test = load_split_part(o.data, "test");
  std::vector<double> sigmas{0, 0.5, 1, 1.5, 2, 3};
  io::FbpSettings fs_opt;
  std::uint64_t seed = o.seed.value_or(0);
  if (!o.config.empty()) {
    const io::RunConfig rc = io::load_run_config(o.config);
    sigmas = rc.noise_sigmas;
    fs_opt = rc.fbp;
    if (!o.seed) seed = rc.seed;
  }
  std::optional<pipeline::FbpBaseline> fbp;
  if (!o.no_fbp) fbp.emplace(test.grid, test.hertz, ck.model.stats, fs_opt.eps, fs_opt.gmres, fs_opt.band);
  const auto rows = pipeline::benchmark_noise(ck.model, test, sigmas, seed, fbp ? &*fbp : nullptr);
  const fs::path out = o.out;
  fs::create_directories(out);
  std::ofstream f(out / "noise.csv");
  f << "sigma,mse_per_pixel,rel_l2,largest_detected,fbp_mse_per_pixel\n";
  for (const auto& r : rows) {
    f << io::fmt(r.sigma) << ',' << io::fmt(r.mse) << ',' << io::fmt(r.rel_l2) << ',' << io::fmt(r.largest_detected)
      << ',' << (std::isnan(r.fbp_mse) ? std::string() : io::fmt(r.fbp_mse)) << '\n';
    Log("noise").kv("sigma", r.sigma).kv("mse_per_pixel", r.mse).kv("rel_l2", r.rel_l2).kv("largest_detected",
                                                                                           r.largest_detected);
  }
  if (test.size() > 0)
    for (double s : sigmas) {
      const auto view = pipeline::eval_view(test.data[0], test.seeds[0], s, seed);
      emit_pair(out, "sigma" + io::fmt(s), pipeline::predict(ck.model, view),
                pipeline::smooth_target(test.eta[0], ck.model.smoothing), o.png);
    }
  Log("noise.done").kv("samples", test.size()).kv("out", o.out);
  return 0;
}

int cmd_gen_matrix(const Options& o) {
  if (o.checkpoints.empty() || o.datas.empty()) throw ConfigError("gen-matrix needs --checkpoint and --data (repeatable)");
  const auto cks = load_checkpoints(o.checkpoints);
  std::vector<pipeline::Dataset> sets;
  for (const auto& d : o.datas) sets.push_back(load_split_part(d, "test"));
  std::vector<const pipeline::Model*> models;
  std::vector<const pipeline::Dataset*> tests;
  for (const auto& c : cks) models.push_back(&c.model);
  for (const auto& s : sets) tests.push_back(&s);
  const double sigma = o.sigma.value_or(1.0);
  const auto m = pipeline::generalization_matrix(models, tests, sigma, o.seed.value_or(0));
  const Eigen::MatrixXd logm = m.array().log10();
  const fs::path out = o.out;
  fs::create_directories(out);
  std::ofstream f(out / "matrix.csv");
  f << "trained_on";
  for (const auto& s : sets) f << ',' << to_string(s.spec.family);
  f << '\n';
  for (Eigen::Index i = 0; i < logm.rows(); ++i) {
    f << to_string(cks[std::size_t(i)].model.train_family);
    for (Eigen::Index j = 0; j < logm.cols(); ++j) f << ',' << io::fmt(logm(i, j));
    f << '\n';
  }
  io::ImageOptions img = image_options(o.png);
  img.scale = 32;
  io::emit_image(out / "matrix", RealGrid(logm), img);
  Log("matrix.done").kv("models", models.size()).kv("sets", sets.size()).kv("sigma", sigma).kv("out", o.out);
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(1);
  auto checks = diag::layer_gradient_checks(seed);
  std::vector<nn::Variant> variants{nn::Variant::wide, nn::Variant::narrow, nn::Variant::switchless};
  if (!o.variant.empty()) variants = {nn::variant_from_string(o.variant)};
  for (auto v : variants) checks.push_back(diag::network_gradient_check(v, seed));
  return report_checks(checks, "gradcheck");
}

int cmd_selftest(const Options& o) { return report_checks(diag::selftest(o.seed.value_or(1)), "selftest"); }

int fail(int code, const char* kind, const std::string& reason) {
  std::cerr << "error code=" << code << " kind=" << kind << " reason=" << quoted(reason) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wbnet: wide-band butterfly network inverse-scattering workbench"};
  app.require_subcommand(1);
  Options o;
  std::function<int(const Options&)> action;

  const auto sub = [&](const std::string& name, const std::string& help, int (*fn)(const Options&)) {
    CLI::App* s = app.add_subcommand(name, help);
    s->callback([&action, fn] { action = fn; });
    return s;
  };
  const auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Seed (overrides the config)"); };
  const auto sigma = [&](CLI::App* s) { s->add_option("--sigma", o.sigma, "Multiplicative noise level"); };
  const auto png = [&](CLI::App* s) { s->add_flag("--png", o.png, "Also write PNG images"); };

  auto* gen = sub("generate-data", "Generate train/test far-field datasets", cmd_generate);
  gen->add_option("--config", o.config)->required();
  gen->add_option("--out", o.out)->required();
  gen->add_option("--order", o.order, "Stencil order for both splits (default: 2 train, 4 test)")
      ->check(CLI::IsMember({2, 4}));
  gen->add_option("--family", o.family, "Scatterer family (overrides the config)");
  seed(gen);

  auto* tr = sub("train", "Train a network on a generated split", cmd_train);
  tr->add_option("--config", o.config)->required();
  tr->add_option("--data", o.data, "Split or training dataset directory")->required();
  tr->add_option("--out", o.out)->required();
  tr->add_option("--variant", o.variant, "wide, narrow or switchless");
  tr->add_option("--resume", o.resume, "Checkpoint directory to continue from");
  tr->add_option("--epochs", o.epochs);
  tr->add_option("--max-steps", o.max_steps);
  seed(tr);
  sigma(tr);

  auto* ev = sub("eval", "Per-pixel MSE and relative error on a test set", cmd_eval);
  ev->add_option("--checkpoint", o.checkpoint)->required();
  ev->add_option("--data", o.data)->required();
  ev->add_option("--out", o.out)->required();
  ev->add_option("--images", o.images, "Write the first N prediction/target pairs");
  seed(ev);
  sigma(ev);
  png(ev);

  auto* inf = sub("infer", "Reconstruct every sample of a dataset", cmd_infer);
  inf->add_option("--checkpoint", o.checkpoint)->required();
  inf->add_option("--input", o.input)->required();
  inf->add_option("--out", o.out)->required();
  seed(inf);
  sigma(inf);
  png(inf);

  auto* fb = sub("fbp", "Filtered back-projection reconstructions", cmd_fbp);
  fb->add_option("--input", o.input)->required();
  fb->add_option("--out", o.out)->required();
  fb->add_option("--freq", o.freqs, "Frequency in Hz (repeatable; default: highest)");
  fb->add_option("--band", o.band, "top or all when --freq is absent");
  fb->add_option("--eps", o.eps, "Regularisation in standardised data units");
  fb->add_option("--tol", o.tol);
  fb->add_option("--restart", o.restart);
  fb->add_option("--max-iter", o.max_iter);
  fb->add_option("--checkpoint", o.checkpoint, "Take data statistics from this checkpoint");
  fb->add_option("--images", o.images);
  seed(fb);
  sigma(fb);
  png(fb);

  auto* col = sub("bench-collision", "Detection of nearby scatterers against their gap", cmd_bench_collision);
  col->add_option("--config", o.config)->required();
  col->add_option("--checkpoint", o.checkpoints)->required();
  col->add_option("--out", o.out)->required();
  seed(col);
  sigma(col);
  png(col);

  auto* noise = sub("bench-noise", "Error and detection against the noise level", cmd_bench_noise);
  noise->add_option("--checkpoint", o.checkpoint)->required();
  noise->add_option("--data", o.data)->required();
  noise->add_option("--out", o.out)->required();
  noise->add_option("--config", o.config, "Noise levels and FBP settings");
  noise->add_flag("--no-fbp", o.no_fbp);
  seed(noise);
  png(noise);

  auto* mat = sub("gen-matrix", "Cross-family generalisation matrix", cmd_gen_matrix);
  mat->add_option("--checkpoint", o.checkpoints)->required();
  mat->add_option("--data", o.datas)->required();
  mat->add_option("--out", o.out)->required();
  seed(mat);
  sigma(mat);
  png(mat);

  auto* gc = sub("gradcheck", "Finite-difference checks of every layer and the tiny network", cmd_gradcheck);
  gc->add_option("--variant", o.variant);
  seed(gc);

  auto* st = sub("selftest", "Structural, physics and gradient invariant suite", cmd_selftest);
  seed(st);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "config", e.what());
  }

  try {
    Log("start").kv("command", app.get_subcommands().front()->get_name()).kv("threads", worker_count());
    return action(o);
  } catch (const ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const io::FormatError& e) {
    return fail(3, "format", e.what());
  } catch (const DataError& e) {
    return fail(3, "data", e.what());
  } catch (const ShapeError& e) {
    return fail(3, "shape", e.what());
  } catch (const NumericalError& e) {
    return fail(4, "numerical", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(3, "io", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}
