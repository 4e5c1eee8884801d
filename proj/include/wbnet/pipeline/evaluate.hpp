#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "wbnet/physics/born.hpp"
#include "wbnet/pipeline/model.hpp"
#include "wbnet/pipeline/target.hpp"

namespace wbnet::pipeline {

struct Metrics {
  std::vector<double> mse;     // per pixel, one entry per image
  std::vector<double> rel_l2;  // squared, per image

  static double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  }
  double mean_mse() const { return mean(mse); }
  double mean_rel_l2() const { return mean(rel_l2); }

  void add(const RealGrid& pred, const RealGrid& target) {
    mse.push_back(mse_per_pixel(pred, target));
    rel_l2.push_back(pipeline::rel_l2(pred, target));
  }
};

/// Evaluation noise is keyed by the medium's seed, so every method sees the same draw.
inline FarFieldCube eval_view(const FarFieldCube& clean, std::uint64_t medium_seed, double sigma, std::uint64_t seed) {
  auto rng = stream_rng(seed, medium_seed, 0xe7a1);
  return inject_noise(clean, sigma, rng);
}

struct Evaluation {
  Metrics metrics;
  std::vector<RealGrid> predictions;
  std::vector<RealGrid> targets;
};

inline Evaluation evaluate(const Model& model, const Dataset& test, double sigma, std::uint64_t seed) {
  test.check();
  model.check_eval_set(test);
  std::vector<FarFieldCube> views;
  for (std::size_t k = 0; k < test.size(); ++k) views.push_back(eval_view(test.data[k], test.seeds[k], sigma, seed));
  Evaluation ev;
  ev.predictions = predict(model, views);
  for (std::size_t k = 0; k < test.size(); ++k) {
    ev.targets.push_back(smooth_target(test.eta[k], model.smoothing));
    ev.metrics.add(ev.predictions[k], ev.targets[k]);
  }
  return ev;
}

/// Which slices filtered back-projection inverts: the highest frequency only (default
/// baseline) or all of them stacked with unit weights.
enum class FbpBand { top, all };

/// Filtered back-projection baseline; eps is in standardised data units because each
/// frequency is scaled by the training std.
class FbpBaseline {
 public:
  FbpBaseline(const GridSpec& grid, const std::vector<double>& hertz, const NormalizationStats& stats, double eps,
              GmresOptions gmres = {1e-4, 10, 500}, FbpBand band = FbpBand::top)
      : stats_(stats), eps_(eps), gmres_(gmres), first_(band == FbpBand::top ? hertz.size() - 1 : 0) {
    if (hertz.empty()) throw ConfigError("FBP: empty frequency band");
    if (stats.frequencies() != hertz.size()) throw DataError("FBP: stats and frequency band disagree");
    const auto geo = AcquisitionGeometry::for_grid(grid);
    for (double f : hertz) ops_.emplace_back(grid, geo, f);
  }

  FbpResult solve(const FarFieldCube& cube) const {
    if (cube.frequencies() != ops_.size()) throw DataError("FBP: cube frequency count mismatch");
    std::vector<FbpTerm> terms;
    for (std::size_t f = first_; f < ops_.size(); ++f)
      terms.push_back({&ops_[f], &cube.slices[f], 1.0, stats_.std[f]});
    return fbp_solve(terms, eps_, gmres_);
  }

  RealGrid image(const FarFieldCube& cube) const { return solve(cube).image; }

 private:
  std::vector<BornOperator> ops_;
  NormalizationStats stats_;
  double eps_;
  GmresOptions gmres_;
  std::size_t first_;
};

inline Evaluation evaluate_fbp(const FbpBaseline& fbp, const Dataset& test, double sigma, std::uint64_t seed,
                               double smoothing = 0.75) {
  Evaluation ev;
  for (std::size_t k = 0; k < test.size(); ++k) {
    ev.predictions.push_back(fbp.image(eval_view(test.data[k], test.seeds[k], sigma, seed)));
    ev.targets.push_back(smooth_target(test.eta[k], smoothing));
    ev.metrics.add(ev.predictions.back(), ev.targets.back());
  }
  return ev;
}

/// Placed scatterers of test sample k, regenerated from its seed.
inline std::vector<Scatterer> scatterers_of(const Dataset& d, std::size_t k) {
  return generate_medium(d.grid, d.spec, d.seeds.at(k)).parts;
}

/// True when the image has a local maximum (>= its 8 neighbours) of height >= threshold
/// within `radius` pixels of the scatterer centre.
inline bool detected(const RealGrid& img, const Scatterer& s, double threshold, double radius = 3.0) {
  const int n = int(img.rows()), m = int(img.cols());
  const int r = int(std::ceil(radius));
  for (int i = std::max(0, int(std::floor(s.ci)) - r); i <= std::min(n - 1, int(std::ceil(s.ci)) + r); ++i)
    for (int j = std::max(0, int(std::floor(s.cj)) - r); j <= std::min(m - 1, int(std::ceil(s.cj)) + r); ++j) {
      if (std::hypot(i - s.ci, j - s.cj) > radius || img(i, j) < threshold) continue;
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= n || b >= m) continue;
          if (img(a, b) > img(i, j)) {
            peak = false;
            break;
          }
        }
      if (peak) return true;
    }
  return false;
}

struct CollisionRow {
  int gap = 0;
  std::string method;
  int detected = 0;
  int total = 0;

  double rate() const { return total ? double(detected) / double(total) : 0.0; }
};

struct CollisionOptions {
  Shape shape = Shape::square;
  std::vector<int> sides{3, 5};
  std::vector<int> gaps{2, 4, 8, 16};
  double amplitude = 0.2;
  double sigma = 1.0;
  int draws = 10;
  std::uint64_t seed = 0;
  double fbp_eps = 1.0;
  FbpBand fbp_band = FbpBand::top;
  double detect_fraction = 0.5;
};

struct CollisionReport {
  std::vector<CollisionRow> rows;
  /// First draw per gap: medium and one image per method (models..., then FBP).
  std::vector<RealGrid> media;
  std::vector<std::vector<RealGrid>> images;

  const CollisionRow& find(int gap, const std::string& method) const {
    for (const auto& r : rows)
      if (r.gap == gap && r.method == method) return r;
    throw ConfigError("no collision row for gap " + std::to_string(gap) + " / " + method);
  }
};

struct NamedModel {
  std::string name;
  const Model* model;
};

/// Scatterers separated by each gap, order-4 data with noise, reconstructed by every model
/// and by FBP (with the first model's statistics); counts per-scatterer detections.
inline CollisionReport benchmark_collision(const GridSpec& grid, const std::vector<NamedModel>& models,
                                           const CollisionOptions& opt) {
  if (models.empty()) throw ConfigError("collision benchmark needs a model");
  const auto hz = band(grid);
  const auto geo = AcquisitionGeometry::for_grid(grid);
  const FbpBaseline fbp(grid, hz, models.front().model->stats, opt.fbp_eps, {1e-4, 10, 500}, opt.fbp_band);
  CollisionReport rep;
  for (int gap : opt.gaps) {
    std::vector<CollisionRow> rows;
    for (const auto& m : models) rows.push_back({gap, m.name, 0, 0});
    rows.push_back({gap, "fbp", 0, 0});
    for (int d = 0; d < opt.draws; ++d) {
      const std::uint64_t mseed = opt.seed * 7919 + std::uint64_t(gap) * 101 + std::uint64_t(d);
      const Medium med = generate_collision(grid, opt.shape, opt.sides, gap, opt.amplitude, mseed);
      const FarFieldCube data = eval_view(forward_map(grid, med.eta, geo, hz, StencilOrder::fourth), mseed, opt.sigma,
                                          opt.seed);
      std::vector<RealGrid> imgs;
      for (const auto& m : models) imgs.push_back(predict(*m.model, data));
      imgs.push_back(fbp.image(data));
      for (std::size_t k = 0; k < imgs.size(); ++k)
        for (const auto& s : med.parts) {
          rows[k].detected += detected(imgs[k], s, opt.detect_fraction * opt.amplitude);
          ++rows[k].total;
        }
      if (d == 0) {
        rep.media.push_back(med.eta);
        rep.images.push_back(imgs);
      }
    }
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  return rep;
}

struct NoiseRow {
  double sigma = 0;
  double mse = 0;
  double rel_l2 = 0;
  /// Fraction of test images whose largest scatterer is detected.
  double largest_detected = 0;
  double fbp_mse = std::nan("");
};

inline std::vector<NoiseRow> benchmark_noise(const Model& model, const Dataset& test, const std::vector<double>& sigmas,
                                             std::uint64_t seed, const FbpBaseline* fbp = nullptr) {
  std::vector<std::vector<Scatterer>> parts;
  for (std::size_t k = 0; k < test.size(); ++k) parts.push_back(scatterers_of(test, k));
  std::vector<NoiseRow> rows;
  for (double sigma : sigmas) {
    const Evaluation ev = evaluate(model, test, sigma, seed);
    NoiseRow r{sigma, ev.metrics.mean_mse(), ev.metrics.mean_rel_l2(), 0.0};
    int hits = 0, counted = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
      if (parts[k].empty()) continue;
      const auto big = std::max_element(parts[k].begin(), parts[k].end(),
                                        [](const Scatterer& a, const Scatterer& b) { return a.side < b.side; });
      hits += detected(ev.predictions[k], *big, 0.5 * test.spec.amplitude);
      ++counted;
    }
    r.largest_detected = counted ? double(hits) / counted : 0.0;
    if (fbp) r.fbp_mse = evaluate_fbp(*fbp, test, sigma, seed, model.smoothing).metrics.mean_mse();
    rows.push_back(r);
  }
  return rows;
}

/// Mean per-pixel MSE of every model (rows) on every test set (columns).
inline Eigen::MatrixXd generalization_matrix(const std::vector<const Model*>& models,
                                             const std::vector<const Dataset*>& tests, double sigma,
                                             std::uint64_t seed) {
  Eigen::MatrixXd out(Eigen::Index(models.size()), Eigen::Index(tests.size()));
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = 0; j < tests.size(); ++j)
      out(Eigen::Index(i), Eigen::Index(j)) = evaluate(*models[i], *tests[j], sigma, seed).metrics.mean_mse();
  return out;
}

}  // namespace wbnet::pipeline
