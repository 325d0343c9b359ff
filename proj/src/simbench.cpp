#include "plada/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "plada/csv.hpp"
#include "plada/labeling.hpp"
#include "plada/rng.hpp"
#include "plada/scoring.hpp"
#include "plada/selection.hpp"

namespace plada::simbench {

namespace {

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace

void SimConfig::validate() const {
  if (feature_dim < 1 || target_classes < 2 || train_per_class < 1 ||
      test_per_class < 1 || reference_size < 1 || distractor_clusters < 1 ||
      epochs < 1)
    throw InvalidShape("sim config: all counts must be >= 1 (and classes >= 2)");
  if (!(distractor_fraction >= 0.0 && distractor_fraction < 1.0))
    throw InvalidShape("sim config: distractor_fraction must be in [0,1)");
  if (!(cluster_separation > 0.0) || !(noise_sigma > 0.0) ||
      !(learning_rate > 0.0) || !(temperature > 0.0) ||
      !(weight_temperature > 0.0))
    throw InvalidShape("sim config: scales and rates must be positive");
}

// Calibrated once by a pilot sweep: full-batch descent with a 40-step budget
// leaves the no-filter student starved by the 80% distractor share of its
// gradient, while the filtered student converges on the kept cores.
SimConfig default_denoising_config() {
  SimConfig cfg;
  cfg.feature_dim = 16;
  cfg.target_classes = 5;
  cfg.train_per_class = 200;
  cfg.test_per_class = 200;
  cfg.reference_size = 4000;
  cfg.distractor_clusters = 64;
  cfg.distractor_fraction = 0.8;
  cfg.noise_sigma = 1.0;
  cfg.cluster_separation = 6.0;  // 6 * noise_sigma
  cfg.learning_rate = 0.005;
  cfg.epochs = 40;
  cfg.batch_size = 0;  // full batch
  cfg.loss = LossKind::HardCE;
  return cfg;
}

Generated generate(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.feature_dim;
  const std::size_t k = cfg.target_classes;
  if (d < k)
    throw InvalidShape("sim config: feature_dim must be >= target_classes");
  Rng rng(Rng::derive(cfg.seed, 0));

  // Target means: a regular simplex with edge length cluster_separation,
  // embedded along a seeded random orthonormal frame. Every pair of classes
  // is exactly cluster_separation apart.
  Matrix frame(k, d);  // k orthonormal rows
  for (std::size_t c = 0; c < k; ++c) {
    auto row = frame.row(c);
    while (true) {
      for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal();
      for (std::size_t prev = 0; prev < c; ++prev) {
        auto other = frame.row(prev);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += row[j] * other[j];
        for (std::size_t j = 0; j < d; ++j) row[j] -= dot * other[j];
      }
      double norm = 0.0;
      for (double x : row) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (double& x : row) x /= norm;
        break;
      }
    }
  }
  // Vertex c of the centered unit simplex is e_c - 1/k in frame coordinates,
  // with pairwise distance sqrt(2).
  const double simplex_scale = cfg.cluster_separation / std::sqrt(2.0);
  Matrix target_means(k, d);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t axis = 0; axis < k; ++axis) {
        const double coord =
            (axis == c ? 1.0 : 0.0) - 1.0 / static_cast<double>(k);
        acc += coord * frame.at(axis, j);
      }
      target_means.at(c, j) = simplex_scale * acc;
    }

  // Orthonormal basis of the target-mean span (modified Gram-Schmidt).
  std::vector<std::vector<double>> basis;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v(target_means.row(c).begin(), target_means.row(c).end());
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < d; ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 1e-9) {
      for (double& x : v) x /= norm;
      basis.push_back(std::move(v));
    }
  }

  // Distractor means: drawn orthogonal to the target-mean span, which keeps
  // every distractor at least 3 * cluster_separation away from every target
  // mean and gives the teacher no aligned weight direction, so their logits
  // stay diffuse (high energy). The resample guard below re-checks the
  // distance rule explicitly.
  const double floor_dist = 3.0 * cfg.cluster_separation;
  Matrix distractor_means(cfg.distractor_clusters, d);
  for (std::size_t q = 0; q < cfg.distractor_clusters; ++q) {
    for (int attempt = 0;; ++attempt) {
      std::vector<double> v(d);
      for (std::size_t j = 0; j < d; ++j) v[j] = rng.normal();
      if (basis.size() < d) {
        for (const auto& b : basis) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += v[j] * b[j];
          for (std::size_t j = 0; j < d; ++j) v[j] -= dot * b[j];
        }
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-9) continue;
      // Growing radius guarantees termination even when the span fills the
      // whole space and rejection has to do the work.
      const double radius =
          floor_dist * (rng.uniform(1.05, 1.35) + 0.1 * attempt);
      for (std::size_t j = 0; j < d; ++j) v[j] *= radius / norm;
      bool ok = true;
      for (std::size_t c = 0; c < k && ok; ++c)
        ok = dist(v, target_means.row(c)) >= floor_dist;
      if (ok) {
        for (std::size_t j = 0; j < d; ++j) distractor_means.at(q, j) = v[j];
        break;
      }
    }
  }

  auto sample_from = [&](std::span<const double> mean, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = mean[j] + cfg.noise_sigma * rng.normal();
  };

  Generated g;
  g.target_train.features = Matrix(k * cfg.train_per_class, d);
  g.target_train.labels.resize(k * cfg.train_per_class);
  g.target_test.features = Matrix(k * cfg.test_per_class, d);
  g.target_test.labels.resize(k * cfg.test_per_class);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < cfg.train_per_class; ++i) {
      const std::size_t row = c * cfg.train_per_class + i;
      sample_from(target_means.row(c), g.target_train.features.row(row));
      g.target_train.labels[row] = static_cast<std::uint32_t>(c);
    }
    for (std::size_t i = 0; i < cfg.test_per_class; ++i) {
      const std::size_t row = c * cfg.test_per_class + i;
      sample_from(target_means.row(c), g.target_test.features.row(row));
      g.target_test.labels[row] = static_cast<std::uint32_t>(c);
    }
  }

  const auto n_distract = static_cast<std::size_t>(std::llround(
      static_cast<double>(cfg.reference_size) * cfg.distractor_fraction));
  const std::size_t n_target_sourced = cfg.reference_size - n_distract;
  g.reference = Matrix(cfg.reference_size, d);
  for (std::size_t i = 0; i < n_target_sourced; ++i)
    sample_from(target_means.row(rng.below(k)), g.reference.row(i));
  for (std::size_t i = n_target_sourced; i < cfg.reference_size; ++i)
    sample_from(distractor_means.row(rng.below(cfg.distractor_clusters)),
                g.reference.row(i));
  return g;
}

Matrix forward(const LinearModel& model, const Matrix& features) {
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  const std::size_t k = model.weights.rows;
  Matrix logits(n, k);
  const std::ptrdiff_t pn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < pn; ++i) {
    auto x = features.row(static_cast<std::size_t>(i));
    auto out = logits.row(static_cast<std::size_t>(i));
    for (std::size_t c = 0; c < k; ++c) {
      double acc = model.bias[c];
      auto w = model.weights.row(c);
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
      out[c] = acc;
    }
  }
  return logits;
}

double accuracy(const LinearModel& model, const Dataset& data) {
  const Matrix logits = forward(model, data.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c)
      if (row[c] > row[best]) best = c;
    hits += (best == data.labels[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows);
}

namespace {

// Row softmax of precomputed logits, in place.
void softmax_row_inplace(std::span<double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double z = 0.0;
  for (double& v : row) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : row) v /= z;
}

// Per-sample target row for the loss variant. `dirichlet_rows` supplies the
// current epoch's sampled targets when the loss is DirichletKL.
struct TargetView {
  LossKind loss;
  std::span<const std::uint32_t> hard;
  const Matrix* prototypes;
  const Matrix* dirichlet_rows;  // n x k sampled targets
  const Matrix* soft_rows;       // explicit per-sample rows (tests)

  // Writes the target distribution for sample i into `out`.
  void target(std::size_t i, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (soft_rows != nullptr) {
      auto src = soft_rows->row(i);
      std::copy(src.begin(), src.end(), out.begin());
      return;
    }
    switch (loss) {
      case LossKind::HardCE:
      case LossKind::WeightedCE:
        out[hard[i]] = 1.0;
        break;
      case LossKind::PrototypeKL: {
        auto src = prototypes->row(hard[i]);
        std::copy(src.begin(), src.end(), out.begin());
        break;
      }
      case LossKind::DirichletKL: {
        auto src = dirichlet_rows->row(i);
        std::copy(src.begin(), src.end(), out.begin());
        break;
      }
    }
  }
};

double loss_over(const LinearModel& model, const Matrix& features,
                 const TargetView& tv, std::span<const double> weights,
                 std::span<const std::size_t> rows) {
  const std::size_t k = model.weights.rows;
  std::vector<double> target(k), logp(k);
  double total = 0.0;
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const std::size_t i = rows[idx];
    auto x = features.row(i);
    // log-softmax
    double mx = -1e300;
    for (std::size_t c = 0; c < k; ++c) {
      double acc = model.bias[c];
      auto w = model.weights.row(c);
      for (std::size_t j = 0; j < features.cols; ++j) acc += w[j] * x[j];
      logp[c] = acc;
      mx = std::max(mx, acc);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(logp[c] - mx);
    const double logz = mx + std::log(z);
    tv.target(i, target);
    double li = 0.0;
    const bool kl = tv.loss == LossKind::PrototypeKL ||
                    tv.loss == LossKind::DirichletKL;
    for (std::size_t c = 0; c < k; ++c) {
      if (target[c] <= 0.0) continue;
      li -= target[c] * (logp[c] - logz);
      if (kl) li += target[c] * std::log(target[c]);
    }
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w * li;
  }
  return total / static_cast<double>(rows.size());
}

// Accumulates gradients over `rows`. Serial, index-ascending accumulation,
// matching the published concurrency contract.
void grad_over(const LinearModel& model, const Matrix& features,
               const TargetView& tv, std::span<const double> weights,
               std::span<const std::size_t> rows, Matrix& grad_w,
               std::vector<double>& grad_b) {
  const std::size_t k = model.weights.rows;
  const std::size_t d = features.cols;
  std::fill(grad_w.data.begin(), grad_w.data.end(), 0.0);
  std::fill(grad_b.begin(), grad_b.end(), 0.0);
  std::vector<double> p(k), target(k);
  const double inv_b = 1.0 / static_cast<double>(rows.size());
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const std::size_t i = rows[idx];
    auto x = features.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      double acc = model.bias[c];
      auto w = model.weights.row(c);
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
      p[c] = acc;
    }
    softmax_row_inplace(p);
    tv.target(i, target);
    const double w = weights.empty() ? 1.0 : weights[i];
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = w * (p[c] - target[c]) * inv_b;
      grad_b[c] += delta;
      auto gw = grad_w.row(c);
      for (std::size_t j = 0; j < d; ++j) gw[j] += delta * x[j];
    }
  }
}

void check_finite(const LinearModel& model, double loss) {
  if (!std::isfinite(loss)) throw NonFiniteLoss("training loss diverged");
  for (double v : model.weights.data)
    if (!std::isfinite(v)) throw NonFiniteLoss("model weights diverged");
}

}  // namespace

double loss_value(const LinearModel& model, const Matrix& features,
                  std::span<const std::uint32_t> hard, const Matrix* soft_rows,
                  std::span<const double> weights, LossKind loss) {
  TargetView tv{loss, hard, nullptr, nullptr, soft_rows};
  std::vector<std::size_t> rows(features.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return loss_over(model, features, tv, weights, rows);
}

void loss_gradient(const LinearModel& model, const Matrix& features,
                   std::span<const std::uint32_t> hard, const Matrix* soft_rows,
                   std::span<const double> weights, LossKind loss,
                   Matrix& grad_weights, std::vector<double>& grad_bias) {
  TargetView tv{loss, hard, nullptr, nullptr, soft_rows};
  std::vector<std::size_t> rows(features.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  grad_weights = Matrix(model.weights.rows, model.weights.cols);
  grad_bias.assign(model.bias.size(), 0.0);
  grad_over(model, features, tv, weights, rows, grad_weights, grad_bias);
}

LinearModel train_softmax(const Matrix& features, const StudentTargets& targets,
                          const TrainOptions& opts,
                          std::vector<double>* loss_trace) {
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  if (targets.hard.size() != n)
    throw ShapeMismatch("targets length " + std::to_string(targets.hard.size()) +
                        " != feature rows " + std::to_string(n));
  if (!targets.weights.empty() && targets.weights.size() != n)
    throw ShapeMismatch("weights length mismatch");
  std::uint32_t k = opts.num_classes;
  if (k == 0) {
    for (auto l : targets.hard) k = std::max(k, l + 1);
    if (targets.prototypes != nullptr)
      k = std::max(k, static_cast<std::uint32_t>(targets.prototypes->rows));
    if (targets.dirichlet_alphas != nullptr)
      k = std::max(k, static_cast<std::uint32_t>(targets.dirichlet_alphas->rows));
    if (k < 2) k = 2;
  }
  for (auto l : targets.hard)
    if (l >= k)
      throw LabelOutOfRange("target label " + std::to_string(l) +
                            " >= k=" + std::to_string(k));

  if (opts.loss == LossKind::PrototypeKL && targets.prototypes == nullptr)
    throw ShapeMismatch("PrototypeKL needs a prototype matrix");
  if (opts.loss == LossKind::DirichletKL && targets.dirichlet_alphas == nullptr)
    throw ShapeMismatch("DirichletKL needs a concentration matrix");

  LinearModel model;
  model.weights = Matrix(k, d);
  model.bias.assign(k, 0.0);

  Rng rng(Rng::derive(opts.seed, 17));
  Matrix dirichlet_rows;
  auto resample_dirichlet = [&] {
    dirichlet_rows = Matrix(n, k);
    for (std::size_t i = 0; i < n; ++i)
      rng.dirichlet(targets.dirichlet_alphas->row(targets.hard[i]).data(), k,
                    dirichlet_rows.row(i).data());
  };
  if (opts.loss == LossKind::DirichletKL) resample_dirichlet();

  TargetView tv{opts.loss, targets.hard, targets.prototypes, &dirichlet_rows,
                nullptr};
  std::span<const double> weights =
      opts.loss == LossKind::WeightedCE ? targets.weights
                                        : std::span<const double>{};

  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  std::vector<std::size_t> order(all_rows);

  Matrix grad_w(k, d);
  std::vector<double> grad_b(k, 0.0);
  const std::size_t batch = opts.batch_size == 0 ? n : std::min(opts.batch_size, n);

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    if (opts.loss == LossKind::DirichletKL && epoch > 0 &&
        opts.dirichlet_resample == DirichletResample::PerEpoch)
      resample_dirichlet();
    if (loss_trace != nullptr) {
      const double l = loss_over(model, features, tv, weights, all_rows);
      check_finite(model, l);
      loss_trace->push_back(l);
    }
    if (batch == n) {
      grad_over(model, features, tv, weights, all_rows, grad_w, grad_b);
      for (std::size_t i = 0; i < model.weights.data.size(); ++i)
        model.weights.data[i] -= opts.learning_rate * grad_w.data[i];
      for (std::size_t c = 0; c < k; ++c)
        model.bias[c] -= opts.learning_rate * grad_b[c];
    } else {
      rng.shuffle(order);
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t len = std::min(batch, n - start);
        std::span<const std::size_t> rows(order.data() + start, len);
        grad_over(model, features, tv, weights, rows, grad_w, grad_b);
        for (std::size_t i = 0; i < model.weights.data.size(); ++i)
          model.weights.data[i] -= opts.learning_rate * grad_w.data[i];
        for (std::size_t c = 0; c < k; ++c)
          model.bias[c] -= opts.learning_rate * grad_b[c];
      }
    }
    check_finite(model, 0.0);
  }
  return model;
}

SimReport run_plada_sim(const SimConfig& cfg, double keep_ratio,
                        const SelectStrategy& strategy,
                        const codec::EncodeOptions& payload) {
  cfg.validate();
  const Generated g = generate(cfg);
  const auto k = static_cast<std::uint32_t>(cfg.target_classes);

  TrainOptions teacher_opts{cfg.learning_rate, cfg.epochs, cfg.batch_size,
                            Rng::derive(cfg.seed, 1), LossKind::HardCE,
                            cfg.dirichlet_resample, k};
  StudentTargets teacher_targets{g.target_train.labels, nullptr, nullptr, {}};
  const LinearModel teacher = train_softmax(g.target_train.features,
                                            teacher_targets, teacher_opts);

  SimReport report;
  report.seed = cfg.seed;
  report.keep_ratio = keep_ratio;
  report.teacher_acc = accuracy(teacher, g.target_test);

  const LogitMatrix ref_logits(g.reference.rows, k,
                               std::vector<double>(forward(teacher, g.reference).data));
  const ScoreVector scores = scoring::energy(ref_logits, cfg.temperature);
  const auto pseudo = labeling::hard_labels(ref_logits);

  SelectionResult sel;
  switch (strategy.method) {
    case SelectionMethod::TopFraction:
      sel = selection::select_top_fraction(scores, keep_ratio, strategy.direction);
      break;
    case SelectionMethod::Inverse:
      sel = selection::select_top_fraction(scores, keep_ratio,
                                           Direction::HighestFirst);
      break;
    case SelectionMethod::Consensus: {
      const ScoreVector ent = scoring::entropy(ref_logits, cfg.temperature);
      std::vector<RankVector> ranks;
      ranks.push_back(scoring::rank_normalize(scores));
      ranks.push_back(scoring::rank_normalize(ent));
      sel = selection::select_consensus(ranks, keep_ratio);
      break;
    }
    case SelectionMethod::SafetyNet:
      sel = selection::select_safety_net(scores, pseudo, keep_ratio,
                                         strategy.reserve_fraction,
                                         strategy.alpha, strategy.direction, k);
      break;
  }
  report.kept_rows = sel.kept.size();

  auto subset = [&](const SelectionResult& s) {
    Dataset out;
    out.features = Matrix(s.kept.size(), g.reference.cols);
    out.labels.resize(s.kept.size());
    for (std::size_t i = 0; i < s.kept.size(); ++i) {
      const auto row = static_cast<std::size_t>(s.kept[i]);
      auto src = g.reference.row(row);
      std::copy(src.begin(), src.end(), out.features.row(i).begin());
      out.labels[i] = pseudo[row];
    }
    return out;
  };

  auto train_student = [&](const Dataset& data, std::uint64_t stream) {
    TrainOptions opts{cfg.learning_rate, cfg.epochs, cfg.batch_size,
                      Rng::derive(cfg.seed, stream), cfg.loss,
                      cfg.dirichlet_resample, k};
    StudentTargets targets{data.labels, nullptr, nullptr, {}};

    Matrix prototypes, alphas;
    std::vector<double> weights;
    LogitMatrix subset_logits(data.features.rows, k,
                              std::vector<double>(forward(teacher, data.features).data));
    if (cfg.loss == LossKind::PrototypeKL) {
      prototypes = labeling::average_soft_labels(
          subset_logits, data.labels, cfg.temperature,
          labeling::EmptyClassPolicy::Uniform);
      targets.prototypes = &prototypes;
    } else if (cfg.loss == LossKind::DirichletKL) {
      alphas = labeling::dirichlet_mom(subset_logits, data.labels,
                                       cfg.temperature,
                                       labeling::EmptyClassPolicy::Uniform);
      targets.dirichlet_alphas = &alphas;
    } else if (cfg.loss == LossKind::WeightedCE) {
      ScoreVector subset_scores =
          scoring::energy(subset_logits, cfg.temperature);
      weights = labeling::importance_weights(subset_scores,
                                             cfg.weight_temperature);
      targets.weights = weights;
    }
    return train_softmax(data.features, targets, opts);
  };

  const Dataset kept_data = subset(sel);
  const LinearModel student = train_student(kept_data, 2);
  report.student_acc = accuracy(student, g.target_test);

  SelectionResult full;
  full.kept.resize(g.reference.rows);
  std::iota(full.kept.begin(), full.kept.end(), std::uint64_t{0});
  full.n_ref = g.reference.rows;
  full.keep_ratio = 1.0;
  const Dataset full_data = subset(full);
  const LinearModel baseline = train_student(full_data, 3);
  report.baseline_full_acc = accuracy(baseline, g.target_test);

  std::vector<std::uint32_t> kept_labels(kept_data.labels);
  report.payload_bytes = codec::encode(sel, kept_labels, k, payload).size();
  return report;
}

// ---------------------------------------------------------------------------
// Config file I/O
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, LossKind> kLossNames = {
    {"hard_ce", LossKind::HardCE},
    {"prototype_kl", LossKind::PrototypeKL},
    {"dirichlet_kl", LossKind::DirichletKL},
    {"weighted_ce", LossKind::WeightedCE},
};

std::string loss_name(LossKind loss) {
  for (const auto& [name, value] : kLossNames)
    if (value == loss) return name;
  return "hard_ce";
}

}  // namespace

SimConfig parse_sim_config(std::istream& is) {
  SimConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
      ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    auto as_u64 = [&] { return std::stoull(value); };
    auto as_f = [&] { return std::stod(value); };
    try {
      if (key == "feature_dim") cfg.feature_dim = as_u64();
      else if (key == "target_classes") cfg.target_classes = as_u64();
      else if (key == "train_per_class") cfg.train_per_class = as_u64();
      else if (key == "test_per_class") cfg.test_per_class = as_u64();
      else if (key == "reference_size") cfg.reference_size = as_u64();
      else if (key == "distractor_clusters") cfg.distractor_clusters = as_u64();
      else if (key == "distractor_fraction") cfg.distractor_fraction = as_f();
      else if (key == "cluster_separation") cfg.cluster_separation = as_f();
      else if (key == "noise_sigma") cfg.noise_sigma = as_f();
      else if (key == "seed") cfg.seed = as_u64();
      else if (key == "learning_rate") cfg.learning_rate = as_f();
      else if (key == "epochs") cfg.epochs = as_u64();
      else if (key == "batch_size") cfg.batch_size = as_u64();
      else if (key == "temperature") cfg.temperature = as_f();
      else if (key == "weight_temperature") cfg.weight_temperature = as_f();
      else if (key == "loss") {
        auto it = kLossNames.find(value);
        if (it == kLossNames.end())
          throw FormatError("config line " + std::to_string(line_no) +
                            ": unknown loss '" + value + "'");
        cfg.loss = it->second;
      } else if (key == "dirichlet_resample") {
        if (value == "per_epoch") cfg.dirichlet_resample = DirichletResample::PerEpoch;
        else if (value == "once") cfg.dirichlet_resample = DirichletResample::Once;
        else
          throw FormatError("config line " + std::to_string(line_no) +
                            ": unknown dirichlet_resample '" + value + "'");
      } else {
        throw FormatError("config line " + std::to_string(line_no) +
                          ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": cannot parse value '" + value + "'");
    } catch (const std::out_of_range&) {
      throw FormatError("config line " + std::to_string(line_no) +
                        ": value out of range '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void write_sim_config(std::ostream& os, const SimConfig& cfg) {
  os << "feature_dim=" << cfg.feature_dim << '\n'
     << "target_classes=" << cfg.target_classes << '\n'
     << "train_per_class=" << cfg.train_per_class << '\n'
     << "test_per_class=" << cfg.test_per_class << '\n'
     << "reference_size=" << cfg.reference_size << '\n'
     << "distractor_clusters=" << cfg.distractor_clusters << '\n'
     << "distractor_fraction=" << csv::g17(cfg.distractor_fraction) << '\n'
     << "cluster_separation=" << csv::g17(cfg.cluster_separation) << '\n'
     << "noise_sigma=" << csv::g17(cfg.noise_sigma) << '\n'
     << "seed=" << cfg.seed << '\n'
     << "learning_rate=" << csv::g17(cfg.learning_rate) << '\n'
     << "epochs=" << cfg.epochs << '\n'
     << "batch_size=" << cfg.batch_size << '\n'
     << "temperature=" << csv::g17(cfg.temperature) << '\n'
     << "weight_temperature=" << csv::g17(cfg.weight_temperature) << '\n'
     << "loss=" << loss_name(cfg.loss) << '\n'
     << "dirichlet_resample="
     << (cfg.dirichlet_resample == DirichletResample::PerEpoch ? "per_epoch"
                                                               : "once")
     << '\n';
}

// ---------------------------------------------------------------------------
// Duplicate detection
// ---------------------------------------------------------------------------

namespace {

struct Bucket {
  std::uint64_t mean_bin;
  std::uint64_t var_bin;
  bool operator==(const Bucket&) const = default;
};

Bucket bucket_of(std::span<const double> v, std::uint32_t bins) {
  double sum = 0.0, sq = 0.0;
  for (double x : v) {
    sum += x;
    sq += x * x;
  }
  const double mean = sum / static_cast<double>(v.size());
  const double var = sq / static_cast<double>(v.size()) - mean * mean;
  // Variance of [0,1] data lies in [0, 0.25], hence the x4 rescale.
  auto clampbin = [bins](double x) {
    const auto b = static_cast<std::int64_t>(std::floor(x));
    return static_cast<std::uint64_t>(
        std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1));
  };
  return Bucket{clampbin(mean * bins), clampbin(var * 4.0 * bins)};
}

double mean_l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

void check_coords(const Matrix& m, const char* name) {
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (!(m.data[i] >= 0.0 && m.data[i] <= 1.0))
      throw CoordinateOutOfRange(std::string(name) + ": coordinate at flat index " +
                                 std::to_string(i) + " outside [0,1]");
}

}  // namespace

std::vector<std::pair<std::uint64_t, std::uint64_t>> find_duplicates(
    const Matrix& set_a, const Matrix& set_b, std::uint32_t bins, double eps,
    Exec exec) {
  if (bins < 1) throw InvalidShape("bins must be >= 1");
  if (!(eps > 0.0)) throw InvalidShape("eps must be positive");
  if (set_a.cols != set_b.cols)
    throw ShapeMismatch("vector dimensions differ: " + std::to_string(set_a.cols) +
                        " vs " + std::to_string(set_b.cols));
  check_coords(set_a, "set A");
  check_coords(set_b, "set B");

  // Buckets of B, keyed by (mean_bin * bins + var_bin).
  std::vector<std::pair<std::uint64_t, std::uint64_t>> keyed(set_b.rows);
  for (std::size_t i = 0; i < set_b.rows; ++i) {
    const Bucket b = bucket_of(set_b.row(i), bins);
    keyed[i] = {b.mean_bin * bins + b.var_bin, i};
  }
  std::sort(keyed.begin(), keyed.end());

  auto bucket_range = [&](std::uint64_t key) {
    auto lo = std::lower_bound(keyed.begin(), keyed.end(),
                               std::make_pair(key, std::uint64_t{0}));
    auto hi = std::upper_bound(
        keyed.begin(), keyed.end(),
        std::make_pair(key, std::numeric_limits<std::uint64_t>::max()));
    return std::make_pair(lo, hi);
  };

  std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> found(
      set_a.rows);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(set_a.rows);
  auto probe = [&](std::ptrdiff_t i) {
    const auto row = static_cast<std::size_t>(i);
    const Bucket ba = bucket_of(set_a.row(row), bins);
    auto [lo, hi] = bucket_range(ba.mean_bin * bins + ba.var_bin);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t j = it->second;
      if (mean_l1(set_a.row(row), set_b.row(j)) < eps)
        found[row].emplace_back(row, j);
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) probe(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) probe(i);
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (auto& v : found) {
    std::sort(v.begin(), v.end());
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace plada::simbench
