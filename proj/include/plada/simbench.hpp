// Desk-scale end-to-end bench: synthetic teacher/reference/target data,
// softmax-regression training under every label/loss variant, and the
// bucketed duplicate check.
//
// Everything is a pure function of (inputs, seed). Training is
// single-threaded; parallelism belongs one level up, across independent
// seeds.
#pragma once

#include <iosfwd>
#include <span>
#include <utility>

#include "plada/codec.hpp"
#include "plada/types.hpp"

namespace plada::simbench {

enum class LossKind { HardCE, PrototypeKL, DirichletKL, WeightedCE };
enum class DirichletResample { PerEpoch, Once };

struct SimConfig {
  std::size_t feature_dim = 16;
  std::size_t target_classes = 5;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 200;
  std::size_t reference_size = 4000;
  std::size_t distractor_clusters = 5;
  double distractor_fraction = 0.8;   // in [0,1)
  double cluster_separation = 6.0;    // mean pairwise distance of target means
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;
  double learning_rate = 0.05;
  std::size_t epochs = 120;
  std::size_t batch_size = 64;        // 0 = full batch
  double temperature = 1.0;           // scoring/labeling temperature
  double weight_temperature = 1.0;    // importance weighting
  LossKind loss = LossKind::HardCE;
  DirichletResample dirichlet_resample = DirichletResample::PerEpoch;

  void validate() const;
};

// The configuration the denoising demonstration ships with.
SimConfig default_denoising_config();

// Flat key=value text, '#' comments. Unknown keys are errors.
SimConfig parse_sim_config(std::istream& is);
void write_sim_config(std::ostream& os, const SimConfig& cfg);

struct LinearModel {
  Matrix weights;               // k x d
  std::vector<double> bias;     // k
};

struct Dataset {
  Matrix features;              // n x d
  std::vector<std::uint32_t> labels;
};

struct Generated {
  Dataset target_train;
  Dataset target_test;
  Matrix reference;             // n_ref x d, unlabeled
};

// k Gaussian target clusters plus distractor clusters whose means sit at
// least 3 * cluster_separation from every target mean (drawn in the
// orthogonal complement of the target-mean span when the dimension allows).
Generated generate(const SimConfig& cfg);

struct TrainOptions {
  double learning_rate = 0.05;
  std::size_t epochs = 120;
  std::size_t batch_size = 64;  // 0 = full batch
  std::uint64_t seed = 1;
  LossKind loss = LossKind::HardCE;
  DirichletResample dirichlet_resample = DirichletResample::PerEpoch;
  std::uint32_t num_classes = 0;  // 0 = infer from the targets
};

// Targets for the loss variants. `hard` is always required; prototypes /
// alphas are k x k lookups by hard label; weights are per-sample (empty =
// unweighted).
struct StudentTargets {
  std::span<const std::uint32_t> hard;
  const Matrix* prototypes = nullptr;
  const Matrix* dirichlet_alphas = nullptr;
  std::span<const double> weights;
};

// Mini-batch (or full-batch) gradient descent from zero-initialized
// parameters. Deterministic given the seed. Throws NonFiniteLoss when the
// loss or the parameters stop being finite. `loss_trace`, when given,
// receives the full-data loss at the start of every epoch.
LinearModel train_softmax(const Matrix& features, const StudentTargets& targets,
                          const TrainOptions& opts,
                          std::vector<double>* loss_trace = nullptr);

// n x k logits for a batch of rows.
Matrix forward(const LinearModel& model, const Matrix& features);
double accuracy(const LinearModel& model, const Dataset& data);

// Loss and analytic gradient at the given parameters, for testing against
// finite differences. Soft targets, when present, are per-sample rows.
double loss_value(const LinearModel& model, const Matrix& features,
                  std::span<const std::uint32_t> hard, const Matrix* soft_rows,
                  std::span<const double> weights, LossKind loss);
void loss_gradient(const LinearModel& model, const Matrix& features,
                   std::span<const std::uint32_t> hard, const Matrix* soft_rows,
                   std::span<const double> weights, LossKind loss,
                   Matrix& grad_weights, std::vector<double>& grad_bias);

struct SelectStrategy {
  SelectionMethod method = SelectionMethod::TopFraction;
  Direction direction = Direction::LowestFirst;
  double alpha = -0.2;
  double reserve_fraction = 0.5;
};

struct SimReport {
  std::uint64_t seed = 0;
  double keep_ratio = 1.0;
  double teacher_acc = 0.0;
  double student_acc = 0.0;
  double baseline_full_acc = 0.0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t kept_rows = 0;
};

// Full pipeline: teacher fit, energy scoring, selection, pseudo-labeling,
// student fit, evaluation of both the student and the no-filter baseline,
// payload encoding.
SimReport run_plada_sim(const SimConfig& cfg, double keep_ratio,
                        const SelectStrategy& strategy,
                        const codec::EncodeOptions& payload =
                            codec::EncodeOptions{});

// Bucketed duplicate check over vectors in [0,1]^d. Vectors are hashed by
// (mean, variance) into bins x bins buckets; only same-bucket pairs are
// compared, and a pair is a duplicate when its mean L1 distance is below
// eps. Output is sorted by (a_index, b_index).
std::vector<std::pair<std::uint64_t, std::uint64_t>> find_duplicates(
    const Matrix& set_a, const Matrix& set_b, std::uint32_t bins, double eps,
    Exec exec = Exec::Parallel);

}  // namespace plada::simbench
