// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Expected values come from the independent oracles or from
// pinned constants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "oracles.hpp"
#include "plada/codec.hpp"
#include "plada/huffman.hpp"
#include "plada/labeling.hpp"
#include "plada/rng.hpp"
#include "plada/scoring.hpp"
#include "plada/selection.hpp"
#include "plada/simbench.hpp"

using namespace plada;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double round3(double x) {
  if (x == 0.0) return 0.0;
  const double mag = std::pow(10.0, 2 - std::floor(std::log10(std::abs(x))));
  return std::round(x * mag) / mag;
}

std::vector<std::uint64_t> sample_distinct(Rng& rng, std::uint64_t n,
                                           std::uint64_t m) {
  std::unordered_set<std::uint64_t> seen;
  while (seen.size() < m) seen.insert(rng.below(n));
  std::vector<std::uint64_t> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

SelectionResult make_sel(std::vector<std::uint64_t> kept, std::uint64_t n_ref) {
  SelectionResult sel;
  sel.kept = std::move(kept);
  sel.n_ref = n_ref;
  return sel;
}

// --- criteria ---------------------------------------------------------------

// 1. Analytic payload arithmetic against the published numbers.
Check criterion_payload_arithmetic() {
  Check c;
  const auto r = codec::raw_size_bits(14.2e6, 0.05, 64);
  const double mib = 8.0 * 1024.0 * 1024.0;
  c.expect(round3(r.mask_bits / mib) == round3(1.6928),
           "mask MiB " + std::to_string(r.mask_bits / mib));
  c.expect(round3(r.total_bits_ideal / mib) == round3(2.2008),
           "total MiB " + std::to_string(r.total_bits_ideal / mib));
  return c;
}

// 2. 1000 seeded payloads across every encoding combination.
Check criterion_codec_round_trip() {
  Check c;
  Rng rng(9001);
  for (int it = 0; it < 1000 && c.ok; ++it) {
    const auto n_ref = static_cast<std::uint64_t>(
        std::pow(10.0, 6.0 * rng.uniform()));
    const std::uint64_t n = std::max<std::uint64_t>(1, n_ref);
    const std::uint64_t m = 1 + rng.below(std::min<std::uint64_t>(n, 20000));
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(364));
    const auto sel = make_sel(sample_distinct(rng, n, m), n);
    std::vector<std::uint32_t> labels(m);
    const int shape = it % 3;
    for (auto& l : labels) {
      if (shape == 0) {
        l = static_cast<std::uint32_t>(rng.below(k));
      } else if (shape == 1) {
        const double u = rng.uniform();
        l = std::min(static_cast<std::uint32_t>(k * u * u * u), k - 1);
      } else {
        l = static_cast<std::uint32_t>(rng.below(1 + std::min(k - 1, 3u)));
      }
    }
    for (auto mask : {codec::MaskEncoding::Bitmap, codec::MaskEncoding::DeltaIndex})
      for (auto le :
           {codec::LabelEncoding::FixedWidth, codec::LabelEncoding::Huffman})
        for (bool z : {false, true}) {
          const codec::EncodeOptions opts{mask, le, z};
          const auto bytes = codec::encode(sel, labels, k, opts);
          codec::Payload p;
          try {
            p = codec::decode(bytes);
          } catch (const std::exception& e) {
            c.expect(false, std::string("decode threw: ") + e.what());
            return c;
          }
          c.expect(p.n_ref == n && p.k == k && p.kept == sel.kept &&
                       p.labels == labels,
                   "field mismatch at payload " + std::to_string(it));
          const auto again = codec::encode(p.selection(), p.labels, p.k, opts);
          c.expect(again == bytes,
                   "re-encode not byte-identical at payload " + std::to_string(it));
          if (!c.ok) return c;
        }
  }
  return c;
}

// 3. Huffman bounds, dyadic exactness, exhaustive optimality.
Check criterion_huffman() {
  Check c;
  Rng rng(9002);
  for (int it = 0; it < 200; ++it) {
    const std::size_t k = 2 + rng.below(364);
    std::vector<std::uint64_t> freq(k, 0);
    std::uint64_t n = 0;
    for (auto& f : freq) {
      f = rng.below(1000);
      n += f;
    }
    if (n == 0) {
      freq[0] = n = 1;
    }
    const auto table = codec::HuffmanTable::from_frequencies(freq);
    const double h = oracles::entropy_bits(freq);
    const auto bits = static_cast<double>(table.encoded_bits(freq));
    c.expect(bits >= h * static_cast<double>(n) - 1e-6 &&
                 bits <= (h + 1.0) * static_cast<double>(n) + 1e-6,
             "entropy band violated at case " + std::to_string(it));
  }

  // 20 constructed dyadic vectors: split a power-of-two mass repeatedly.
  for (int it = 0; it < 20; ++it) {
    std::vector<std::uint64_t> freq{1ull << (3 + it % 6)};
    const int splits = 2 + static_cast<int>(rng.below(5));
    for (int s = 0; s < splits; ++s) {
      // Split the largest splittable entry.
      std::size_t best = freq.size();
      for (std::size_t i = 0; i < freq.size(); ++i)
        if (freq[i] > 1 && (best == freq.size() || freq[i] > freq[best]))
          best = i;
      if (best == freq.size()) break;
      const std::uint64_t half = freq[best] / 2;
      freq[best] = half;
      freq.push_back(half);
    }
    std::uint64_t n = 0;
    for (auto f : freq) n += f;
    const auto table = codec::HuffmanTable::from_frequencies(freq);
    const double expected = oracles::entropy_bits(freq) * static_cast<double>(n);
    c.expect(std::abs(static_cast<double>(table.encoded_bits(freq)) - expected) <
                 1e-6,
             "dyadic vector not coded at n*H");
  }

  // Exhaustive optimality for every frequency vector with k <= 5, n <= 12.
  std::vector<std::uint64_t> freq(5, 0);
  std::function<void(std::size_t, std::uint64_t)> walk =
      [&](std::size_t at, std::uint64_t used) {
        if (!c.ok) return;
        if (at == freq.size()) {
          std::uint64_t n = 0;
          for (auto f : freq) n += f;
          if (n == 0) return;
          const auto table = codec::HuffmanTable::from_frequencies(freq);
          c.expect(table.encoded_bits(freq) == oracles::optimal_prefix_cost(freq),
                   "suboptimal prefix code for an exhaustive instance");
          return;
        }
        for (std::uint64_t f = 0; used + f <= 12; ++f) {
          freq[at] = f;
          walk(at + 1, used + f);
        }
        freq[at] = 0;
      };
  walk(0, 0);
  return c;
}

// 4. DeltaIndex vs Bitmap crossover at n_ref = 1e6.
Check criterion_crossover() {
  Check c;
  Rng rng(9003);
  const std::uint64_t n_ref = 1000000;
  auto mask_sections = [&](double p) {
    const auto m = static_cast<std::uint64_t>(static_cast<double>(n_ref) * p);
    const auto sel = make_sel(sample_distinct(rng, n_ref, m), n_ref);
    std::vector<std::uint32_t> labels(m, 0);
    const auto grid = codec::analyze(sel, labels, 2);
    std::uint64_t bitmap = 0, delta = 0;
    for (const auto& row : grid.measured) {
      if (row.zstd) continue;
      if (row.mask == codec::MaskEncoding::Bitmap) bitmap = row.mask_section_bytes;
      if (row.mask == codec::MaskEncoding::DeltaIndex) delta = row.mask_section_bytes;
    }
    return std::make_pair(delta, bitmap);
  };
  const auto sparse = mask_sections(0.001);
  c.expect(sparse.first < sparse.second,
           "p=0.001: delta " + std::to_string(sparse.first) + " !< bitmap " +
               std::to_string(sparse.second));
  const auto dense = mask_sections(0.5);
  c.expect(dense.second < dense.first,
           "p=0.5: bitmap " + std::to_string(dense.second) + " !< delta " +
               std::to_string(dense.first));
  return c;
}

// 5. Scoring invariants over 1e4 seeded rows plus the exact fixtures.
Check criterion_scoring() {
  Check c;
  Rng rng(9004);
  for (int it = 0; it < 10000; ++it) {
    const std::size_t k = 2 + rng.below(19);
    const double T = (it % 3 == 0) ? 0.5 : (it % 3 == 1 ? 1.0 : 2.0);
    const double shift = 100.0 * (2.0 * rng.uniform() - 1.0);
    std::vector<double> row(k), shifted(k);
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = 40.0 * (2.0 * rng.uniform() - 1.0);
      shifted[j] = row[j] + shift;
    }
    const LogitMatrix a(1, k, std::vector<double>(row));
    const LogitMatrix b(1, k, std::vector<double>(shifted));
    const double e0 = scoring::energy(a, T).scores[0];
    const double e1 = scoring::energy(b, T).scores[0];
    c.expect(std::abs(e1 - (e0 - shift)) <= 1e-9, "energy shift equivariance");
    const double h0 = scoring::entropy(a, T).scores[0];
    const double h1 = scoring::entropy(b, T).scores[0];
    c.expect(std::abs(h1 - h0) <= 1e-9, "entropy shift invariance");
    if (!c.ok) break;
  }
  for (std::size_t k : {4, 10, 64}) {
    const LogitMatrix zeros(1, k, std::vector<double>(k, 0.0));
    c.expect(std::abs(scoring::energy(zeros).scores[0] +
                      std::log(static_cast<double>(k))) <= 1e-12,
             "zero-logit energy fixture k=" + std::to_string(k));
    c.expect(std::abs(scoring::entropy(zeros).scores[0] -
                      std::log(static_cast<double>(k))) <= 1e-12,
             "zero-logit entropy fixture k=" + std::to_string(k));
  }
  return c;
}

// 6. Selection laws: transform invariance, safety-net oracle, class floors.
Check criterion_selection() {
  Check c;
  Rng rng(9005);
  for (int it = 0; it < 1000 && c.ok; ++it) {
    const std::size_t n = 1 + rng.below(300);
    ScoreVector s;
    s.scores.resize(n);
    for (auto& v : s.scores) v = 4.0 * (2.0 * rng.uniform() - 1.0);
    ScoreVector t = s;
    for (auto& v : t.scores) v = std::exp(v) + 3.0 * v;
    const double p = std::min(1.0, 0.01 + rng.uniform());
    const auto dir = (it % 2) ? Direction::HighestFirst : Direction::LowestFirst;
    c.expect(selection::select_top_fraction(s, p, dir).kept ==
                 selection::select_top_fraction(t, p, dir).kept,
             "monotone transform changed the selection");
  }

  for (int it = 0; it < 200 && c.ok; ++it) {
    const std::size_t n = 1 + rng.below(500);
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(6));
    ScoreVector s;
    s.scores.resize(n);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.scores[i] = static_cast<double>(rng.below(64)) / 8.0;
      labels[i] = static_cast<std::uint32_t>(rng.below(k));
    }
    const double p = std::min(1.0, 0.01 + rng.uniform());
    const double reserve = rng.uniform();
    const double alpha = -0.5 + 1.5 * rng.uniform();
    const bool highest = (it % 4) == 0;
    const auto got = selection::select_safety_net(
        s, labels, p, reserve, alpha,
        highest ? Direction::HighestFirst : Direction::LowestFirst, k);
    c.expect(got.kept == oracles::two_phase_safety_net(s.scores, labels, k, p,
                                                       reserve, alpha, highest),
             "safety net disagrees with the two-phase oracle");

    // Floor rule whenever the reserve budget covers the non-empty classes.
    std::vector<std::uint64_t> avail(k, 0);
    for (auto l : labels) ++avail[l];
    std::size_t nonempty = 0;
    for (auto a : avail) nonempty += a > 0;
    const auto total = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * p)));
    const auto budget = static_cast<std::uint64_t>(
        std::floor(static_cast<double>(total) * reserve));
    if (budget >= nonempty) {
      std::vector<std::uint64_t> got_counts(k, 0);
      for (auto idx : got.kept) ++got_counts[labels[idx]];
      for (std::uint32_t cls = 0; cls < k; ++cls)
        if (avail[cls] > 0)
          c.expect(got_counts[cls] >= 1, "class floor violated");
    }
  }
  return c;
}

// 7. Labeling oracles.
Check criterion_labeling() {
  Check c;
  auto logit = [](double p) { return std::log(p); };
  const LogitMatrix m(2, 2, {logit(0.6), logit(0.4), logit(0.8), logit(0.2)});
  const std::vector<std::uint32_t> hard{0, 0};
  const auto alphas =
      labeling::dirichlet_mom(m, hard, 1.0, labeling::EmptyClassPolicy::Uniform);
  c.expect(std::abs(alphas.at(0, 0) - 14.0) <= 1e-9, "alpha[0] != 14");
  c.expect(std::abs(alphas.at(0, 1) - 6.0) <= 1e-9, "alpha[1] != 6");

  ScoreVector s;
  s.scores = {0.0, std::log(2.0)};
  const auto w = labeling::importance_weights(s, 1.0);
  c.expect(std::abs(w[0] - 4.0 / 3.0) <= 1e-12, "weight[0] != 4/3");
  c.expect(std::abs(w[1] - 2.0 / 3.0) <= 1e-12, "weight[1] != 2/3");

  Rng rng(9006);
  for (int it = 0; it < 100 && c.ok; ++it) {
    const std::size_t k = 2 + rng.below(7);
    const std::size_t n = k + rng.below(120);
    std::vector<double> flat(n * k);
    for (auto& v : flat) v = 3.0 * rng.normal();
    const LogitMatrix mm(n, k, std::move(flat));
    const auto labels = labeling::hard_labels(mm);
    const auto proto = labeling::average_soft_labels(
        mm, labels, 1.0, labeling::EmptyClassPolicy::Uniform);
    const auto conc = labeling::dirichlet_mom(mm, labels, 1.0,
                                              labeling::EmptyClassPolicy::Uniform);
    for (std::size_t cls = 0; cls < k; ++cls) {
      double psum = 0.0, asum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        psum += proto.at(cls, j);
        asum += conc.at(cls, j);
      }
      c.expect(std::abs(psum - 1.0) <= 1e-9, "prototype row does not normalize");
      double mean_sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        c.expect(conc.at(cls, j) > 0.0, "non-positive concentration");
        mean_sum += conc.at(cls, j) / asum;
      }
      c.expect(std::abs(mean_sum - 1.0) <= 1e-9, "dirichlet mean does not normalize");
    }
  }
  return c;
}

// 8. Gradient checks for CE, KL and weighted CE.
Check criterion_gradients() {
  Check c;
  Rng rng(9007);
  const std::size_t n = 20, d = 5, k = 3;
  Matrix x(n, d);
  for (auto& v : x.data) v = rng.normal();
  std::vector<std::uint32_t> hard(n);
  for (auto& l : hard) l = static_cast<std::uint32_t>(rng.below(k));
  Matrix soft(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      soft.at(i, j) = 0.05 + rng.uniform();
      sum += soft.at(i, j);
    }
    for (std::size_t j = 0; j < k; ++j) soft.at(i, j) /= sum;
  }
  std::vector<double> weights(n);
  double wsum = 0.0;
  for (auto& wv : weights) {
    wv = 0.2 + rng.uniform();
    wsum += wv;
  }
  for (auto& wv : weights) wv *= static_cast<double>(n) / wsum;

  std::vector<double> params(k * d + k);
  for (auto& p : params) p = 0.5 * rng.normal();
  auto model_at = [&](std::span<const double> theta) {
    simbench::LinearModel m;
    m.weights = Matrix(k, d, {theta.begin(), theta.begin() + k * d});
    m.bias.assign(theta.begin() + k * d, theta.end());
    return m;
  };

  struct Variant {
    const char* name;
    simbench::LossKind loss;
    bool soft;
    bool weighted;
  };
  for (const Variant v :
       {Variant{"CE", simbench::LossKind::HardCE, false, false},
        Variant{"KL", simbench::LossKind::PrototypeKL, true, false},
        Variant{"weighted CE", simbench::LossKind::WeightedCE, false, true}}) {
    auto eval = [&](std::span<const double> theta) {
      return simbench::loss_value(model_at(theta), x, hard,
                                  v.soft ? &soft : nullptr,
                                  v.weighted ? std::span<const double>(weights)
                                             : std::span<const double>{},
                                  v.loss);
    };
    const auto numeric = oracles::central_diff(eval, params, 1e-5);
    Matrix gw;
    std::vector<double> gb;
    simbench::loss_gradient(model_at(params), x, hard, v.soft ? &soft : nullptr,
                            v.weighted ? std::span<const double>(weights)
                                       : std::span<const double>{},
                            v.loss, gw, gb);
    std::vector<double> analytic(gw.data);
    analytic.insert(analytic.end(), gb.begin(), gb.end());
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      norm += numeric[i] * numeric[i];
    }
    c.expect(std::sqrt(diff) <= 1e-4 * std::max(1.0, std::sqrt(norm)),
             std::string("gradient mismatch for ") + v.name);
  }
  return c;
}

// 9. The denoising ordering with the shipped configuration, 5 seeds.
Check criterion_denoising() {
  Check c;
  double student_sum = 0.0, baseline_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    simbench::SimConfig cfg = simbench::default_denoising_config();
    cfg.seed = seed;
    const auto r = simbench::run_plada_sim(cfg, 0.1, simbench::SelectStrategy{});
    student_sum += r.student_acc;
    baseline_sum += r.baseline_full_acc;
  }
  const double student = student_sum / 5.0;
  const double baseline = baseline_sum / 5.0;
  c.expect(student >= baseline + 0.01,
           "mean student " + std::to_string(student) + " vs baseline " +
               std::to_string(baseline));
  c.detail = "student " + std::to_string(student) + " baseline " +
             std::to_string(baseline);
  return c;
}

// 10. Duplicate detection on planted duplicates.
Check criterion_dedup() {
  Check c;
  Rng rng(9008);
  const std::size_t na = 2000, nb = 1500, d = 32;
  Matrix a(na, d), b(nb, d);
  for (auto& v : a.data) v = rng.uniform();
  for (auto& v : b.data) v = rng.uniform();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> planted;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t ai = i * 19, bi = i * 14;
    std::copy(a.row(ai).begin(), a.row(ai).end(), b.row(bi).begin());
    planted.emplace_back(ai, bi);
  }
  std::sort(planted.begin(), planted.end());
  const auto pairs = simbench::find_duplicates(a, b, 1024, 1e-5);
  c.expect(pairs == planted,
           "expected " + std::to_string(planted.size()) + " pairs, got " +
               std::to_string(pairs.size()));
  return c;
}

// 11. End-to-end payload budget at n_ref = 1e5, p = 0.01, k = 10.
Check criterion_payload_budget() {
  Check c;
  simbench::SimConfig cfg;
  cfg.feature_dim = 16;
  cfg.target_classes = 10;
  cfg.train_per_class = 100;
  cfg.test_per_class = 100;
  cfg.reference_size = 100000;
  cfg.distractor_clusters = 10;
  cfg.distractor_fraction = 0.5;
  cfg.cluster_separation = 6.0;
  cfg.noise_sigma = 1.0;
  cfg.seed = 12;
  cfg.learning_rate = 0.05;
  cfg.epochs = 12;
  cfg.batch_size = 128;
  const codec::EncodeOptions payload{codec::MaskEncoding::DeltaIndex,
                                     codec::LabelEncoding::Huffman, true};
  const auto r = simbench::run_plada_sim(cfg, 0.01, simbench::SelectStrategy{},
                                         payload);
  c.expect(r.kept_rows == 1000, "kept " + std::to_string(r.kept_rows));
  c.expect(r.payload_bytes < 4096,
           "payload " + std::to_string(r.payload_bytes) + " B");
  c.detail = std::to_string(r.payload_bytes) + " B for " +
             std::to_string(r.kept_rows) + " labels over " +
             std::to_string(cfg.reference_size) + " rows";
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Check (*fn)();
  };
  const Criterion criteria[] = {
      {1, "analytic payload sizes match the published figures",
       criterion_payload_arithmetic},
      {2, "codec round-trip and canonical re-encode, 1000 seeded payloads",
       criterion_codec_round_trip},
      {3, "huffman entropy bounds, dyadic exactness, exhaustive optimality",
       criterion_huffman},
      {4, "delta/bitmap mask crossover at n_ref = 1e6", criterion_crossover},
      {5, "scoring shift laws and zero-logit fixtures", criterion_scoring},
      {6, "selection transform invariance, safety-net oracle, class floors",
       criterion_selection},
      {7, "labeling oracles and distribution normalization", criterion_labeling},
      {8, "analytic gradients vs central differences", criterion_gradients},
      {9, "filtering beats the no-filter baseline by >= 1 point",
       criterion_denoising},
      {10, "planted duplicate recall 1.0 with zero false positives",
       criterion_dedup},
      {11, "end-to-end payload below 4 KiB at p = 0.01", criterion_payload_budget},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const double t0 = now_s();
    Check result;
    try {
      result = criterion.fn();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = now_s() - t0;
    std::printf("%s [%2d] %s (%.2fs)%s%s\n", result.ok ? "PASS" : "FAIL",
                criterion.id, criterion.name, secs,
                result.detail.empty() ? "" : " -- ", result.detail.c_str());
    std::fflush(stdout);
    failures += result.ok ? 0 : 1;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
