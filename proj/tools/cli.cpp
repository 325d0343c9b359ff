#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <numeric>

#include "plada/codec.hpp"
#include "plada/csv.hpp"
#include "plada/labeling.hpp"
#include "plada/logit_io.hpp"
#include "plada/scoring.hpp"
#include "plada/selection.hpp"
#include "plada/simbench.hpp"

namespace plada::cli {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(is)),
                std::istreambuf_iterator<char>());
  return {s.begin(), s.end()};
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path);
}

ScoreVector scores_from_csv(const std::string& path) {
  auto is = open_in(path);
  ScoreVector s;
  s.scores = csv::read_scores(is);
  return s;
}

// Kept-row view of a logit matrix.
LogitMatrix subset_logits(const LogitMatrix& m,
                          std::span<const std::uint64_t> kept) {
  std::vector<double> values;
  values.reserve(kept.size() * m.cols());
  for (std::uint64_t idx : kept) {
    if (idx >= m.rows())
      throw IndexOverflow("selection index " + std::to_string(idx) +
                          " >= matrix rows " + std::to_string(m.rows()));
    auto row = m.row(static_cast<std::size_t>(idx));
    values.insert(values.end(), row.begin(), row.end());
  }
  return LogitMatrix(kept.size(), m.cols(), std::move(values));
}

codec::EncodeOptions encode_options(const std::string& mask,
                                    const std::string& labels_enc,
                                    const std::string& zstd) {
  codec::EncodeOptions opts;
  opts.mask = mask == "bitmap" ? codec::MaskEncoding::Bitmap
                               : codec::MaskEncoding::DeltaIndex;
  opts.label = labels_enc == "fixed" ? codec::LabelEncoding::FixedWidth
                                     : codec::LabelEncoding::Huffman;
  opts.zstd = zstd == "on";
  return opts;
}

const char* strategy_name(const simbench::SelectStrategy& s) {
  switch (s.method) {
    case SelectionMethod::TopFraction: return "top";
    case SelectionMethod::Inverse: return "inverse";
    case SelectionMethod::Consensus: return "consensus";
    case SelectionMethod::SafetyNet: return "safetynet";
  }
  return "top";
}

// --- subcommand bodies -------------------------------------------------------

struct ScoreArgs {
  std::string logits, out;
  std::string metric = "energy";
  double temperature = 1.0;
};

int run_score(const ScoreArgs& a) {
  const LogitMatrix m = core::read_logits(a.logits);
  const ScoreVector s = a.metric == "entropy"
                            ? scoring::entropy(m, a.temperature)
                            : scoring::energy(m, a.temperature);
  auto os = open_out(a.out);
  csv::write_scores(os, s.scores);
  return 0;
}

struct SelectArgs {
  std::vector<std::string> scores;
  std::string labels, out;
  std::string strategy = "top";
  double keep = 0.1;
  double alpha = -0.2;
  double reserve = 0.5;
};

int run_select(const SelectArgs& a) {
  SelectionResult sel;
  if (a.strategy == "consensus") {
    std::vector<RankVector> ranks;
    for (const auto& path : a.scores)
      ranks.push_back(scoring::rank_normalize(scores_from_csv(path)));
    sel = selection::select_consensus(ranks, a.keep);
  } else {
    if (a.scores.size() != 1)
      throw FormatError("strategy '" + a.strategy + "' takes exactly one --scores file");
    const ScoreVector s = scores_from_csv(a.scores[0]);
    if (a.strategy == "top") {
      sel = selection::select_top_fraction(s, a.keep, Direction::LowestFirst);
    } else if (a.strategy == "inverse") {
      sel = selection::select_top_fraction(s, a.keep, Direction::HighestFirst);
    } else {  // safetynet
      if (a.labels.empty())
        throw FormatError("strategy 'safetynet' needs --labels");
      auto is = open_in(a.labels);
      auto labeled = csv::read_labels(is);
      std::vector<std::uint32_t> hard(labeled.size());
      for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (labeled[i].first != i)
          throw FormatError("safety-net labels must cover every row in order");
        hard[i] = labeled[i].second;
      }
      sel = selection::select_safety_net(s, hard, a.keep, a.reserve, a.alpha,
                                         Direction::LowestFirst);
    }
  }
  auto os = open_out(a.out);
  csv::write_indices(os, sel.kept);
  return 0;
}

struct LabelArgs {
  std::string logits, selection;
  std::string out_hard, out_prototypes, out_dirichlet, out_weights;
  std::string metric = "energy";
  std::string empty_class = "error";
  double temperature = 1.0;
  double weight_temperature = 1.0;
};

int run_label(const LabelArgs& a) {
  const LogitMatrix full = core::read_logits(a.logits);
  std::vector<std::uint64_t> kept;
  if (!a.selection.empty()) {
    auto is = open_in(a.selection);
    kept = csv::read_indices(is);
  } else {
    kept.resize(full.rows());
    std::iota(kept.begin(), kept.end(), std::uint64_t{0});
  }
  const LogitMatrix m = subset_logits(full, kept);
  const auto policy = a.empty_class == "uniform"
                          ? labeling::EmptyClassPolicy::Uniform
                          : labeling::EmptyClassPolicy::Error;

  const auto hard = labeling::hard_labels(m);
  {
    auto os = open_out(a.out_hard);
    csv::write_labels(os, kept, hard);
  }
  if (!a.out_prototypes.empty()) {
    auto os = open_out(a.out_prototypes);
    csv::write_matrix(os, labeling::average_soft_labels(m, hard, a.temperature,
                                                        policy));
  }
  if (!a.out_dirichlet.empty()) {
    auto os = open_out(a.out_dirichlet);
    csv::write_matrix(os, labeling::dirichlet_mom(m, hard, a.temperature, policy));
  }
  if (!a.out_weights.empty()) {
    const ScoreVector s = a.metric == "entropy"
                              ? scoring::entropy(m, a.temperature)
                              : scoring::energy(m, a.temperature);
    const auto w = labeling::importance_weights(s, a.weight_temperature);
    auto os = open_out(a.out_weights);
    csv::write_weights(os, kept, w);
  }
  return 0;
}

struct EncodeArgs {
  std::string selection, labels, out;
  std::uint64_t n_ref = 0;
  std::uint32_t k = 0;
  std::string mask = "delta";
  std::string labels_enc = "huffman";
  std::string zstd = "on";
};

int run_encode(const EncodeArgs& a) {
  auto sel_is = open_in(a.selection);
  SelectionResult sel;
  sel.kept = csv::read_indices(sel_is);
  sel.n_ref = a.n_ref;

  auto lab_is = open_in(a.labels);
  auto labeled = csv::read_labels(lab_is);
  if (labeled.size() != sel.kept.size())
    throw ShapeMismatch("labels file has " + std::to_string(labeled.size()) +
                        " rows, selection has " + std::to_string(sel.kept.size()));
  std::vector<std::uint32_t> labels(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labeled[i].first != sel.kept[i])
      throw ShapeMismatch("labels row " + std::to_string(i) +
                          " index does not match the selection");
    labels[i] = labeled[i].second;
  }
  const auto bytes =
      codec::encode(sel, labels, a.k, encode_options(a.mask, a.labels_enc, a.zstd));
  write_bytes(a.out, bytes);
  return 0;
}

struct DecodeArgs {
  std::string in, out_selection, out_labels;
};

int run_decode(const DecodeArgs& a) {
  const auto payload = codec::decode(read_bytes(a.in));
  {
    auto os = open_out(a.out_selection);
    csv::write_indices(os, payload.kept);
  }
  {
    auto os = open_out(a.out_labels);
    csv::write_labels(os, payload.kept, payload.labels);
  }
  std::cout << "n_ref=" << payload.n_ref << " k=" << payload.k
            << " m=" << payload.kept.size() << " mask="
            << (payload.mask_encoding == codec::MaskEncoding::Bitmap ? "bitmap"
                                                                     : "delta")
            << " labels="
            << (payload.label_encoding == codec::LabelEncoding::FixedWidth
                    ? "fixed"
                    : "huffman")
            << " zstd=" << (payload.zstd_wrapped ? "on" : "off") << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string selection, labels, out;
  std::uint64_t n_ref = 0;
  std::uint32_t k = 0;
};

int run_analyze(const AnalyzeArgs& a) {
  auto sel_is = open_in(a.selection);
  SelectionResult sel;
  sel.kept = csv::read_indices(sel_is);
  sel.n_ref = a.n_ref;
  auto lab_is = open_in(a.labels);
  auto labeled = csv::read_labels(lab_is);
  std::vector<std::uint32_t> labels(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) labels[i] = labeled[i].second;
  const auto grid = codec::analyze(sel, labels, a.k);
  auto os = open_out(a.out);
  codec::write_size_grid_csv(os, grid);
  return 0;
}

struct SimulateArgs {
  std::string config, out;
  std::string strategy = "top";
  std::string seed;   // single seed, overrides the config value
  std::string seeds;  // "A..B" range, overrides --seed
  double keep = 0.1;
  double alpha = -0.2;
  double reserve = 0.5;
};

int run_simulate(const SimulateArgs& a) {
  auto is = open_in(a.config);
  const simbench::SimConfig base = simbench::parse_sim_config(is);

  simbench::SelectStrategy strategy;
  if (a.strategy == "top") {
    strategy.method = SelectionMethod::TopFraction;
  } else if (a.strategy == "inverse") {
    strategy.method = SelectionMethod::Inverse;
    strategy.direction = Direction::HighestFirst;
  } else if (a.strategy == "consensus") {
    strategy.method = SelectionMethod::Consensus;
  } else if (a.strategy == "safetynet") {
    strategy.method = SelectionMethod::SafetyNet;
  } else {
    throw FormatError("unknown strategy '" + a.strategy + "'");
  }
  strategy.alpha = a.alpha;
  strategy.reserve_fraction = a.reserve;

  std::uint64_t seed_lo = base.seed, seed_hi = base.seed;
  if (!a.seed.empty()) seed_lo = seed_hi = std::stoull(a.seed);
  if (!a.seeds.empty()) {
    const auto dots = a.seeds.find("..");
    if (dots == std::string::npos) {
      seed_lo = seed_hi = std::stoull(a.seeds);
    } else {
      seed_lo = std::stoull(a.seeds.substr(0, dots));
      seed_hi = std::stoull(a.seeds.substr(dots + 2));
    }
    if (seed_hi < seed_lo)
      throw FormatError("seed range must be ascending: " + a.seeds);
  }

  const std::size_t runs = seed_hi - seed_lo + 1;
  std::vector<simbench::SimReport> reports(runs);
  std::vector<std::string> failures(runs);
  // Whole runs are independent; this is the sanctioned parallel harness.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(runs); ++i) {
    simbench::SimConfig cfg = base;
    cfg.seed = seed_lo + static_cast<std::uint64_t>(i);
    try {
      reports[i] = simbench::run_plada_sim(cfg, a.keep, strategy);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw Error("simulation failed: " + f);

  auto os = open_out(a.out);
  os << "seed,strategy,p,teacher_acc,student_acc,baseline_acc,payload_bytes\n";
  for (const auto& r : reports) {
    os << r.seed << ',' << strategy_name(strategy) << ',' << csv::g17(r.keep_ratio)
       << ',' << csv::g17(r.teacher_acc) << ',' << csv::g17(r.student_acc) << ','
       << csv::g17(r.baseline_full_acc) << ',' << r.payload_bytes << '\n';
    std::cerr << "seed " << r.seed << ": teacher " << r.teacher_acc
              << ", student " << r.student_acc << " (kept " << r.kept_rows
              << "), baseline " << r.baseline_full_acc << ", payload "
              << r.payload_bytes << " B\n";
  }
  return 0;
}

struct DedupArgs {
  std::string set_a, set_b, out;
  std::uint32_t bins = 1024;
  double eps = 1e-5;
};

int run_dedup(const DedupArgs& a) {
  auto a_is = open_in(a.set_a);
  auto b_is = open_in(a.set_b);
  const Matrix va = csv::read_matrix(a_is);
  const Matrix vb = csv::read_matrix(b_is);
  const auto pairs = simbench::find_duplicates(va, vb, a.bins, a.eps);
  auto os = open_out(a.out);
  csv::write_pairs(os, pairs);
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"pseudo-label payload toolkit"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "logits -> scores CSV");
  score_cmd->add_option("--logits", score.logits)->required();
  score_cmd->add_option("--out", score.out)->required();
  score_cmd->add_option("--metric", score.metric)
      ->check(CLI::IsMember({"energy", "entropy"}));
  score_cmd->add_option("--temperature", score.temperature);

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "scores [+labels] -> index CSV");
  select_cmd->add_option("--scores", select.scores)->required();
  select_cmd->add_option("--labels", select.labels);
  select_cmd->add_option("--out", select.out)->required();
  select_cmd->add_option("--strategy", select.strategy)
      ->check(CLI::IsMember({"top", "inverse", "consensus", "safetynet"}));
  select_cmd->add_option("--keep", select.keep);
  select_cmd->add_option("--alpha", select.alpha);
  select_cmd->add_option("--reserve", select.reserve);

  LabelArgs label;
  auto* label_cmd =
      app.add_subcommand("label", "logits [+selection] -> label artifacts");
  label_cmd->add_option("--logits", label.logits)->required();
  label_cmd->add_option("--selection", label.selection);
  label_cmd->add_option("--out-hard", label.out_hard)->required();
  label_cmd->add_option("--out-prototypes", label.out_prototypes);
  label_cmd->add_option("--out-dirichlet", label.out_dirichlet);
  label_cmd->add_option("--out-weights", label.out_weights);
  label_cmd->add_option("--metric", label.metric)
      ->check(CLI::IsMember({"energy", "entropy"}));
  label_cmd->add_option("--temperature", label.temperature);
  label_cmd->add_option("--weight-temperature", label.weight_temperature);
  label_cmd->add_option("--empty-class", label.empty_class)
      ->check(CLI::IsMember({"error", "uniform"}));

  EncodeArgs encode;
  auto* encode_cmd =
      app.add_subcommand("encode", "selection+labels -> PLP1 container");
  encode_cmd->add_option("--selection", encode.selection)->required();
  encode_cmd->add_option("--labels", encode.labels)->required();
  encode_cmd->add_option("--n-ref", encode.n_ref)->required();
  encode_cmd->add_option("--k", encode.k)->required();
  encode_cmd->add_option("--mask", encode.mask)
      ->check(CLI::IsMember({"bitmap", "delta"}));
  encode_cmd->add_option("--labels-enc", encode.labels_enc)
      ->check(CLI::IsMember({"fixed", "huffman"}));
  encode_cmd->add_option("--zstd", encode.zstd)->check(CLI::IsMember({"on", "off"}));
  encode_cmd->add_option("--out", encode.out)->required();

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "PLP1 container -> CSVs");
  decode_cmd->add_option("--in", decode.in)->required();
  decode_cmd->add_option("--out-selection", decode.out_selection)->required();
  decode_cmd->add_option("--out-labels", decode.out_labels)->required();

  AnalyzeArgs analyze;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "selection+labels -> size grid CSV");
  analyze_cmd->add_option("--selection", analyze.selection)->required();
  analyze_cmd->add_option("--labels", analyze.labels)->required();
  analyze_cmd->add_option("--n-ref", analyze.n_ref)->required();
  analyze_cmd->add_option("--k", analyze.k)->required();
  analyze_cmd->add_option("--out", analyze.out)->required();

  SimulateArgs simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "config -> report CSV");
  simulate_cmd->add_option("--config", simulate.config)->required();
  simulate_cmd->add_option("--out", simulate.out)->required();
  simulate_cmd->add_option("--strategy", simulate.strategy)
      ->check(CLI::IsMember({"top", "inverse", "consensus", "safetynet"}));
  simulate_cmd->add_option("--keep", simulate.keep);
  simulate_cmd->add_option("--alpha", simulate.alpha);
  simulate_cmd->add_option("--reserve", simulate.reserve);
  simulate_cmd->add_option("--seed", simulate.seed);
  simulate_cmd->add_option("--seeds", simulate.seeds);

  DedupArgs dedup;
  auto* dedup_cmd = app.add_subcommand("dedup", "two vector files -> pair list");
  dedup_cmd->add_option("--set-a", dedup.set_a)->required();
  dedup_cmd->add_option("--set-b", dedup.set_b)->required();
  dedup_cmd->add_option("--bins", dedup.bins);
  dedup_cmd->add_option("--eps", dedup.eps);
  dedup_cmd->add_option("--out", dedup.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (*score_cmd) return run_score(score);
    if (*select_cmd) return run_select(select);
    if (*label_cmd) return run_label(label);
    if (*encode_cmd) return run_encode(encode);
    if (*decode_cmd) return run_decode(decode);
    if (*analyze_cmd) return run_analyze(analyze);
    if (*simulate_cmd) return run_simulate(simulate);
    if (*dedup_cmd) return run_dedup(dedup);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace plada::cli
