#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grnn/core.hpp"
#include "grnn/detail/random.hpp"
#include "grnn/extraction.hpp"
#include "grnn/stats.hpp"

namespace grnn {

/// One edge's weight under each of K conditions (same condition order for every edge).
struct ConditionWeightVector {
  GeneId source;
  GeneId target;
  std::vector<double> weights_by_condition;
};

/// Euclidean distance from v to the line spanned by (1, ..., 1):
/// d = || v - (v . u) u || with u = (1, ..., 1) / sqrt(K).
inline double distance_to_identity_line(std::span<const double> v) {
  if (v.size() < 2) throw ValidationError("need at least two conditions");
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError("weight vector has a non-finite entry");
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(v.size()));
  double dot = 0.0;
  for (double x : v) dot += x * inv_sqrt_k;
  double sq = 0.0;
  for (double x : v) {
    const double r = x - dot * inv_sqrt_k;
    sq += r * r;
  }
  return std::sqrt(sq);
}

/// Share of resampled weight vectors lying farther than epsilon from the line.
inline double plasticity_probability(std::span<const std::vector<double>> resamples, double epsilon) {
  if (resamples.size() < 20) throw ValidationError("need at least 20 resamples, got " + std::to_string(resamples.size()));
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  std::size_t above = 0;
  for (const auto& v : resamples)
    if (distance_to_identity_line(v) > epsilon) ++above;
  return static_cast<double>(above) / static_cast<double>(resamples.size());
}

struct BetaParams {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Method of moments: c = m(1-m)/v - 1, alpha = m c, beta = (1-m) c.
inline BetaParams fit_beta_moments(double m, double v) {
  if (!(m > 0.0 && m < 1.0)) throw ValidationError("beta mean must lie in (0, 1)");
  // Rounding leaves a tiny positive variance on constant samples.
  if (!(v > 1e-12 * m * (1.0 - m)) || v >= m * (1.0 - m)) throw ValidationError("degenerate variance for a beta fit");
  const double c = m * (1.0 - m) / v - 1.0;
  return {m * c, (1.0 - m) * c};
}

/// Samples are clamped into [1e-6, 1 - 1e-6]; moments are population moments.
inline BetaParams fit_beta(std::span<const double> samples) {
  if (samples.size() < 10) throw ValidationError("need at least 10 samples for a beta fit");
  std::vector<double> clamped;
  clamped.reserve(samples.size());
  for (double s : samples) {
    if (!std::isfinite(s)) throw ValidationError("non-finite beta sample");
    clamped.push_back(std::clamp(s, 1e-6, 1.0 - 1e-6));
  }
  return fit_beta_moments(stats::mean(clamped), stats::variance(clamped));
}

struct AlteredRow {
  std::string grouping;  // "All Conditions" or a condition label
  std::size_t count = 0;
  double ratio_percent = 0.0;
};

/// Table of altered weights. "All Conditions" counts edges whose distance
/// to the identity line exceeds the threshold; each condition row counts
/// edges whose weight there deviates from the edge's cross-condition mean by
/// more than the threshold.
inline std::vector<AlteredRow> altered_weight_frequency(std::span<const ConditionWeightVector> edges,
                                                        std::span<const std::string> conditions, double threshold) {
  if (edges.empty()) throw ValidationError("edge set is empty");
  const std::size_t k = conditions.size();
  for (const auto& e : edges)
    if (e.weights_by_condition.size() != k)
      throw ValidationError("edge " + e.source.str() + " -> " + e.target.str() + " has " +
                            std::to_string(e.weights_by_condition.size()) + " weights for " + std::to_string(k) +
                            " conditions");
  std::vector<AlteredRow> rows(k + 1);
  rows[0].grouping = "All Conditions";
  for (std::size_t c = 0; c < k; ++c) rows[c + 1].grouping = conditions[c];
  for (const auto& e : edges) {
    const auto& w = e.weights_by_condition;
    if (distance_to_identity_line(w) > threshold) ++rows[0].count;
    const double m = stats::mean(w);
    for (std::size_t c = 0; c < k; ++c)
      if (std::abs(w[c] - m) > threshold) ++rows[c + 1].count;
  }
  for (auto& r : rows) r.ratio_percent = 100.0 * static_cast<double>(r.count) / static_cast<double>(edges.size());
  return rows;
}

// ---------------------------------------------------------------------------
// Condition-wise extraction pipeline
// ---------------------------------------------------------------------------

namespace detail {

/// Dataset made of the given (condition, replicate) tracks, relabeled to
/// `condition` with replicates 1..n so duplicated tracks stay distinct.
inline ExpressionDataset assemble_tracks(const ExpressionDataset& data,
                                         const std::vector<std::vector<std::size_t>>& tracks,
                                         const std::string& condition) {
  std::vector<std::size_t> cols;
  std::vector<SampleMeta> samples;
  for (std::size_t r = 0; r < tracks.size(); ++r)
    for (auto c : tracks[r]) {
      cols.push_back(c);
      SampleMeta meta = data.samples()[c];
      meta.condition = condition;
      meta.replicate = static_cast<int>(r + 1);
      samples.push_back(std::move(meta));
    }
  std::vector<double> values;
  values.reserve(data.gene_count() * cols.size());
  for (std::size_t g = 0; g < data.gene_count(); ++g)
    for (auto c : cols) values.push_back(data.value(g, c));
  return ExpressionDataset(data.genes(), std::move(samples), std::move(values));
}

inline std::vector<std::vector<std::size_t>> condition_tracks(const ExpressionDataset& data, const std::string& cond) {
  std::vector<std::vector<std::size_t>> out;
  for (auto& [key, idx] : data.tracks())
    if (key.first == cond) out.push_back(idx);
  if (out.empty()) throw ValidationError("unknown condition '" + cond + "'");
  return out;
}

/// Weight vectors over edges fitted in every per-condition model.
inline std::vector<ConditionWeightVector> stack_models(const std::vector<GrnnModel>& models) {
  std::vector<ConditionWeightVector> out;
  if (models.empty()) return out;
  for (const auto& e : models.front().edges()) {
    ConditionWeightVector v{e.source, e.target, {}};
    for (const auto& m : models) {
      auto w = m.weight(e.source, e.target);
      if (!w) break;
      v.weights_by_condition.push_back(*w);
    }
    if (v.weights_by_condition.size() == models.size()) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

/// Extracts one model per condition and stacks the weights edge by edge.
inline std::vector<ConditionWeightVector> condition_weight_vectors(const Grn& grn, const ExpressionDataset& data,
                                                                   std::span<const std::string> conditions,
                                                                   const TrainSpec& spec,
                                                                   const ExtractOptions& opts = {}) {
  if (conditions.size() < 2) throw ValidationError("need at least two conditions");
  std::vector<GrnnModel> models;
  for (const auto& c : conditions)
    models.push_back(
        extract_grnn(grn, detail::assemble_tracks(data, detail::condition_tracks(data, c), c), spec, opts).model);
  return detail::stack_models(models);
}

/// Bootstrap over replicates: each resample draws every condition's
/// replicate tracks with replacement and re-extracts. Result is indexed
/// [resample][edge].
inline std::vector<std::vector<ConditionWeightVector>> bootstrap_condition_weights(
    const Grn& grn, const ExpressionDataset& data, std::span<const std::string> conditions, std::size_t resamples,
    const TrainSpec& spec, std::uint64_t seed, const ExtractOptions& opts = {}) {
  if (conditions.size() < 2) throw ValidationError("need at least two conditions");
  std::vector<std::vector<std::vector<std::size_t>>> tracks;
  for (const auto& c : conditions) tracks.push_back(detail::condition_tracks(data, c));
  std::vector<std::vector<ConditionWeightVector>> out;
  for (std::size_t b = 0; b < resamples; ++b) {
    detail::Rng rng(detail::derive_seed(seed, b));
    std::vector<GrnnModel> models;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      std::vector<std::vector<std::size_t>> drawn;
      for (std::size_t r = 0; r < tracks[c].size(); ++r) drawn.push_back(tracks[c][rng.below(tracks[c].size())]);
      models.push_back(extract_grnn(grn, detail::assemble_tracks(data, drawn, conditions[c]), spec, opts).model);
    }
    out.push_back(detail::stack_models(models));
  }
  return out;
}

/// Null distances from condition-label permutations: replicate tracks of all
/// listed conditions are pooled and reassigned at random (group sizes kept),
/// then re-extracted. Returns every per-edge distance from every permutation.
inline std::vector<double> permutation_null_distances(const Grn& grn, const ExpressionDataset& data,
                                                      std::span<const std::string> conditions,
                                                      std::size_t permutations, const TrainSpec& spec,
                                                      std::uint64_t seed, const ExtractOptions& opts = {}) {
  if (conditions.size() < 2) throw ValidationError("need at least two conditions");
  std::vector<std::vector<std::size_t>> pool;
  std::vector<std::size_t> group_size;
  for (const auto& c : conditions) {
    auto t = detail::condition_tracks(data, c);
    group_size.push_back(t.size());
    pool.insert(pool.end(), t.begin(), t.end());
  }
  std::vector<double> out;
  for (std::size_t p = 0; p < permutations; ++p) {
    detail::Rng rng(detail::derive_seed(seed, p));
    auto shuffled = pool;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    std::vector<GrnnModel> models;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      std::vector<std::vector<std::size_t>> group(shuffled.begin() + static_cast<std::ptrdiff_t>(offset),
                                                  shuffled.begin() + static_cast<std::ptrdiff_t>(offset + group_size[c]));
      offset += group_size[c];
      models.push_back(extract_grnn(grn, detail::assemble_tracks(data, group, conditions[c]), spec, opts).model);
    }
    for (const auto& v : detail::stack_models(models)) out.push_back(distance_to_identity_line(v.weights_by_condition));
  }
  return out;
}

struct EdgePlasticity {
  GeneId source;
  GeneId target;
  double distance = 0.0;
  double probability = 0.0;
};

struct PlasticityReport {
  std::vector<std::string> conditions;
  std::vector<EdgePlasticity> edges;
  std::optional<BetaParams> beta;  // unset when the probabilities are degenerate
  std::string beta_note;
  double threshold = 0.0;
  std::vector<AlteredRow> altered;
};

struct PlasticityOptions {
  std::size_t resamples = 100;
  double epsilon = 0.05;
  std::optional<double> threshold;  // default: null quantile below
  std::size_t permutations = 20;
  double null_quantile = 0.9;
  std::uint64_t seed = 0;
};

/// Input-dependent plasticity end to end: per-edge distances on the full
/// data, bootstrap plasticity probabilities, their Beta fit and the
/// altered-weight table.
inline PlasticityReport input_plasticity(const Grn& grn, const ExpressionDataset& data,
                                         std::span<const std::string> conditions, const TrainSpec& spec,
                                         const PlasticityOptions& popts, const ExtractOptions& opts = {}) {
  PlasticityReport rep;
  rep.conditions.assign(conditions.begin(), conditions.end());
  const auto base = condition_weight_vectors(grn, data, conditions, spec, opts);
  const auto boot = bootstrap_condition_weights(grn, data, conditions, popts.resamples, spec,
                                                detail::derive_seed(popts.seed, std::string_view("bootstrap")), opts);

  std::map<std::pair<GeneId, GeneId>, std::vector<std::vector<double>>> by_edge;
  for (const auto& sample : boot)
    for (const auto& v : sample) by_edge[{v.source, v.target}].push_back(v.weights_by_condition);

  std::vector<double> probabilities;
  for (const auto& v : base) {
    EdgePlasticity e{v.source, v.target, distance_to_identity_line(v.weights_by_condition), 0.0};
    auto it = by_edge.find({v.source, v.target});
    if (it == by_edge.end() || it->second.size() < 20) continue;
    e.probability = plasticity_probability(it->second, popts.epsilon);
    probabilities.push_back(e.probability);
    rep.edges.push_back(std::move(e));
  }
  try {
    rep.beta = fit_beta(probabilities);
  } catch (const ValidationError& e) {
    rep.beta_note = e.what();
  }

  if (popts.threshold) {
    rep.threshold = *popts.threshold;
  } else {
    const auto null = permutation_null_distances(grn, data, conditions, popts.permutations, spec,
                                                 detail::derive_seed(popts.seed, std::string_view("null")), opts);
    if (null.empty()) throw ValidationError("permutation null produced no distances");
    rep.threshold = stats::quantile(null, popts.null_quantile);
  }
  if (!base.empty()) rep.altered = altered_weight_frequency(base, conditions, rep.threshold);
  return rep;
}

// ---------------------------------------------------------------------------
// Temporal plasticity
// ---------------------------------------------------------------------------

struct DeviationPoint {
  std::string label;
  double deviation = 0.0;
};

struct TemporalSeries {
  std::vector<DeviationPoint> points;
  std::size_t common_edges = 0;
  std::size_t dropped_edges = 0;  // present in some configs only
};

/// deviation_t = 1 - pearson(weights(W_0), weights(W_t)) over the edges
/// common to every config; the first point is 0 by definition.
inline TemporalSeries temporal_correlation_series(std::span<const WeightConfig> configs) {
  if (configs.size() < 2) throw ValidationError("need at least two weight configs");
  std::set<std::pair<GeneId, GeneId>> all, common;
  for (const auto& e : configs.front().model.edges()) common.insert({e.source, e.target});
  for (const auto& c : configs) {
    std::set<std::pair<GeneId, GeneId>> here;
    for (const auto& e : c.model.edges()) {
      here.insert({e.source, e.target});
      all.insert({e.source, e.target});
    }
    std::erase_if(common, [&](const auto& k) { return !here.count(k); });
  }
  if (common.size() < 3)
    throw ValidationError("only " + std::to_string(common.size()) + " common edges; correlation needs 3");

  auto weights = [&](const WeightConfig& c) {
    std::vector<double> w;
    for (const auto& [s, t] : common) w.push_back(*c.model.weight(s, t));
    return w;
  };
  TemporalSeries out;
  out.common_edges = common.size();
  out.dropped_edges = all.size() - common.size();
  const auto ref = weights(configs.front());
  out.points.push_back({configs.front().label, 0.0});
  for (std::size_t i = 1; i < configs.size(); ++i) {
    auto r = stats::pearson(ref, weights(configs[i]));
    if (!r) throw ValidationError("correlation undefined for " + configs[i].label + " (constant weights)");
    out.points.push_back({configs[i].label, 1.0 - *r});
  }
  return out;
}

struct SampleRange {
  std::size_t begin = 0;  // inclusive sample index
  std::size_t end = 0;    // exclusive
  std::size_t size() const { return end - begin; }
};

struct WindowCorrelation {
  std::vector<std::optional<double>> per_gene;  // canonical gene order; unset when undefined
  std::size_t defined = 0;
  double fraction_negative = 0.0;
  double fraction_positive = 0.0;
};

/// Per-gene Pearson correlation between two equal-length sample windows,
/// position by position. Genes constant in either window are undefined and
/// left out of the fractions.
inline WindowCorrelation expression_window_correlation(const ExpressionDataset& data, SampleRange a, SampleRange b) {
  if (a.end < a.begin || b.end < b.begin || a.end > data.sample_count() || b.end > data.sample_count())
    throw ValidationError("window outside the sample range");
  if (a.size() != b.size()) throw ValidationError("windows must have equal length");
  if (a.size() < 2) throw ValidationError("windows need at least two samples");
  WindowCorrelation out;
  std::size_t neg = 0, pos = 0;
  for (std::size_t g = 0; g < data.gene_count(); ++g) {
    const auto row = data.row(g);
    auto r = stats::pearson(row.subspan(a.begin, a.size()), row.subspan(b.begin, b.size()));
    out.per_gene.push_back(r);
    if (!r) continue;
    ++out.defined;
    if (*r < 0.0) ++neg;
    if (*r > 0.0) ++pos;
  }
  if (out.defined) {
    out.fraction_negative = static_cast<double>(neg) / static_cast<double>(out.defined);
    out.fraction_positive = static_cast<double>(pos) / static_cast<double>(out.defined);
  }
  return out;
}

}  // namespace grnn
