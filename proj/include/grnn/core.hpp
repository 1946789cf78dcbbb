#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grnn/error.hpp"

namespace grnn {

// ---------------------------------------------------------------------------
// Gene identifiers
// ---------------------------------------------------------------------------

/// Case-sensitive, non-empty, whitespace-free gene token such as "b3067".
/// Ordering is lexicographic; every container in the library iterates genes
/// in this canonical order.
class GeneId {
public:
  explicit GeneId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw ValidationError("gene id must be non-empty");
    if (id_.find_first_of(" \t\r\n\v\f") != std::string::npos)
      throw ValidationError("gene id '" + id_ + "' contains whitespace");
  }
  explicit GeneId(std::string_view id) : GeneId(std::string(id)) {}
  explicit GeneId(const char* id) : GeneId(std::string(id)) {}

  const std::string& str() const noexcept { return id_; }

  friend auto operator<=>(const GeneId&, const GeneId&) = default;
  friend bool operator==(const GeneId&, const GeneId&) = default;

private:
  std::string id_;
};

struct GeneIdHash {
  std::size_t operator()(const GeneId& g) const noexcept { return std::hash<std::string>{}(g.str()); }
};

// ---------------------------------------------------------------------------
// Regulatory graph
// ---------------------------------------------------------------------------

struct Edge {
  GeneId source;
  GeneId target;
  std::optional<int> sign;  // -1 repression, +1 activation, unset when unknown

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed regulatory graph over a canonical (sorted) gene list. Immutable
/// once built; adjacency is index-based for the graph algorithms.
class Grn {
public:
  Grn() = default;

  /// Every edge endpoint must appear in `genes`. Duplicate genes or
  /// duplicate (source, target) pairs are rejected.
  Grn(std::vector<GeneId> genes, std::vector<Edge> edges) {
    std::sort(genes.begin(), genes.end());
    if (auto dup = std::adjacent_find(genes.begin(), genes.end()); dup != genes.end())
      throw ValidationError("duplicate gene '" + dup->str() + "'");
    genes_ = std::move(genes);
    index_.reserve(genes_.size());
    for (std::size_t i = 0; i < genes_.size(); ++i) index_.emplace(genes_[i], i);

    for (const auto& e : edges) {
      if (!index_of(e.source)) throw ValidationError("edge source '" + e.source.str() + "' is not a gene");
      if (!index_of(e.target)) throw ValidationError("edge target '" + e.target.str() + "' is not a gene");
      if (e.sign && *e.sign != -1 && *e.sign != 1)
        throw ValidationError("edge sign must be -1 or +1");
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (edges[i].source == edges[i - 1].source && edges[i].target == edges[i - 1].target)
        throw ValidationError("duplicate edge " + edges[i].source.str() + " -> " + edges[i].target.str());
    edges_ = std::move(edges);

    succ_.assign(genes_.size(), {});
    pred_.assign(genes_.size(), {});
    for (const auto& e : edges_) {
      const auto s = index_.at(e.source), t = index_.at(e.target);
      succ_[s].push_back(t);
      pred_[t].push_back(s);
    }
    for (auto& p : pred_) std::sort(p.begin(), p.end());
  }

  /// Gene set is the union of edge endpoints and `extra_genes`.
  static Grn from_edges(std::vector<Edge> edges, std::vector<GeneId> extra_genes = {}) {
    std::vector<GeneId> genes = std::move(extra_genes);
    for (const auto& e : edges) {
      genes.push_back(e.source);
      genes.push_back(e.target);
    }
    std::sort(genes.begin(), genes.end());
    genes.erase(std::unique(genes.begin(), genes.end()), genes.end());
    return Grn(std::move(genes), std::move(edges));
  }

  std::size_t size() const noexcept { return genes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<GeneId>& genes() const noexcept { return genes_; }
  const GeneId& gene(std::size_t i) const { return genes_.at(i); }

  /// Sorted by (source, target).
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::optional<std::size_t> index_of(const GeneId& g) const {
    auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require_index(const GeneId& g) const {
    if (auto i = index_of(g)) return *i;
    throw ValidationError("unknown gene '" + g.str() + "'");
  }

  std::span<const std::size_t> successors(std::size_t i) const { return succ_.at(i); }
  std::span<const std::size_t> predecessors(std::size_t i) const { return pred_.at(i); }

  bool has_edge(std::size_t s, std::size_t t) const {
    const auto& out = succ_.at(s);
    return std::binary_search(out.begin(), out.end(), t);
  }
  bool has_edge(const GeneId& s, const GeneId& t) const {
    auto si = index_of(s), ti = index_of(t);
    return si && ti && has_edge(*si, *ti);
  }

  /// Autoregulatory genes. Self-loops are legal but worth surfacing.
  std::vector<GeneId> self_loops() const {
    std::vector<GeneId> out;
    for (const auto& e : edges_)
      if (e.source == e.target) out.push_back(e.source);
    return out;
  }

  friend bool operator==(const Grn& a, const Grn& b) { return a.genes_ == b.genes_ && a.edges_ == b.edges_; }

private:
  std::vector<GeneId> genes_;
  std::vector<Edge> edges_;
  std::unordered_map<GeneId, std::size_t, GeneIdHash> index_;
  std::vector<std::vector<std::size_t>> succ_;  // sorted because edges_ is
  std::vector<std::vector<std::size_t>> pred_;
};

// ---------------------------------------------------------------------------
// Expression data
// ---------------------------------------------------------------------------

struct SampleMeta {
  std::optional<double> time_minutes;
  std::string condition;
  int replicate = 1;
  std::string label;  // original column header or accession

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// Genes x samples matrix. Rows are stored in canonical gene order.
class ExpressionDataset {
public:
  ExpressionDataset() = default;

  /// `values` is row-major, one row per entry of `genes` (input order).
  ExpressionDataset(std::vector<GeneId> genes, std::vector<SampleMeta> samples, std::vector<double> values) {
    if (values.size() != genes.size() * samples.size())
      throw ValidationError("expression matrix has " + std::to_string(values.size()) + " cells, expected " +
                            std::to_string(genes.size()) + " x " + std::to_string(samples.size()));
    const std::size_t n = genes.size(), m = samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return genes[a] < genes[b]; });
    genes_.reserve(n);
    values_.resize(values.size());
    for (std::size_t r = 0; r < n; ++r) {
      if (r > 0 && genes[order[r]] == genes[order[r - 1]])
        throw ValidationError("duplicate gene '" + genes[order[r]].str() + "' in expression data");
      genes_.push_back(genes[order[r]]);
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(order[r] * m), m,
                  values_.begin() + static_cast<std::ptrdiff_t>(r * m));
    }
    for (std::size_t i = 0; i < n; ++i) index_.emplace(genes_[i], i);
    samples_ = std::move(samples);
  }

  std::size_t gene_count() const noexcept { return genes_.size(); }
  std::size_t sample_count() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return genes_.empty() || samples_.empty(); }
  const std::vector<GeneId>& genes() const noexcept { return genes_; }
  const std::vector<SampleMeta>& samples() const noexcept { return samples_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double value(std::size_t gene, std::size_t sample) const { return values_[gene * samples_.size() + sample]; }
  std::span<const double> row(std::size_t gene) const {
    return std::span<const double>(values_).subspan(gene * samples_.size(), samples_.size());
  }

  std::optional<std::size_t> index_of(const GeneId& g) const {
    auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require_index(const GeneId& g) const {
    if (auto i = index_of(g)) return *i;
    throw ValidationError("gene '" + g.str() + "' is not in the expression data");
  }

  /// New dataset holding the given sample columns, in the given order.
  ExpressionDataset select_samples(std::span<const std::size_t> columns) const {
    std::vector<SampleMeta> samples;
    std::vector<double> values;
    values.reserve(genes_.size() * columns.size());
    for (auto c : columns) samples.push_back(samples_.at(c));
    for (std::size_t g = 0; g < genes_.size(); ++g)
      for (auto c : columns) values.push_back(value(g, c));
    return ExpressionDataset(genes_, std::move(samples), std::move(values));
  }

  /// Sorted unique condition labels.
  std::vector<std::string> conditions() const {
    std::vector<std::string> out;
    for (const auto& s : samples_) out.push_back(s.condition);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Sample indices per (condition, replicate) track, time-ordered when every
  /// sample of the track carries a time (stable otherwise).
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> tracks() const {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < samples_.size(); ++s)
      out[{samples_[s].condition, samples_[s].replicate}].push_back(s);
    for (auto& [key, idx] : out) {
      const bool timed = std::all_of(idx.begin(), idx.end(), [&](auto s) { return samples_[s].time_minutes.has_value(); });
      if (timed)
        std::stable_sort(idx.begin(), idx.end(),
                         [&](auto a, auto b) { return *samples_[a].time_minutes < *samples_[b].time_minutes; });
    }
    return out;
  }

  friend bool operator==(const ExpressionDataset& a, const ExpressionDataset& b) {
    return a.genes_ == b.genes_ && a.samples_ == b.samples_ && a.values_ == b.values_;
  }

private:
  std::vector<GeneId> genes_;
  std::vector<SampleMeta> samples_;
  std::vector<double> values_;
  std::unordered_map<GeneId, std::size_t, GeneIdHash> index_;
};

inline std::string describe_sample(const SampleMeta& s, std::size_t index) {
  if (!s.label.empty()) return "'" + s.label + "'";
  return "#" + std::to_string(index);
}

/// Throws ValidationError naming the first empty, non-finite or negative cell.
inline void check_values(const ExpressionDataset& d) {
  if (d.empty()) throw ValidationError("expression dataset is empty");
  for (std::size_t g = 0; g < d.gene_count(); ++g)
    for (std::size_t s = 0; s < d.sample_count(); ++s) {
      const double v = d.value(g, s);
      if (!std::isfinite(v) || v < 0.0)
        throw ValidationError("gene '" + d.genes()[g].str() + "', sample " + describe_sample(d.samples()[s], s) +
                              ": value must be finite and non-negative");
    }
}

struct NormalizeOptions {
  bool log1p = false;  // apply log(1 + x) before scaling
};

/// Per-gene min-max scaling to [0, 1]; constant rows become 0.
/// Idempotent bit-for-bit on already-normalized data.
inline ExpressionDataset normalize(const ExpressionDataset& d, NormalizeOptions opts = {}) {
  check_values(d);
  std::vector<double> values = d.values();
  const std::size_t m = d.sample_count();
  for (std::size_t g = 0; g < d.gene_count(); ++g) {
    auto row = std::span<double>(values).subspan(g * m, m);
    if (opts.log1p)
      for (auto& v : row) v = std::log1p(v);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    const double min = *lo, range = *hi - *lo;
    for (auto& v : row) v = range > 0.0 ? (v - min) / range : 0.0;
  }
  return ExpressionDataset(d.genes(), d.samples(), std::move(values));
}

// ---------------------------------------------------------------------------
// Weighted network
// ---------------------------------------------------------------------------

enum class Activation { ReLU };

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

struct Incoming {
  GeneId source;
  double weight;
  friend bool operator==(const Incoming&, const Incoming&) = default;
};

/// One gene-perceptron: weighted regulators plus ground-state bias.
struct Module {
  std::vector<Incoming> incoming;  // sorted by source
  double bias = 0.0;
  friend bool operator==(const Module&, const Module&) = default;
};

struct WeightedEdge {
  GeneId source;
  GeneId target;
  double weight;
  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

class GrnnModel {
public:
  explicit GrnnModel(Activation activation = Activation::ReLU) : activation_(activation) {}

  void set_module(const GeneId& target, Module m) {
    std::sort(m.incoming.begin(), m.incoming.end(), [](auto& a, auto& b) { return a.source < b.source; });
    for (std::size_t i = 1; i < m.incoming.size(); ++i)
      if (m.incoming[i].source == m.incoming[i - 1].source)
        throw ValidationError("duplicate source '" + m.incoming[i].source.str() + "' for target '" + target.str() + "'");
    modules_.insert_or_assign(target, std::move(m));
  }

  Activation activation() const noexcept { return activation_; }
  const std::map<GeneId, Module>& modules() const noexcept { return modules_; }
  std::size_t size() const noexcept { return modules_.size(); }

  const Module* find(const GeneId& target) const {
    auto it = modules_.find(target);
    return it == modules_.end() ? nullptr : &it->second;
  }

  std::optional<double> weight(const GeneId& source, const GeneId& target) const {
    const Module* m = find(target);
    if (!m) return std::nullopt;
    auto it = std::lower_bound(m->incoming.begin(), m->incoming.end(), source,
                               [](const Incoming& in, const GeneId& s) { return in.source < s; });
    if (it == m->incoming.end() || it->source != source) return std::nullopt;
    return it->weight;
  }

  /// All weights, sorted by (source, target).
  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    for (const auto& [target, m] : modules_)
      for (const auto& in : m.incoming) out.push_back({in.source, target, in.weight});
    std::sort(out.begin(), out.end(),
              [](auto& a, auto& b) { return std::tie(a.source, a.target) < std::tie(b.source, b.target); });
    return out;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [t, m] : modules_) n += m.incoming.size();
    return n;
  }

  friend bool operator==(const GrnnModel&, const GrnnModel&) = default;

private:
  Activation activation_;
  std::map<GeneId, Module> modules_;
};

/// Graph underlying a model: module targets plus every referenced source.
inline Grn grn_from_model(const GrnnModel& model) {
  std::vector<Edge> edges;
  std::vector<GeneId> genes;
  for (const auto& [target, m] : model.modules()) {
    genes.push_back(target);
    for (const auto& in : m.incoming) edges.push_back({in.source, target, std::nullopt});
  }
  return Grn::from_edges(std::move(edges), std::move(genes));
}

struct Violation {
  std::string kind;  // dangling-edge | unknown-gene | non-finite-weight | non-finite-bias
  std::string message;
};

/// Empty iff every model weight sits on a Grn edge and all numbers are finite.
inline std::vector<Violation> validate_model(const Grn& grn, const GrnnModel& model) {
  std::vector<Violation> out;
  for (const auto& [target, m] : model.modules()) {
    if (!grn.index_of(target)) out.push_back({"unknown-gene", "target '" + target.str() + "' is not in the GRN"});
    if (!std::isfinite(m.bias)) out.push_back({"non-finite-bias", "bias of '" + target.str() + "' is not finite"});
    for (const auto& in : m.incoming) {
      const std::string edge = in.source.str() + " -> " + target.str();
      if (!grn.has_edge(in.source, target)) out.push_back({"dangling-edge", "weight on " + edge + " has no GRN edge"});
      if (!std::isfinite(in.weight)) out.push_back({"non-finite-weight", "weight on " + edge + " is not finite"});
    }
  }
  return out;
}

/// A model snapshot extracted from one time window or condition.
struct WeightConfig {
  std::string label;  // e.g. "W_0"
  double window_start_minutes = 0.0;
  std::size_t window_length_samples = 0;
  GrnnModel model;
};

// ---------------------------------------------------------------------------
// Layered subnetworks
// ---------------------------------------------------------------------------

/// layers[0] is the input layer; layers[k] holds genes first reached at
/// BFS depth k. Layers are sorted and pairwise disjoint.
struct LayeredSubnetwork {
  std::vector<std::vector<GeneId>> layers;
  std::size_t depth = 0;  // requested maximum depth

  const std::vector<GeneId>& input_layer() const { return layers.at(0); }

  std::optional<std::size_t> layer_of(const GeneId& g) const {
    for (std::size_t k = 0; k < layers.size(); ++k)
      if (std::binary_search(layers[k].begin(), layers[k].end(), g)) return k;
    return std::nullopt;
  }

  /// Every member gene, canonical order.
  std::vector<GeneId> genes() const {
    std::vector<GeneId> out;
    for (const auto& l : layers) out.insert(out.end(), l.begin(), l.end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

}  // namespace grnn
