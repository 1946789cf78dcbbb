#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "grnn/core.hpp"
#include "grnn/detail/parallel.hpp"
#include "grnn/detail/random.hpp"

namespace grnn {

namespace detail {

/// BFS levels by gene index; level k holds indices first reached at depth k.
inline std::vector<std::vector<std::size_t>> bfs_levels(const Grn& grn, const std::vector<std::size_t>& inputs,
                                                        std::size_t max_depth) {
  std::vector<char> seen(grn.size(), 0);
  std::vector<std::vector<std::size_t>> levels(1);
  for (auto i : inputs)
    if (!seen[i]) {
      seen[i] = 1;
      levels[0].push_back(i);
    }
  std::sort(levels[0].begin(), levels[0].end());
  for (std::size_t k = 0; k < max_depth; ++k) {
    std::vector<std::size_t> next;
    for (auto u : levels.back())
      for (auto v : grn.successors(u))
        if (!seen[v]) {
          seen[v] = 1;
          next.push_back(v);
        }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    levels.push_back(std::move(next));
  }
  return levels;
}

}  // namespace detail

/// Unrolls the graph from an input set: each gene lands in the layer of its
/// earliest BFS depth, so cycles never re-assign a gene. Stops at
/// `max_depth` or at the first empty layer.
inline LayeredSubnetwork expand_layers(const Grn& grn, const std::vector<GeneId>& inputs, std::size_t max_depth) {
  if (inputs.empty()) throw ValidationError("input set is empty");
  if (max_depth == 0) throw ValidationError("depth must be positive");
  std::vector<std::size_t> idx;
  for (const auto& g : inputs) idx.push_back(grn.require_index(g));
  LayeredSubnetwork net;
  net.depth = max_depth;
  for (const auto& level : detail::bfs_levels(grn, idx, max_depth)) {
    auto& layer = net.layers.emplace_back();
    for (auto i : level) layer.push_back(grn.gene(i));
  }
  return net;
}

struct LayerProfile {
  std::size_t input_size = 0;
  std::size_t depth = 0;
  std::vector<double> mean_count_per_layer;  // depth + 1 entries, entry 0 == input_size
  std::size_t trials = 0;
  bool cumulative = false;
};

struct ProfileOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Report the cumulative reachable-set size at each depth instead of the layer size.
  bool cumulative = false;
};

/// Mean layer sizes of expand_layers over `trials` uniformly drawn input
/// sets. Input sets are prefixes of a per-trial seeded shuffle, so for a
/// fixed seed a larger input size always contains the smaller one.
inline LayerProfile profile_layers(const Grn& grn, std::size_t input_size, std::size_t depth,
                                   const ProfileOptions& opts = {}) {
  if (input_size == 0 || input_size > grn.size())
    throw ValidationError("input size must lie in [1, " + std::to_string(grn.size()) + "]");
  if (depth == 0) throw ValidationError("depth must be positive");
  if (opts.trials == 0) throw ValidationError("trials must be positive");

  std::vector<std::vector<double>> counts(opts.trials, std::vector<double>(depth + 1, 0.0));
  detail::parallel_for(opts.trials, opts.workers, [&](std::size_t trial) {
    detail::Rng rng(detail::derive_seed(opts.seed, trial));
    std::vector<std::size_t> perm(grn.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < input_size; ++i) std::swap(perm[i], perm[i + rng.below(perm.size() - i)]);
    perm.resize(input_size);
    const auto levels = detail::bfs_levels(grn, perm, depth);
    double running = 0.0;
    for (std::size_t k = 0; k <= depth; ++k) {
      const double size = k < levels.size() ? static_cast<double>(levels[k].size()) : 0.0;
      running += size;
      counts[trial][k] = opts.cumulative ? running : size;
    }
  });

  LayerProfile p{input_size, depth, std::vector<double>(depth + 1, 0.0), opts.trials, opts.cumulative};
  for (const auto& c : counts)
    for (std::size_t k = 0; k <= depth; ++k) p.mean_count_per_layer[k] += c[k];
  for (auto& v : p.mean_count_per_layer) v /= static_cast<double>(opts.trials);
  return p;
}

/// Fraction of genes whose mean level within a condition exceeds the threshold.
inline std::map<std::string, double> sparsity(const ExpressionDataset& data, double active_threshold) {
  if (data.empty()) throw ValidationError("expression dataset is empty");
  std::map<std::string, double> out;
  for (const auto& cond : data.conditions()) {
    std::vector<std::size_t> cols;
    for (std::size_t s = 0; s < data.sample_count(); ++s)
      if (data.samples()[s].condition == cond) cols.push_back(s);
    std::size_t active = 0;
    for (std::size_t g = 0; g < data.gene_count(); ++g) {
      double sum = 0.0;
      for (auto c : cols) sum += data.value(g, c);
      if (sum / static_cast<double>(cols.size()) > active_threshold) ++active;
    }
    out[cond] = static_cast<double>(active) / static_cast<double>(data.gene_count());
  }
  return out;
}

inline double sparsity(const ExpressionDataset& data, double active_threshold, const std::string& condition) {
  const auto all = sparsity(data, active_threshold);
  auto it = all.find(condition);
  if (it == all.end()) throw ValidationError("unknown condition '" + condition + "'");
  return it->second;
}

using BigInt = boost::multiprecision::cpp_int;

struct ChoiceCount {
  double log10 = 0.0;
  std::optional<BigInt> exact;
};

/// log10 of a positive big integer from its leading digits and length.
inline double big_log10(const BigInt& v) {
  if (v <= 0) throw ValidationError("log10 of a non-positive integer");
  const std::string digits = v.str();
  const std::size_t lead = std::min<std::size_t>(digits.size(), 18);
  const double mantissa = std::stod(digits.substr(0, lead));
  return std::log10(mantissa) + static_cast<double>(digits.size() - lead);
}

/// Number of ways to pick `required` outputs from `candidates`: the falling
/// factorial P(n, k) = n!/(n-k)! when ordered, C(n, k) otherwise. The log is
/// accumulated term by term; `exact` adds the big-integer value.
inline ChoiceCount count_output_choices(std::uint64_t candidates, std::uint64_t required, bool ordered = true,
                                        bool exact = false) {
  if (candidates == 0 || required == 0) throw ValidationError("candidates and required must be positive");
  if (required > candidates) throw ValidationError("required exceeds candidates");
  ChoiceCount out;
  long double acc = 0.0L;
  for (std::uint64_t i = 0; i < required; ++i) {
    acc += std::log10(static_cast<long double>(candidates - i));
    if (!ordered) acc -= std::log10(static_cast<long double>(i + 1));
  }
  out.log10 = static_cast<double>(acc);
  if (exact) {
    BigInt v = 1;
    for (std::uint64_t i = 0; i < required; ++i) v *= candidates - i;
    if (!ordered) {
      BigInt f = 1;
      for (std::uint64_t i = 2; i <= required; ++i) f *= i;
      v /= f;
    }
    out.exact = std::move(v);
  }
  return out;
}

}  // namespace grnn
