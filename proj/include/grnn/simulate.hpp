#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "grnn/core.hpp"
#include "grnn/detail/parallel.hpp"
#include "grnn/detail/random.hpp"

namespace grnn {

/// Index-based view of a model over a fixed gene list, ready for stepping.
class CompiledNetwork {
public:
  struct Term {
    std::size_t source;
    double weight;
  };

  CompiledNetwork() = default;

  /// Weights of `model` restricted to edges whose endpoints are both in
  /// `genes`. Genes without a module keep bias 0 and no inputs.
  CompiledNetwork(const std::vector<GeneId>& genes, const GrnnModel& model)
      : incoming_(genes.size()), bias_(genes.size(), 0.0), activation_(model.activation()) {
    std::map<GeneId, std::size_t> index;
    for (std::size_t i = 0; i < genes.size(); ++i) index.emplace(genes[i], i);
    for (std::size_t t = 0; t < genes.size(); ++t) {
      const Module* m = model.find(genes[t]);
      if (!m) continue;
      bias_[t] = m->bias;
      for (const auto& in : m->incoming)
        if (auto it = index.find(in.source); it != index.end()) incoming_[t].push_back({it->second, in.weight});
    }
  }

  std::size_t size() const noexcept { return bias_.size(); }
  std::vector<std::vector<Term>>& incoming() noexcept { return incoming_; }
  const std::vector<std::vector<Term>>& incoming() const noexcept { return incoming_; }
  std::vector<double>& bias() noexcept { return bias_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  double pre_activation(std::size_t target, std::span<const double> x) const {
    double z = bias_[target];
    for (const auto& term : incoming_[target]) z += term.weight * x[term.source];
    return z;
  }

  /// Synchronous update: out[g] = act(sum_p w_pg * x[p] + b_g) for every g.
  void step(std::span<const double> x, std::span<double> out) const {
    for (std::size_t g = 0; g < size(); ++g) out[g] = activate(activation_, pre_activation(g, x));
  }

private:
  std::vector<std::vector<Term>> incoming_;
  std::vector<double> bias_;
  Activation activation_ = Activation::ReLU;
};

struct StimulusSpec {
  std::map<GeneId, double> inputs;  // input-layer gene -> clamped concentration
  std::size_t steps = 10;
  double noise_sigma = 0.0;  // 0.05 is the customary stochastic setting
  std::size_t iterations = 10;
  std::uint64_t seed = 0;
};

/// genes x (steps + 1) states; column t is time step t, column 0 the initial state.
struct Trajectory {
  std::vector<GeneId> genes;
  std::size_t columns = 0;
  std::vector<double> values;

  double value(std::size_t gene, std::size_t t) const { return values[gene * columns + t]; }
  std::span<const double> row(std::size_t gene) const {
    return std::span<const double>(values).subspan(gene * columns, columns);
  }
  std::optional<std::size_t> index_of(const GeneId& g) const {
    auto it = std::lower_bound(genes.begin(), genes.end(), g);
    if (it == genes.end() || *it != g) return std::nullopt;
    return static_cast<std::size_t>(it - genes.begin());
  }
};

namespace detail {

inline void run_once(const CompiledNetwork& net, const std::vector<char>& clamped, const std::vector<double>& initial,
                     std::size_t steps, double sigma, std::uint64_t seed, std::vector<double>& out) {
  const std::size_t n = net.size(), cols = steps + 1;
  Rng rng(seed);
  std::vector<double> x = initial, next(n);
  out.assign(n * cols, 0.0);
  for (std::size_t g = 0; g < n; ++g) out[g * cols] = x[g];
  for (std::size_t t = 1; t <= steps; ++t) {
    net.step(x, next);
    for (std::size_t g = 0; g < n; ++g) {
      if (clamped[g]) {
        next[g] = initial[g];
        continue;
      }
      if (sigma > 0.0) next[g] = std::max(0.0, next[g] * (1.0 + rng.normal(0.0, sigma)));
      if (!std::isfinite(next[g]))
        throw NumericError("non-finite state at step " + std::to_string(t));
    }
    x.swap(next);
    for (std::size_t g = 0; g < n; ++g) out[g * cols + t] = x[g];
  }
}

}  // namespace detail

/// Clamps the stimulus on input-layer genes and propagates it through the
/// subnetwork's edges for `steps` synchronous updates. Edges pointing back
/// into an earlier layer are ignored. Non-input genes start at 0. With
/// noise, each iteration uses its own derived seed and the result is the
/// elementwise mean over iterations, summed in iteration order.
inline Trajectory run_forward(const GrnnModel& model, const LayeredSubnetwork& subnet, const StimulusSpec& stim,
                              std::size_t workers = 1) {
  if (subnet.layers.empty()) throw ValidationError("subnetwork has no input layer");
  if (stim.steps == 0) throw ValidationError("steps must be positive");
  if (stim.iterations == 0) throw ValidationError("iterations must be positive");
  if (!(stim.noise_sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");

  Trajectory traj;
  traj.genes = subnet.genes();
  traj.columns = stim.steps + 1;
  const std::size_t n = traj.genes.size();

  std::vector<std::size_t> layer(n);
  for (std::size_t g = 0; g < n; ++g) layer[g] = *subnet.layer_of(traj.genes[g]);

  CompiledNetwork net(traj.genes, model);
  for (std::size_t g = 0; g < n; ++g) {
    if (layer[g] > 0 && !model.find(traj.genes[g]))
      throw ValidationError("model has no module for subnetwork gene '" + traj.genes[g].str() + "'");
    auto& terms = net.incoming()[g];
    std::erase_if(terms, [&](const auto& term) { return layer[term.source] > layer[g]; });
  }

  std::vector<char> clamped(n, 0);
  std::vector<double> initial(n, 0.0);
  for (const auto& [gene, c] : stim.inputs) {
    auto i = traj.index_of(gene);
    if (!i || layer[*i] != 0) throw ValidationError("stimulus gene '" + gene.str() + "' is not in the input layer");
    if (!std::isfinite(c)) throw ValidationError("stimulus for '" + gene.str() + "' is not finite");
    initial[*i] = c;
  }
  for (std::size_t g = 0; g < n; ++g)
    if (layer[g] == 0) clamped[g] = 1;

  if (stim.noise_sigma == 0.0) {
    detail::run_once(net, clamped, initial, stim.steps, 0.0, stim.seed, traj.values);
    return traj;
  }

  std::vector<std::vector<double>> runs(stim.iterations);
  detail::parallel_for(stim.iterations, workers, [&](std::size_t it) {
    detail::run_once(net, clamped, initial, stim.steps, stim.noise_sigma, detail::derive_seed(stim.seed, it), runs[it]);
  });
  traj.values.assign(n * traj.columns, 0.0);
  for (const auto& run : runs)
    for (std::size_t i = 0; i < run.size(); ++i) traj.values[i] += run[i];
  for (auto& v : traj.values) v /= static_cast<double>(stim.iterations);
  return traj;
}

/// Number of trailing columns averaged by steady_window.
inline std::size_t tail_columns(std::size_t columns, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ValidationError("tail fraction must lie in (0, 1]");
  // The epsilon absorbs representation error, e.g. 0.3 * 10 = 3.0000000000000004.
  const auto k = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(columns) - 1e-9));
  return std::clamp<std::size_t>(k, 1, columns);
}

/// Per-gene mean over the final ceil(tail_fraction * columns) columns.
inline std::vector<double> steady_window(const Trajectory& traj, double tail_fraction) {
  const std::size_t k = tail_columns(traj.columns, tail_fraction);
  std::vector<double> out(traj.genes.size());
  for (std::size_t g = 0; g < out.size(); ++g) {
    // Running mean: exact when the tail is constant.
    double mean = 0.0;
    std::size_t seen = 0;
    for (std::size_t t = traj.columns - k; t < traj.columns; ++t)
      mean += (traj.value(g, t) - mean) / static_cast<double>(++seen);
    out[g] = mean;
  }
  return out;
}

}  // namespace grnn
