#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grnn/core.hpp"
#include "grnn/detail/parallel.hpp"
#include "grnn/detail/random.hpp"
#include "grnn/detail/text.hpp"

namespace grnn {

struct TrainSpec {
  double learning_rate = 0.001;
  std::size_t epochs = 100000;
  std::pair<double, double> init_range{-0.5, 0.5};
  std::uint64_t seed = 0;
  /// Training stops early once both the epoch-to-epoch MSE change and the
  /// squared gradient norm fall below this value. 0 disables early stopping.
  double convergence_epsilon = 1e-12;
  /// Re-draws of the initial parameters allowed when every pre-activation
  /// starts at or below zero while the target is not identically zero.
  std::size_t max_dead_restarts = 64;
  /// Independent seeded initialisations; the run with the lowest final MSE
  /// is kept (earliest on ties). 1 gives a single plain descent.
  std::size_t restarts = 1;
};

inline void validate(const TrainSpec& s) {
  if (!(s.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (s.epochs == 0) throw ValidationError("epochs must be positive");
  if (!(s.init_range.first < s.init_range.second)) throw ValidationError("init range needs lo < hi");
  if (!(s.convergence_epsilon >= 0.0)) throw ValidationError("convergence epsilon must be non-negative");
  if (s.restarts == 0) throw ValidationError("restarts must be positive");
}

/// How regulator levels are paired with the target level they explain.
enum class Pairing {
  NextTimepoint,  // sources at t, target at the next sample of the same track
  SameTimepoint,  // sources and target from the same sample (steady-state data)
};

/// Design matrix for one gene-perceptron module: rows are sample pairs.
struct ModuleData {
  std::size_t sources = 0;
  std::vector<double> x;  // rows x sources, row-major
  std::vector<double> y;  // target level per row

  std::size_t rows() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(x).subspan(r * sources, sources);
  }
};

inline ModuleData build_module_data(const GeneId& target, std::span<const GeneId> sources,
                                    const ExpressionDataset& data, Pairing pairing = Pairing::NextTimepoint) {
  const std::size_t ti = data.require_index(target);
  std::vector<std::size_t> si;
  for (const auto& s : sources) si.push_back(data.require_index(s));

  ModuleData md;
  md.sources = si.size();
  auto add = [&](std::size_t from, std::size_t to) {
    for (auto s : si) md.x.push_back(data.value(s, from));
    md.y.push_back(data.value(ti, to));
  };
  for (const auto& [key, idx] : data.tracks()) {
    if (pairing == Pairing::SameTimepoint) {
      for (auto s : idx) add(s, s);
    } else {
      for (std::size_t k = 0; k + 1 < idx.size(); ++k) add(idx[k], idx[k + 1]);
    }
  }
  if (md.rows() == 0)
    throw ValidationError("no valid sample pairs for target '" + target.str() + "'");
  return md;
}

/// Parameter layout: weights in source order, bias last.
inline double module_loss(std::span<const double> params, const ModuleData& md) {
  const double bias = params[md.sources];
  double sum = 0.0;
  for (std::size_t r = 0; r < md.rows(); ++r) {
    const auto x = md.row(r);
    double z = bias;
    for (std::size_t p = 0; p < md.sources; ++p) z += params[p] * x[p];
    const double err = (z > 0.0 ? z : 0.0) - md.y[r];
    sum += err * err;
  }
  return sum / static_cast<double>(md.rows());
}

/// Analytic gradient of module_loss; ReLU'(0) is taken as 0.
inline void module_gradient(std::span<const double> params, const ModuleData& md, std::span<double> grad) {
  const double bias = params[md.sources];
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t r = 0; r < md.rows(); ++r) {
    const auto x = md.row(r);
    double z = bias;
    for (std::size_t p = 0; p < md.sources; ++p) z += params[p] * x[p];
    if (!(z > 0.0)) continue;
    const double err = z - md.y[r];
    for (std::size_t p = 0; p < md.sources; ++p) grad[p] += err * x[p];
    grad[md.sources] += err;
  }
  const double scale = 2.0 / static_cast<double>(md.rows());
  for (auto& g : grad) g *= scale;
}

struct TrainLogEntry {
  std::size_t epoch;
  GeneId target;
  double mse;
};

struct ModuleFit {
  std::vector<double> weights;  // aligned with the source list
  double bias = 0.0;
  double mse = 0.0;
  std::size_t epochs_run = 0;
  std::size_t dead_restarts = 0;
};

/// Smallest eigenvalue of the mean outer product of [x, 1] over the rows
/// where the given parameters have a positive pre-activation. 0 when no row
/// is active. Near zero means the weights are not determined by the data.
inline double active_design_eigenvalue(const ModuleData& md, std::span<const double> weights, double bias) {
  const auto np = static_cast<Eigen::Index>(md.sources + 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(np, np);
  Eigen::VectorXd row(np);
  std::size_t active = 0;
  for (std::size_t r = 0; r < md.rows(); ++r) {
    const auto x = md.row(r);
    double z = bias;
    for (std::size_t p = 0; p < md.sources; ++p) z += weights[p] * x[p];
    if (!(z > 0.0)) continue;
    for (std::size_t p = 0; p < md.sources; ++p) row[static_cast<Eigen::Index>(p)] = x[p];
    row[np - 1] = 1.0;
    gram.noalias() += row * row.transpose();
    ++active;
  }
  if (active == 0) return 0.0;
  gram /= static_cast<double>(active);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

namespace detail {

inline ModuleFit descend(const ModuleData& md, const TrainSpec& spec, std::uint64_t seed,
                        std::size_t log_every, std::vector<std::pair<std::size_t, double>>* log) {
  const std::size_t np = md.sources + 1;
  detail::Rng rng(seed);
  std::vector<double> params(np), grad(np);

  const bool target_active = std::any_of(md.y.begin(), md.y.end(), [](double v) { return v > 0.0; });
  auto all_dead = [&] {
    for (std::size_t r = 0; r < md.rows(); ++r) {
      double z = params[md.sources];
      const auto x = md.row(r);
      for (std::size_t p = 0; p < md.sources; ++p) z += params[p] * x[p];
      if (z > 0.0) return false;
    }
    return true;
  };

  ModuleFit fit;
  for (;;) {
    for (auto& p : params) p = rng.uniform(spec.init_range.first, spec.init_range.second);
    if (!target_active || !all_dead() || fit.dead_restarts == spec.max_dead_restarts) break;
    ++fit.dead_restarts;
  }

  double mse = module_loss(params, md);
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    module_gradient(params, md, grad);
    double grad_sq = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      params[i] -= spec.learning_rate * grad[i];
      grad_sq += grad[i] * grad[i];
    }
    const double next = module_loss(params, md);
    if (!std::isfinite(next)) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    const double delta = std::abs(mse - next);
    mse = next;
    fit.epochs_run = epoch;
    if (log && log_every && epoch % log_every == 0) log->emplace_back(epoch, mse);
    if (spec.convergence_epsilon > 0.0 && delta < spec.convergence_epsilon && grad_sq < spec.convergence_epsilon)
      break;
  }
  fit.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(md.sources));
  fit.bias = params[md.sources];
  fit.mse = mse;
  return fit;
}

}  // namespace detail

/// Full-batch gradient descent from a seeded uniform initialisation, repeated
/// `spec.restarts` times. `log_every` > 0 records (epoch, mse) of the kept
/// run every that many epochs.
inline ModuleFit fit_module(const ModuleData& md, const TrainSpec& spec, std::uint64_t seed,
                            std::size_t log_every = 0, std::vector<std::pair<std::size_t, double>>* log = nullptr) {
  validate(spec);
  std::optional<ModuleFit> best;
  std::vector<std::pair<std::size_t, double>> run_log;
  for (std::size_t r = 0; r < spec.restarts; ++r) {
    run_log.clear();
    auto fit = detail::descend(md, spec, r == 0 ? seed : detail::derive_seed(seed, r), log_every, &run_log);
    if (!best || fit.mse < best->mse) {
      best = std::move(fit);
      if (log) *log = run_log;
    }
  }
  return *best;
}

/// Seed used for the module of `target`: hash64(master_seed, gene id).
inline std::uint64_t target_seed(std::uint64_t master, const GeneId& target) {
  return detail::derive_seed(master, std::string_view(target.str()));
}

inline ModuleFit extract_module_weights(const GeneId& target, std::span<const GeneId> sources,
                                        const ExpressionDataset& data, const TrainSpec& spec,
                                        Pairing pairing = Pairing::NextTimepoint) {
  return fit_module(build_module_data(target, sources, data, pairing), spec, target_seed(spec.seed, target));
}

struct ExtractOptions {
  Pairing pairing = Pairing::NextTimepoint;
  std::size_t workers = 1;
  std::size_t log_every = 0;
  /// When set, a fitted module whose active_design_eigenvalue falls below
  /// this value is reported as a failure and left out of the model.
  std::optional<double> min_design_eigenvalue;
};

struct ExtractionResult {
  GrnnModel model;                            // failed targets are absent
  std::map<GeneId, double> mse;               // per fitted target
  std::map<GeneId, std::string> failures;     // per failed target
  std::map<GeneId, double> design_eigenvalue; // per fitted target, see active_design_eigenvalue
  std::vector<TrainLogEntry> log;             // canonical target order
};

/// Fits one module per GRN gene with its predecessors as sources. Genes
/// without regulators get a bias-only fit. A failing target is recorded and
/// does not stop the others.
inline ExtractionResult extract_grnn(const Grn& grn, const ExpressionDataset& data, const TrainSpec& spec,
                                     const ExtractOptions& opts = {}) {
  validate(spec);
  for (const auto& g : grn.genes())
    if (!data.index_of(g)) throw ValidationError("expression data lacks GRN gene '" + g.str() + "'");

  const std::size_t n = grn.size();
  struct Slot {
    std::optional<ModuleFit> fit;
    double eigenvalue = 0.0;
    std::string error;
    std::vector<std::pair<std::size_t, double>> log;
  };
  std::vector<Slot> slots(n);
  detail::parallel_for(n, opts.workers, [&](std::size_t t) {
    const GeneId& target = grn.gene(t);
    std::vector<GeneId> sources;
    for (auto p : grn.predecessors(t)) sources.push_back(grn.gene(p));
    try {
      auto md = build_module_data(target, sources, data, opts.pairing);
      auto fit = fit_module(md, spec, target_seed(spec.seed, target), opts.log_every, &slots[t].log);
      slots[t].eigenvalue = active_design_eigenvalue(md, fit.weights, fit.bias);
      if (opts.min_design_eigenvalue && slots[t].eigenvalue < *opts.min_design_eigenvalue)
        throw NumericError("unidentifiable module: active design eigenvalue " +
                           detail::format_short(slots[t].eigenvalue) + " below " +
                           detail::format_short(*opts.min_design_eigenvalue));
      slots[t].fit = std::move(fit);
    } catch (const Error& e) {
      slots[t].error = e.what();
    }
  });

  ExtractionResult out;
  for (std::size_t t = 0; t < n; ++t) {
    const GeneId& target = grn.gene(t);
    for (auto [epoch, mse] : slots[t].log) out.log.push_back({epoch, target, mse});
    if (!slots[t].fit) {
      out.failures.emplace(target, slots[t].error);
      continue;
    }
    Module m;
    m.bias = slots[t].fit->bias;
    const auto preds = grn.predecessors(t);
    for (std::size_t i = 0; i < preds.size(); ++i) m.incoming.push_back({grn.gene(preds[i]), slots[t].fit->weights[i]});
    out.model.set_module(target, std::move(m));
    out.mse.emplace(target, slots[t].fit->mse);
    out.design_eigenvalue.emplace(target, slots[t].eigenvalue);
  }
  return out;
}

struct WindowOptions {
  std::size_t window_samples = 30;
  std::size_t stride_samples = 1;
  std::optional<std::string> condition;  // required when the data holds several
};

struct WindowedResult {
  std::vector<WeightConfig> configs;
  std::vector<std::map<GeneId, std::string>> failures;  // per config
};

/// Slides a window of `window_samples` consecutive timepoints over one
/// condition and extracts a model per position, labeled "W_<start minutes>".
/// Every replicate of the condition contributes its pairs inside the window.
inline WindowedResult extract_windowed(const Grn& grn, const ExpressionDataset& data, const WindowOptions& win,
                                       const TrainSpec& spec, const ExtractOptions& opts = {}) {
  if (win.window_samples == 0 || win.stride_samples == 0) throw ValidationError("window and stride must be positive");
  const auto conditions = data.conditions();
  std::string condition;
  if (win.condition) {
    if (std::find(conditions.begin(), conditions.end(), *win.condition) == conditions.end())
      throw ValidationError("unknown condition '" + *win.condition + "'");
    condition = *win.condition;
  } else if (conditions.size() == 1) {
    condition = conditions.front();
  } else {
    throw ValidationError("data holds " + std::to_string(conditions.size()) + " conditions; choose one");
  }

  std::vector<std::size_t> columns;
  std::set<double> time_set;
  for (std::size_t s = 0; s < data.sample_count(); ++s) {
    const auto& meta = data.samples()[s];
    if (meta.condition != condition) continue;
    if (!meta.time_minutes) throw ValidationError("sample " + describe_sample(meta, s) + " has no time");
    columns.push_back(s);
    time_set.insert(*meta.time_minutes);
  }
  const std::vector<double> times(time_set.begin(), time_set.end());
  if (win.window_samples > times.size())
    throw ValidationError("window of " + std::to_string(win.window_samples) + " exceeds track length " +
                          std::to_string(times.size()));

  WindowedResult out;
  for (std::size_t start = 0; start + win.window_samples <= times.size(); start += win.stride_samples) {
    const double lo = times[start], hi = times[start + win.window_samples - 1];
    std::vector<std::size_t> cols;
    for (auto c : columns) {
      const double t = *data.samples()[c].time_minutes;
      if (t >= lo && t <= hi) cols.push_back(c);
    }
    auto result = extract_grnn(grn, data.select_samples(cols), spec, opts);
    out.configs.push_back({"W_" + detail::format_short(lo), lo, win.window_samples, std::move(result.model)});
    out.failures.push_back(std::move(result.failures));
  }
  return out;
}

}  // namespace grnn
