#pragma once

#include <algorithm>
#include <array>
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
#include "grnn/detail/parallel.hpp"
#include "grnn/detail/random.hpp"
#include "grnn/simulate.hpp"
#include "grnn/stats.hpp"
#include "grnn/subnet.hpp"

namespace grnn {

// ---------------------------------------------------------------------------
// Concentration sweeps
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::vector<double> concentrations{0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t steps = 20;
  double noise_sigma = 0.0;
  std::size_t iterations = 10;
  std::uint64_t seed = 0;
  std::size_t max_depth = 10;
  double tail_fraction = 0.25;
  std::size_t workers = 1;
};

struct SweepRecord {
  std::string config_label;
  GeneId gene;
  double concentration;
  double response;
};

struct SweepResult {
  std::vector<SweepRecord> records;               // config, gene, concentration order
  std::map<std::string, std::string> failures;    // per config label
};

/// Stimulates `input_gene` at each concentration in every config's model
/// and records the steady response (tail mean) of every gene it reaches.
inline SweepResult concentration_sweep(std::span<const WeightConfig> configs, const GeneId& input_gene,
                                       const SweepOptions& opts = {}) {
  if (opts.concentrations.empty()) throw ValidationError("no concentrations given");
  struct Job {
    std::size_t config;
    std::size_t conc;
  };
  std::vector<std::optional<LayeredSubnetwork>> subnets(configs.size());
  SweepResult out;
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const Grn grn = grn_from_model(configs[c].model);
    if (!grn.index_of(input_gene)) {
      out.failures[configs[c].label] = "input gene '" + input_gene.str() + "' is not in the model";
      continue;
    }
    auto net = expand_layers(grn, {input_gene}, opts.max_depth);
    if (net.layers.size() < 2) {
      out.failures[configs[c].label] = "input gene '" + input_gene.str() + "' reaches no other gene";
      continue;
    }
    subnets[c] = std::move(net);
    for (std::size_t k = 0; k < opts.concentrations.size(); ++k) jobs.push_back({c, k});
  }

  std::vector<std::vector<double>> responses(jobs.size());
  std::vector<std::vector<GeneId>> genes(jobs.size());
  detail::parallel_for(jobs.size(), opts.workers, [&](std::size_t j) {
    const auto [c, k] = jobs[j];
    StimulusSpec stim;
    stim.inputs[input_gene] = opts.concentrations[k];
    stim.steps = opts.steps;
    stim.noise_sigma = opts.noise_sigma;
    stim.iterations = opts.iterations;
    stim.seed = detail::derive_seed(detail::derive_seed(opts.seed, c), k);
    const auto traj = run_forward(configs[c].model, *subnets[c], stim);
    responses[j] = steady_window(traj, opts.tail_fraction);
    genes[j] = traj.genes;
  });

  // Regroup to (config, gene, concentration) order.
  for (std::size_t j = 0; j < jobs.size();) {
    const std::size_t c = jobs[j].config, nconc = opts.concentrations.size();
    for (std::size_t g = 0; g < genes[j].size(); ++g) {
      if (genes[j][g] == input_gene) continue;
      for (std::size_t k = 0; k < nconc; ++k)
        out.records.push_back({configs[c].label, genes[j][g], opts.concentrations[k], responses[j + k][g]});
    }
    j += nconc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic fits
// ---------------------------------------------------------------------------

struct QuadraticFit {
  std::optional<GeneId> gene;
  std::string config_label;
  double a2 = 0.0, a1 = 0.0, a0 = 0.0;
  std::optional<double> r_squared;  // unset when the response is constant
};

namespace detail {

/// Gaussian elimination with partial pivoting on a 3x3 system.
inline std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
  for (std::size_t col = 0; col < 3; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (m[pivot][col] == 0.0) throw NumericError("singular normal equations");
    std::swap(m[col], m[pivot]);
    for (std::size_t r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<double, 3> x{};
  for (std::size_t i = 3; i-- > 0;) {
    double s = m[i][3];
    for (std::size_t c = i + 1; c < 3; ++c) s -= m[i][c] * x[c];
    x[i] = s / m[i][i];
  }
  return x;
}

}  // namespace detail

/// Least-squares y = a2 x^2 + a1 x + a0 from the 3x3 normal equations.
inline QuadraticFit fit_quadratic(std::span<const std::pair<double, double>> points) {
  std::set<double> distinct;
  for (auto [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("non-finite point");
    distinct.insert(x);
  }
  if (distinct.size() < 3) throw ValidationError("quadratic fit needs at least 3 distinct x values");

  std::array<double, 5> sx{};  // sum of x^k
  std::array<double, 3> sxy{};  // sum of x^k y
  for (auto [x, y] : points) {
    double p = 1.0;
    for (std::size_t k = 0; k < 5; ++k, p *= x) {
      sx[k] += p;
      if (k < 3) sxy[k] += p * y;
    }
  }
  // Unknowns ordered (a0, a1, a2).
  std::array<std::array<double, 4>, 3> m{};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) m[r][c] = sx[r + c];
    m[r][3] = sxy[r];
  }
  const auto a = detail::solve3(m);

  QuadraticFit fit;
  fit.a0 = a[0];
  fit.a1 = a[1];
  fit.a2 = a[2];
  double ymean = 0.0;
  for (auto [x, y] : points) ymean += y;
  ymean /= static_cast<double>(points.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (auto [x, y] : points) {
    const double r = y - (fit.a2 * x * x + fit.a1 * x + fit.a0);
    ss_res += r * r;
    ss_tot += (y - ymean) * (y - ymean);
  }
  if (ss_tot > 0.0) fit.r_squared = 1.0 - ss_res / ss_tot;
  return fit;
}

/// One fit per (config, gene) of a sweep. Pairs with fewer than three
/// distinct concentrations are skipped.
inline std::vector<QuadraticFit> fit_sweep(std::span<const SweepRecord> records) {
  std::map<std::pair<std::string, GeneId>, std::vector<std::pair<double, double>>> groups;
  std::vector<std::pair<std::string, GeneId>> order;
  for (const auto& r : records) {
    auto key = std::make_pair(r.config_label, r.gene);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.emplace_back(r.concentration, r.response);
  }
  std::vector<QuadraticFit> fits;
  for (const auto& key : order) {
    const auto& pts = groups[key];
    std::set<double> xs;
    for (auto& p : pts) xs.insert(p.first);
    if (xs.size() < 3) continue;
    auto f = fit_quadratic(pts);
    f.config_label = key.first;
    f.gene = key.second;
    fits.push_back(std::move(f));
  }
  return fits;
}

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t count = 0;
};

inline FiveNumber five_number(std::vector<double> v) {
  if (v.empty()) throw ValidationError("five-number summary of an empty sample");
  std::sort(v.begin(), v.end());
  return {v.front(), stats::quantile_sorted(v, 0.25), stats::quantile_sorted(v, 0.5), stats::quantile_sorted(v, 0.75),
          v.back(), v.size()};
}

struct CoefficientSummary {
  struct Entry {
    std::string config_label;
    FiveNumber a2, a1, a0;
  };
  std::vector<Entry> entries;  // first-appearance order of config labels
};

/// Box-plot statistics of each coefficient per config. Quartiles use linear
/// interpolation between order statistics at position p (n - 1).
inline CoefficientSummary coefficient_distribution(std::span<const QuadraticFit> fits) {
  std::vector<std::string> labels;
  std::map<std::string, std::array<std::vector<double>, 3>> coeffs;
  for (const auto& f : fits) {
    auto [it, fresh] = coeffs.try_emplace(f.config_label);
    if (fresh) labels.push_back(f.config_label);
    it->second[0].push_back(f.a2);
    it->second[1].push_back(f.a1);
    it->second[2].push_back(f.a0);
  }
  CoefficientSummary out;
  for (const auto& l : labels) {
    const auto& c = coeffs[l];
    out.entries.push_back({l, five_number(c[0]), five_number(c[1]), five_number(c[2])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaResult {
  std::size_t samples = 0, features = 0, k = 0;
  std::vector<double> components;   // k x features, unit loadings
  std::vector<double> eigenvalues;  // k, descending
  std::vector<double> explained;    // eigenvalue / total variance
  std::vector<double> projections;  // samples x k
  std::vector<double> mean;         // per feature

  double projection(std::size_t sample, std::size_t comp) const { return projections[sample * k + comp]; }
};

struct PcaOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

/// Principal components of a row-major samples x features matrix by power
/// iteration on the covariance with deflation. Each component's first
/// non-zero loading is made positive.
inline PcaResult pca(std::span<const double> matrix, std::size_t samples, std::size_t features, std::size_t k,
                     const PcaOptions& opts = {}) {
  if (matrix.size() != samples * features) throw ValidationError("matrix size does not match its dimensions");
  if (samples < 2) throw ValidationError("PCA needs at least two samples");
  if (k == 0 || k > std::min(samples, features))
    throw ValidationError("component count must lie in [1, " + std::to_string(std::min(samples, features)) + "]");

  PcaResult r{samples, features, k, {}, {}, {}, {}, std::vector<double>(features, 0.0)};
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t f = 0; f < features; ++f) r.mean[f] += matrix[s * features + f];
  for (auto& m : r.mean) m /= static_cast<double>(samples);

  std::vector<double> centered(matrix.begin(), matrix.end());
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t f = 0; f < features; ++f) centered[s * features + f] -= r.mean[f];

  std::vector<double> cov(features * features, 0.0);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t i = 0; i < features; ++i)
      for (std::size_t j = i; j < features; ++j) cov[i * features + j] += centered[s * features + i] * centered[s * features + j];
  for (std::size_t i = 0; i < features; ++i)
    for (std::size_t j = i; j < features; ++j) {
      cov[i * features + j] /= static_cast<double>(samples - 1);
      cov[j * features + i] = cov[i * features + j];
    }
  double total = 0.0;
  for (std::size_t i = 0; i < features; ++i) total += cov[i * features + i];

  auto normalize_sign = [&](std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    for (double x : v)
      if (std::abs(x) > 1e-12) {
        if (x < 0.0)
          for (auto& y : v) y = -y;
        break;
      }
  };

  std::vector<double> av(features);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v(features);
    for (std::size_t f = 0; f < features; ++f) v[f] = 1.0 + 0.1 * static_cast<double>(f);  // fixed, non-degenerate start
    normalize_sign(v);
    double lambda = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
      for (std::size_t i = 0; i < features; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < features; ++j) s += cov[i * features + j] * v[j];
        av[i] = s;
      }
      double norm = 0.0;
      for (double x : av) norm += x * x;
      if (norm <= 1e-28 * total * total) {  // remaining variance is numerically zero
        lambda = 0.0;
        converged = true;
        break;
      }
      std::vector<double> next = av;
      normalize_sign(next);
      double change = 0.0;
      for (std::size_t f = 0; f < features; ++f) change = std::max(change, std::abs(next[f] - v[f]));
      v.swap(next);
      if (change < opts.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericError("power iteration did not converge for component " + std::to_string(c + 1));
    // Rayleigh quotient of the final vector.
    lambda = 0.0;
    for (std::size_t i = 0; i < features; ++i)
      for (std::size_t j = 0; j < features; ++j) lambda += v[i] * cov[i * features + j] * v[j];
    lambda = std::max(lambda, 0.0);
    for (std::size_t i = 0; i < features; ++i)
      for (std::size_t j = 0; j < features; ++j) cov[i * features + j] -= lambda * v[i] * v[j];
    r.components.insert(r.components.end(), v.begin(), v.end());
    r.eigenvalues.push_back(lambda);
    r.explained.push_back(total > 0.0 ? lambda / total : 0.0);
  }

  r.projections.assign(samples * k, 0.0);
  for (std::size_t s = 0; s < samples; ++s)
    for (std::size_t c = 0; c < k; ++c) {
      double p = 0.0;
      for (std::size_t f = 0; f < features; ++f) p += centered[s * features + f] * r.components[c * features + f];
      r.projections[s * k + c] = p;
    }
  return r;
}

// ---------------------------------------------------------------------------
// Expression rates
// ---------------------------------------------------------------------------

struct RateExtreme {
  GeneId gene;
  double from_minutes;
  double to_minutes;
  double rate;
};

struct RateResult {
  std::vector<GeneId> genes;
  std::vector<double> interval_start;  // minutes
  std::vector<double> rates;           // genes x intervals, row-major
  std::optional<RateExtreme> min, max, max_magnitude;

  std::size_t intervals() const { return interval_start.size(); }
  double rate(std::size_t gene, std::size_t interval) const { return rates[gene * intervals() + interval]; }
};

/// Delta value / delta minutes between consecutive samples on raw values.
/// Samples must carry strictly increasing times in their stored order.
inline RateResult expression_rate(const ExpressionDataset& data) {
  const std::size_t m = data.sample_count();
  if (m < 2) throw ValidationError("rates need at least two timepoints");
  std::vector<double> t(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& meta = data.samples()[s];
    if (!meta.time_minutes) throw ValidationError("sample " + describe_sample(meta, s) + " has no time");
    t[s] = *meta.time_minutes;
    if (s > 0 && !(t[s] > t[s - 1]))
      throw ValidationError("timestamps are not strictly increasing at sample " + describe_sample(meta, s));
  }
  RateResult r;
  r.genes = data.genes();
  r.interval_start.assign(t.begin(), t.end() - 1);
  for (std::size_t g = 0; g < data.gene_count(); ++g)
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double rate = (data.value(g, i + 1) - data.value(g, i)) / (t[i + 1] - t[i]);
      r.rates.push_back(rate);
      const RateExtreme e{data.genes()[g], t[i], t[i + 1], rate};
      if (!r.min || rate < r.min->rate) r.min = e;
      if (!r.max || rate > r.max->rate) r.max = e;
      if (!r.max_magnitude || std::abs(rate) > std::abs(r.max_magnitude->rate)) r.max_magnitude = e;
    }
  return r;
}

}  // namespace grnn
