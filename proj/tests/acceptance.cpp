// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "grnn/grnn.hpp"

using namespace grnn;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int number, const char* title, const std::function<Outcome()>& body, double budget_seconds = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_seconds > 0.0) o.require(secs < budget_seconds, fmt("runtime %.1f s over %.0f s budget", secs, budget_seconds));
  if (!o.pass) ++failures;
  std::printf("%s %2d %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", number, title, secs, o.detail.empty() ? "" : ": ",
              o.detail.c_str());
  std::fflush(stdout);
}

GeneId id(const std::string& s) { return GeneId(s); }

Grn indexed_graph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<GeneId> genes;
  for (std::size_t i = 0; i < n; ++i) genes.push_back(id("v" + std::to_string(100 + i)));
  std::vector<Edge> edges;
  for (auto [s, t] : pairs) edges.push_back({genes[s], genes[t], std::nullopt});
  return Grn(genes, edges);
}

Grn erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && rng.uniform(0.0, 1.0) < p) pairs.push_back({i, j});
  return indexed_graph(n, pairs);
}

Grn ring(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.push_back({i, (i + 1) % n});
  return indexed_graph(n, pairs);
}

std::string serialize(const GrnnModel& m) {
  std::ostringstream w, b;
  write_weights(m, w, b);
  return w.str() + "\n" + b.str();
}

double spearman_vs_index(const TemporalSeries& s) {
  std::vector<double> idx, dev;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    idx.push_back(static_cast<double>(i));
    dev.push_back(s.points[i].deviation);
  }
  return stats::spearman(idx, dev).value_or(-2.0);
}

// Shortest-path counts by explicit path enumeration, accumulated as exact rationals.
std::vector<double> brute_betweenness(const Grn& g) {
  using Rational = boost::multiprecision::cpp_rational;
  const std::size_t n = g.size();
  std::vector<Rational> acc(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::vector<std::size_t> frontier{s};
    dist[s] = 0;
    for (int d = 1; !frontier.empty(); ++d) {
      std::vector<std::size_t> next;
      for (auto u : frontier)
        for (auto v : g.successors(u))
          if (dist[v] < 0) {
            dist[v] = d;
            next.push_back(v);
          }
      frontier = next;
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s || dist[t] < 0) continue;
      std::size_t paths = 0;
      std::vector<std::size_t> through(n, 0), path{s};
      std::function<void(std::size_t)> walk = [&](std::size_t u) {
        if (u == t) {
          ++paths;
          for (std::size_t i = 1; i + 1 < path.size(); ++i) ++through[path[i]];
          return;
        }
        for (auto v : g.successors(u))
          if (dist[v] == dist[u] + 1) {
            path.push_back(v);
            walk(v);
            path.pop_back();
          }
      };
      walk(s);
      for (std::size_t v = 0; v < n; ++v)
        if (through[v]) acc[v] += Rational(through[v], paths);
    }
  }
  std::vector<double> out;
  for (const auto& a : acc) out.push_back(static_cast<double>(a));
  return out;
}

// Three conditions x three replicates of `blocks` copies of a 4-gene network;
// "heat" flips edge a0 -> d0.
ExpressionDataset condition_data(std::uint64_t seed, std::size_t blocks = 1, double noise = 0.0) {
  std::vector<GeneId> genes;
  for (std::size_t k = 0; k < blocks; ++k)
    for (const char* g : {"a", "b", "c", "d"}) genes.push_back(id(g + std::to_string(k)));
  const std::size_t n = genes.size();
  detail::Rng rng(seed);
  std::vector<SampleMeta> samples;
  std::vector<std::vector<double>> cols;
  for (const std::string cond : {"cold", "heat", "osmo"}) {
    GrnnModel m;
    for (std::size_t k = 0; k < blocks; ++k) {
      const auto& a = genes[4 * k];
      const auto& b = genes[4 * k + 1];
      m.set_module(genes[4 * k + 2], {{{a, 0.6}, {b, 0.2}}, 0.1});
      m.set_module(genes[4 * k + 3], {{{a, cond == "heat" && k == 0 ? -0.3 : 0.4}, {b, 0.3}}, 0.3});
    }
    const CompiledNetwork net(genes, m);
    for (int rep = 1; rep <= 3; ++rep) {
      std::vector<double> x(n), next(n);
      for (auto& v : x) v = rng.uniform(0.0, 1.0);
      for (int t = 0; t < 8; ++t) {
        cols.push_back(x);
        samples.push_back({10.0 * t, cond, rep, ""});
        net.step(x, next);
        for (std::size_t k = 0; k < blocks; ++k) {
          next[4 * k] = rng.uniform(0.0, 1.0);
          next[4 * k + 1] = rng.uniform(0.0, 1.0);
        }
        x = next;
      }
    }
  }
  std::vector<double> values;
  for (std::size_t g = 0; g < n; ++g)
    for (const auto& c : cols) values.push_back(std::max(0.0, c[g] + noise * rng.normal()));
  return ExpressionDataset(genes, samples, values);
}

Grn condition_grn(std::size_t blocks = 1) {
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < blocks; ++k) {
    const auto n = std::to_string(k);
    for (const char* s : {"a", "b"})
      for (const char* t : {"c", "d"}) edges.push_back({id(s + n), id(t + n), {}});
  }
  return Grn::from_edges(edges);
}

const std::vector<std::string> kConditions{"cold", "heat", "osmo"};

template <class E>
bool throws(const std::function<void()>& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace

int main() {
  criterion(1, "output-choice combinatorics", [] {
    Outcome o;
    const std::pair<std::pair<std::uint64_t, std::uint64_t>, double> quoted[] = {
        {{500, 10}, std::log10(8.9e26)}, {{2500, 10}, std::log10(9.3e33)}, {{1000, 100}, 297 + std::log10(5.9)}};
    for (const auto& [nk, ref] : quoted) {
      const auto c = count_output_choices(nk.first, nk.second, true, true);
      const double rel = std::abs(c.log10 - ref) / ref;
      o.require(rel <= 0.02, fmt("P(%llu,%llu) log10 %.4f vs %.4f", (unsigned long long)nk.first,
                                 (unsigned long long)nk.second, c.log10, ref));
      o.require(std::abs(c.log10 - big_log10(*c.exact)) <= 1e-9, "exact and log modes disagree");
    }
    return o;
  }, 1.0);

  criterion(2, "energy constants", [] {
    Outcome o;
    for (std::uint64_t n : {1ull, 129ull, 1000ull, 4000ull}) {
      const auto p = grnn_power(n);
      o.require(*p.p_tra_aw * 2 == *p.p_ex_aw * 75, "p_tra/p_ex is not 37.5");
      o.require(p.p_total_aw == static_cast<std::int64_t>(385 * n), "p_total is not 0.385 fW per gene");
      const double ratio = silicon_power(n, Substrate::R2600X).p_total_watts() / p.p_total_watts();
      o.require(std::abs(ratio / 2.5e12 - 1.0) <= 0.01, fmt("R2600X/GRNN ratio %.4g", ratio));
    }
    o.require(std::abs(silicon_power(1, Substrate::Spikey).p_total_watts() / 1.49e-6 - 1.0) <= 1e-12, "Spikey constant");
    o.require(std::abs(silicon_power(1, Substrate::R2600X).p_total_watts() / 9.62e-4 - 1.0) <= 1e-12, "R2600X constant");
    o.require(std::abs(silicon_power(1, Substrate::IntelMobile).p_total_watts() / 3.37e-4 - 1.0) <= 1e-12, "IntelMobile constant");
    o.require(std::abs(silicon_power(1, Substrate::RTX2070).p_total_watts() / 3.18e-5 - 1.0) <= 1e-12, "RTX2070 constant");
    const double pw = grnn_power(129).p_total_pw();
    o.require(pw <= 0.05, fmt("GRNN at n=129 is %.4f pW", pw));
    const double r2600 = silicon_power(129, Substrate::R2600X).p_total_watts() * 1e12;
    o.require(r2600 >= 1e9 && r2600 <= 1e12, fmt("R2600X at n=129 is %.3g pW", r2600));
    return o;
  });

  criterion(3, "weight recovery on synthetic networks", [] {
    Outcome o;
    std::size_t identifiable = 0, modules = 0;
    double worst_w = 0.0, worst_mse = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SyntheticSpec ss;
      ss.n_genes = 30;
      ss.n_tracks = 3;
      ss.seed = seed;
      const auto s = generate_synthetic(ss);
      TrainSpec spec;
      spec.learning_rate = 0.05;
      spec.restarts = 8;
      spec.seed = seed;
      const auto r = extract_grnn(s.grn, s.data, spec);
      o.require(r.failures.empty(), fmt("seed %llu: %zu failed modules", (unsigned long long)seed, r.failures.size()));
      for (const auto& [target, eig] : r.design_eigenvalue) {
        const Module* truth = s.truth.find(target);
        if (!truth || truth->incoming.empty()) continue;
        ++modules;
        if (eig < 1e-3) continue;
        ++identifiable;
        const Module* fit = r.model.find(target);
        for (std::size_t j = 0; j < truth->incoming.size(); ++j)
          worst_w = std::max(worst_w, std::abs(truth->incoming[j].weight - fit->incoming[j].weight));
        worst_mse = std::max(worst_mse, r.mse.at(target));
      }
    }
    o.require(identifiable >= 10, fmt("only %zu identifiable modules", identifiable));
    o.require(worst_w <= 0.05, fmt("weight error %.3g", worst_w));
    o.require(worst_mse <= 1e-4, fmt("module MSE %.3g", worst_mse));

    detail::Rng rng(2024);
    double worst_grad = 0.0;
    for (std::size_t checked = 0; checked < 100;) {
      ModuleData md;
      md.sources = 1 + rng.below(5);
      const std::size_t rows = 4 + rng.below(12);
      for (std::size_t i = 0; i < rows * md.sources; ++i) md.x.push_back(rng.uniform(0.0, 1.0));
      for (std::size_t i = 0; i < rows; ++i) md.y.push_back(rng.uniform(0.0, 1.0));
      std::vector<double> params(md.sources + 1);
      for (auto& p : params) p = rng.uniform(-1.0, 1.0);
      bool kink = false;
      for (std::size_t r = 0; r < rows; ++r) {
        double z = params[md.sources];
        for (std::size_t p = 0; p < md.sources; ++p) z += params[p] * md.row(r)[p];
        kink |= std::abs(z) < 1e-3;
      }
      if (kink) continue;
      std::vector<double> grad(params.size());
      module_gradient(params, md, grad);
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus[i] += 1e-6;
        minus[i] -= 1e-6;
        const double numeric = (module_loss(plus, md) - module_loss(minus, md)) / 2e-6;
        worst_grad = std::max(worst_grad, std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-6}));
      }
      ++checked;
    }
    o.require(worst_grad <= 1e-4, fmt("gradient relative error %.3g", worst_grad));
    o.detail += fmt("%s%zu/%zu modules identifiable, max weight error %.2g, max MSE %.2g, max gradient error %.2g",
                    o.detail.empty() ? "" : "; ", identifiable, modules, worst_w, worst_mse, worst_grad);
    return o;
  }, 120.0);

  criterion(4, "windowing contract", [] {
    Outcome o;
    SyntheticSpec ss;
    ss.n_genes = 5;
    ss.n_timepoints = 43;
    const auto s = generate_synthetic(ss);
    TrainSpec spec;
    spec.epochs = 20;
    const auto r = extract_windowed(s.grn, s.data, {.window_samples = 30, .stride_samples = 1, .condition = {}}, spec);
    o.require(r.configs.size() == 14, fmt("%zu configs", r.configs.size()));
    for (std::size_t i = 0; i < r.configs.size(); ++i)
      o.require(r.configs[i].label == "W_" + std::to_string(10 * i), "label " + r.configs[i].label);
    return o;
  });

  criterion(5, "temporal plasticity pipeline", [] {
    Outcome o;
    ExtractOptions eo;
    eo.min_design_eigenvalue = 1e-3;
    double min_rho = 1.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SyntheticSpec ss;
      ss.n_genes = 30;
      ss.n_tracks = 3;
      ss.drift_rate = 0.0025;
      ss.seed = seed;
      const auto s = generate_synthetic(ss);
      TrainSpec spec;
      spec.learning_rate = 0.05;
      spec.seed = seed;
      const auto series = temporal_correlation_series(extract_windowed(s.grn, s.data, {}, spec, eo).configs);
      o.require(series.points.front().deviation == 0.0, "deviation(W_0) is not 0");
      min_rho = std::min(min_rho, spearman_vs_index(series));
    }
    o.require(min_rho >= 0.8, fmt("Spearman %.3f", min_rho));

    SyntheticSpec ss;
    ss.n_genes = 30;
    ss.n_tracks = 3;
    ss.seed = 1;
    const auto s = generate_synthetic(ss);
    TrainSpec spec;
    spec.learning_rate = 0.05;
    spec.restarts = 4;
    spec.seed = 1;
    const auto series = temporal_correlation_series(extract_windowed(s.grn, s.data, {}, spec, eo).configs);
    double max_dev = 0.0;
    for (const auto& p : series.points) max_dev = std::max(max_dev, p.deviation);
    o.require(max_dev <= 1e-6, fmt("drift-free deviation %.3g", max_dev));
    o.require(series.common_edges >= 3, fmt("%zu common edges", series.common_edges));
    o.detail += fmt("%sdrift Spearman >= %.3f, drift-free max deviation %.2g over %zu edges", o.detail.empty() ? "" : "; ",
                    min_rho, max_dev, series.common_edges);
    return o;
  });

  criterion(6, "identity-line geometry", [] {
    Outcome o;
    auto d = [](std::vector<double> v) { return distance_to_identity_line(v); };
    o.require(d({1, 1, 1}) <= 1e-12, "(1,1,1)");
    o.require(std::abs(d({1, 0, 0}) - std::sqrt(2.0 / 3.0)) <= 1e-12, "(1,0,0)");
    o.require(std::abs(d({0.2, 0.5, 0.8}) - std::sqrt(0.18)) <= 1e-12, "(0.2,0.5,0.8)");
    detail::Rng rng(6);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> v(2 + rng.below(9));
      for (auto& x : v) x = rng.uniform(-5.0, 5.0);
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      worst = std::max(worst, std::abs(d(v) - std::sqrt(ss)) / std::max(1.0, std::sqrt(ss)));
    }
    o.require(worst <= 1e-12, fmt("mean-centering mismatch %.3g", worst));
    return o;
  });

  criterion(7, "beta fitting", [] {
    Outcome o;
    std::mt19937_64 gen(7);
    std::gamma_distribution<double> ga(2.0, 1.0), gb(5.0, 1.0);
    std::vector<double> draws(10000);
    for (auto& x : draws) {
      const double a = ga(gen), b = gb(gen);
      x = a / (a + b);
    }
    const auto fit = fit_beta(draws);
    o.require(std::abs(fit.alpha / 2.0 - 1.0) <= 0.1 && std::abs(fit.beta / 5.0 - 1.0) <= 0.1,
              fmt("fit (%.3f, %.3f)", fit.alpha, fit.beta));
    std::size_t reports = 0;
    TrainSpec spec;
    spec.learning_rate = 0.1;
    spec.epochs = 5000;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      PlasticityOptions popts;
      popts.resamples = 20;
      popts.permutations = 3;
      popts.seed = seed;
      const auto rep = input_plasticity(condition_grn(3), condition_data(seed, 3, 0.1), kConditions, spec, popts);
      if (!rep.beta) continue;
      ++reports;
      const double mean = rep.beta->alpha / (rep.beta->alpha + rep.beta->beta);
      if (mean < 0.5) o.require(rep.beta->alpha < rep.beta->beta, "left-skewed report with alpha >= beta");
    }
    detail::Rng rng(70);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> p(10 + rng.below(20));
      for (auto& x : p) x = rng.uniform(0.0, 1.0) * rng.uniform(0.0, 1.0);
      const auto b = fit_beta(p);
      const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
      if (mean < 0.5) o.require(b.alpha < b.beta, "left-skewed sample with alpha >= beta");
    }
    o.detail += fmt("%sfit (%.3f, %.3f), %zu plasticity reports with a beta fit", o.detail.empty() ? "" : "; ", fit.alpha,
                    fit.beta, reports);
    return o;
  });

  criterion(8, "betweenness against enumeration", [] {
    Outcome o;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      detail::Rng rng(seed);
      const std::size_t n = 2 + rng.below(11);
      const auto g = erdos_renyi(n, rng.uniform(0.1, 0.6), seed + 1000);
      const auto fast = betweenness_centrality(g);
      const auto slow = brute_betweenness(g);
      for (std::size_t v = 0; v < n; ++v)
        if (std::abs(fast[v] - slow[v]) > 1e-12 * std::max(1.0, slow[v]))
          o.require(false, fmt("seed %llu node %zu: %.17g vs %.17g", (unsigned long long)seed, v, fast[v], slow[v]));
    }
    return o;
  }, 30.0);

  criterion(9, "complexity orderings", [] {
    Outcome o;
    const double ring_score = algorithmic_complexity(ring(32));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto g = erdos_renyi(32, 0.5, seed);
      const double a = algorithmic_complexity(g);
      o.require(a > ring_score, fmt("seed %llu: %.3f <= ring %.3f", (unsigned long long)seed, a, ring_score));
      o.require(a == algorithmic_complexity(erdos_renyi(32, 0.5, seed)), "algorithmic score not reproducible");
      const double s = structural_complexity(g);
      o.require(s == structural_complexity(g), "structural score not reproducible");
      std::vector<std::size_t> perm(32);
      std::iota(perm.begin(), perm.end(), 0);
      detail::Rng rng(seed * 31);
      for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (const auto& e : g.edges()) pairs.push_back({perm[*g.index_of(e.source)], perm[*g.index_of(e.target)]});
      o.require(std::abs(structural_complexity(indexed_graph(32, pairs)) - s) <= 1e-12, "structural score not permutation invariant");
    }
    return o;
  });

  criterion(10, "quadratic regression", [] {
    Outcome o;
    std::vector<std::pair<double, double>> exact, line;
    for (double x : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      exact.push_back({x, 2 * x * x - x + 0.5});
      line.push_back({x, 3 * x});
    }
    const auto f = fit_quadratic(exact);
    o.require(std::abs(f.a2 - 2) <= 1e-9 && std::abs(f.a1 + 1) <= 1e-9 && std::abs(f.a0 - 0.5) <= 1e-9, "exact recovery");
    o.require(std::abs(fit_quadratic(line).a2) <= 1e-9, "collinear a2");
    // Hinges h0 = ReLU(0.3x - 0.02), h1..h3 = ReLU(x - 0.2 / 0.3 / 0.4) combine to x^2 on the grid.
    GrnnModel m;
    m.set_module(id("x"), {{}, 0.0});
    m.set_module(id("h0"), {{{id("x"), 0.3}}, -0.02});
    m.set_module(id("h1"), {{{id("x"), 1.0}}, -0.2});
    m.set_module(id("h2"), {{{id("x"), 1.0}}, -0.3});
    m.set_module(id("h3"), {{{id("x"), 1.0}}, -0.4});
    m.set_module(id("y"), {{{id("h0"), 1.0}, {id("h1"), 0.2}, {id("h2"), 0.2}, {id("h3"), 0.2}}, 0.0});
    const std::vector<WeightConfig> configs{{"W_0", 0.0, 30, m}};
    std::optional<double> a2;
    for (const auto& fit : fit_sweep(concentration_sweep(configs, id("x")).records))
      if (fit.gene == id("y")) a2 = fit.a2;
    o.require(a2 && std::abs(*a2 - 1.0) <= 1e-3, a2 ? fmt("constructed a2 %.6f", *a2) : std::string("no fit for output"));
    return o;
  });

  criterion(11, "principal components", [] {
    Outcome o;
    std::vector<double> line;
    for (int i = 0; i < 20; ++i) line.insert(line.end(), {0.1 * i, 0.2 * i, -0.05 * i});
    const auto l = pca(line, 20, 3, 2);
    o.require(std::abs(l.explained[0] - 1.0) <= 1e-12, fmt("line first component %.15f", l.explained[0]));
    detail::Rng rng(11);
    const std::size_t per = 5, features = 30;
    std::vector<std::vector<double>> centers(3, std::vector<double>(features));
    for (auto& c : centers)
      for (auto& x : c) x = rng.uniform(0.0, 1.0);
    std::vector<double> mat;
    for (const auto& c : centers)
      for (std::size_t r = 0; r < per; ++r)
        for (double x : c) mat.push_back(x + rng.normal(0.0, 0.03));
    const auto p = pca(mat, 3 * per, features, 2);
    double within = 0.0, between = 1e300;
    for (std::size_t a = 0; a < 3 * per; ++a)
      for (std::size_t b = a + 1; b < 3 * per; ++b) {
        const double dist = std::hypot(p.projection(a, 0) - p.projection(b, 0), p.projection(a, 1) - p.projection(b, 1));
        if (a / per == b / per) within = std::max(within, dist);
        else between = std::min(between, dist);
      }
    o.require(within < between, fmt("within %.3f, between %.3f", within, between));
    return o;
  });

  criterion(12, "sparsity by construction", [] {
    Outcome o;
    detail::Rng rng(12);
    std::vector<char> active(1000, 0);
    std::fill(active.begin(), active.begin() + 100, 1);
    for (std::size_t i = active.size() - 1; i > 0; --i) std::swap(active[i], active[rng.below(i + 1)]);
    std::vector<GeneId> genes;
    std::vector<double> values;
    for (std::size_t g = 0; g < 1000; ++g) {
      genes.push_back(id("g" + std::to_string(1000 + g)));
      for (int s = 0; s < 3; ++s) values.push_back(active[g] ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.1));
    }
    const std::vector<SampleMeta> samples(3, SampleMeta{std::nullopt, "c", 1, ""});
    const double sp = sparsity(ExpressionDataset(genes, samples, values), 0.3, "c");
    o.require(std::abs(sp - 0.10) <= 0.01, fmt("sparsity %.4f", sp));
    return o;
  });

  criterion(13, "determinism across runs and workers", [] {
    Outcome o;
    SyntheticSpec ss;
    ss.n_genes = 25;
    ss.noise_sigma = 0.01;
    ss.drift_rate = 0.001;
    ss.seed = 13;
    const auto s = generate_synthetic(ss), s2 = generate_synthetic(ss);
    o.require(s.data == s2.data && s.grn == s2.grn && s.truth == s2.truth, "synthetic generator");
    TrainSpec spec;
    spec.epochs = 2000;
    spec.restarts = 2;
    spec.seed = 13;
    ExtractOptions one, four;
    four.workers = 4;
    const auto a = extract_grnn(s.grn, s.data, spec, one), b = extract_grnn(s.grn, s.data, spec, four);
    o.require(serialize(a.model) == serialize(b.model) && a.mse == b.mse, "weight extraction");
    const WindowOptions win{.window_samples = 40, .stride_samples = 1, .condition = {}};
    const auto wa = extract_windowed(s.grn, s.data, win, spec, one), wb = extract_windowed(s.grn, s.data, win, spec, four);
    bool same = wa.configs.size() == wb.configs.size();
    for (std::size_t i = 0; same && i < wa.configs.size(); ++i) same = serialize(wa.configs[i].model) == serialize(wb.configs[i].model);
    o.require(same, "windowed extraction");
    const auto pa = profile_layers(s.grn, 3, 3, {.trials = 50, .seed = 13, .workers = 1});
    const auto pb = profile_layers(s.grn, 3, 3, {.trials = 50, .seed = 13, .workers = 4});
    o.require(pa.mean_count_per_layer == pb.mean_count_per_layer, "subnetwork profile");
    std::vector<WeightConfig> configs{{"W_0", 0.0, 30, a.model}};
    SweepOptions sw;
    sw.noise_sigma = 0.05;
    sw.seed = 13;
    const auto ra = concentration_sweep(configs, s.grn.gene(0), sw);
    sw.workers = 4;
    const auto rb = concentration_sweep(configs, s.grn.gene(0), sw);
    same = ra.records.size() == rb.records.size();
    for (std::size_t i = 0; same && i < ra.records.size(); ++i) same = ra.records[i].response == rb.records[i].response;
    o.require(same, "concentration sweep");
    TrainSpec pspec;
    pspec.learning_rate = 0.1;
    pspec.epochs = 2000;
    PlasticityOptions popts;
    popts.resamples = 5;
    popts.permutations = 3;
    popts.seed = 13;
    ExtractOptions pw;
    pw.workers = 3;
    const auto ia = input_plasticity(condition_grn(), condition_data(13), kConditions, pspec, popts);
    const auto ib = input_plasticity(condition_grn(), condition_data(13), kConditions, pspec, popts, pw);
    same = ia.threshold == ib.threshold && ia.edges.size() == ib.edges.size();
    for (std::size_t i = 0; same && i < ia.edges.size(); ++i)
      same = ia.edges[i].distance == ib.edges[i].distance && ia.edges[i].probability == ib.edges[i].probability;
    o.require(same, "input plasticity");
    o.require(algorithmic_complexity(s.grn) == algorithmic_complexity(s2.grn), "complexity");
    return o;
  });

  criterion(14, "parsers", [] {
    Outcome o;
    std::ifstream chain(std::string(GRNN_FIXTURE_DIR) + "/chain.tsv");
    const auto g = parse_edge_list(chain);
    std::ostringstream e1, e2;
    write_edge_list(g, e1);
    std::istringstream back(e1.str());
    write_edge_list(parse_edge_list(back), e2);
    o.require(e1.str() == e2.str(), "edge list round trip");

    detail::Rng rng(14);
    for (int trial = 0; trial < 50; ++trial) {
      GrnnModel m;
      const std::size_t n = 1 + rng.below(6);
      for (std::size_t t = 0; t < n; ++t) {
        Module mod;
        mod.bias = rng.normal() * std::pow(10.0, rng.uniform(-20.0, 20.0));
        for (std::size_t s = 0; s < n; ++s)
          if (s != t && rng.below(2)) mod.incoming.push_back({id("t" + std::to_string(s)), rng.normal()});
        m.set_module(id("t" + std::to_string(t)), mod);
      }
      std::ostringstream w, b;
      write_weights(m, w, b);
      std::istringstream wi(w.str()), bi(b.str());
      if (!(read_weights(wi, bi) == m)) {
        o.require(false, "weights round trip");
        break;
      }
    }

    std::ifstream geo_in(std::string(GRNN_FIXTURE_DIR) + "/minimal_series_matrix.txt");
    const auto geo = parse_geo_series_matrix(geo_in);
    o.require(geo.dataset.gene_count() == 2 && geo.dataset.sample_count() == 2, "series matrix dimensions");

    auto edges = [](std::string s) { std::istringstream in(s); parse_edge_list(in); };
    auto csv = [](std::string s) { std::istringstream in(s); parse_expression_csv(in); };
    auto series = [](std::string s) { std::istringstream in(s); parse_geo_series_matrix(in); };
    auto weights = [](std::string w, std::string b) { std::istringstream wi(w), bi(b); read_weights(wi, bi); };
    const std::vector<std::pair<const char*, std::function<void()>>> malformed{
        {"space-separated edge", [&] { edges("a b\n"); }},
        {"duplicate edge", [&] { edges("a\tb\na\tb\n"); }},
        {"bad sign", [&] { edges("a\tb\tx\n"); }},
        {"non-numeric cell", [&] { csv("gene,c:1,c:2\na,1,abc\n"); }},
        {"ragged row", [&] { csv("gene,c:1,c:2\na,1\n"); }},
        {"duplicate gene", [&] { csv("gene,c:1\na,1\na,2\n"); }},
        {"missing table marker", [&] { series("!Series_title\t\"x\"\n\"ID_REF\"\t\"GSM1\"\n\"p\"\t1\n"); }},
        {"unterminated table", [&] { series("!series_matrix_table_begin\n\"ID_REF\"\t\"GSM1\"\n\"p\"\t1\n"); }},
        {"ragged series table", [&] { series("!series_matrix_table_begin\nID_REF\tGSM1\tGSM2\np\t1\n!series_matrix_table_end\n"); }},
        {"non-numeric weight", [&] { weights("source,target,weight\na,b,x\n", "gene,bias\na,0\nb,0\n"); }},
    };
    for (const auto& [what, f] : malformed) o.require(throws<Error>(f), std::string("no structured error for ") + what);
    return o;
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
