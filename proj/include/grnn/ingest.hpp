#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grnn/core.hpp"
#include "grnn/detail/random.hpp"
#include "grnn/detail/text.hpp"
#include "grnn/simulate.hpp"

namespace grnn {

// ---------------------------------------------------------------------------
// Edge lists: `source<TAB>target[<TAB>+|-]`, '#' comments
// ---------------------------------------------------------------------------

inline Grn parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty() || line.front() == '#') continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3)
      throw ParseError(lineno, "expected 'source<TAB>target[<TAB>sign]', got " + std::to_string(fields.size()) +
                                   " tab-separated field(s)");
    auto make_id = [&](std::string_view s) {
      try {
        return GeneId(s);
      } catch (const ValidationError& e) {
        throw ParseError(lineno, e.what());
      }
    };
    Edge e{make_id(fields[0]), make_id(fields[1]), std::nullopt};
    if (fields.size() == 3) {
      if (fields[2] == "+")
        e.sign = 1;
      else if (fields[2] == "-")
        e.sign = -1;
      else if (!fields[2].empty())
        throw ParseError(lineno, "sign must be '+' or '-', got '" + std::string(fields[2]) + "'");
    }
    if (!seen.emplace(e.source.str(), e.target.str()).second)
      throw ParseError(lineno, "duplicate edge " + e.source.str() + " -> " + e.target.str());
    edges.push_back(std::move(e));
  }
  return Grn::from_edges(std::move(edges));
}

/// Canonical edge order, LF line endings. Isolated genes are not
/// representable in the format and are dropped.
inline void write_edge_list(const Grn& grn, std::ostream& out) {
  for (const auto& e : grn.edges()) {
    out << e.source.str() << '\t' << e.target.str();
    if (e.sign) out << '\t' << (*e.sign > 0 ? '+' : '-');
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Expression CSV: header `gene,<condition>:<replicate>[:<minutes>],...`
// ---------------------------------------------------------------------------

inline SampleMeta parse_sample_label(std::string_view label, std::size_t lineno = 1) {
  SampleMeta meta;
  meta.label = std::string(label);
  const auto parts = detail::split(label, ':');
  if (parts.size() > 3) throw ParseError(lineno, "sample label '" + meta.label + "' has more than three ':' fields");
  meta.condition = std::string(parts[0]);
  if (meta.condition.empty()) throw ParseError(lineno, "sample label '" + meta.label + "' has an empty condition");
  if (parts.size() >= 2) {
    auto rep = detail::parse_int(parts[1]);
    if (!rep) throw ParseError(lineno, "replicate in '" + meta.label + "' is not an integer");
    meta.replicate = static_cast<int>(*rep);
  }
  if (parts.size() == 3 && !parts[2].empty()) {
    auto t = detail::parse_double(parts[2]);
    if (!t || !std::isfinite(*t) || *t < 0.0)
      throw ParseError(lineno, "time in '" + meta.label + "' is not a non-negative number");
    meta.time_minutes = *t;
  }
  return meta;
}

inline std::string sample_label(const SampleMeta& s) {
  std::string out = s.condition + ":" + std::to_string(s.replicate);
  if (s.time_minutes) out += ":" + detail::format_short(*s.time_minutes);
  return out;
}

inline ExpressionDataset parse_expression_csv(std::istream& in) {
  std::string line;
  if (!detail::read_line(in, line)) throw ParseError(1, "missing header row");
  const auto header = detail::split(line, ',');
  if (header.size() < 2) throw ParseError(1, "header must name at least one sample");
  std::vector<SampleMeta> samples;
  for (std::size_t c = 1; c < header.size(); ++c) samples.push_back(parse_sample_label(detail::trim(header[c])));

  std::vector<GeneId> genes;
  std::vector<double> values;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw ParseError(lineno, "ragged row: " + std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(header.size()));
    const auto name = std::string(detail::trim(cells[0]));
    if (!seen.insert(name).second) throw ParseError(lineno, "duplicate gene '" + name + "'");
    try {
      genes.emplace_back(name);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto v = detail::parse_double(cells[c]);
      if (!v || !std::isfinite(*v) || *v < 0.0)
        throw ParseError(lineno, "gene '" + name + "', column " + std::to_string(c + 1) + ": '" +
                                     std::string(cells[c]) + "' is not a finite non-negative number");
      values.push_back(*v);
    }
  }
  return ExpressionDataset(std::move(genes), std::move(samples), std::move(values));
}

inline void write_expression_csv(const ExpressionDataset& d, std::ostream& out) {
  out << "gene";
  for (const auto& s : d.samples()) out << ',' << sample_label(s);
  out << '\n';
  for (std::size_t g = 0; g < d.gene_count(); ++g) {
    out << d.genes()[g].str();
    for (double v : d.row(g)) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// GEO series-matrix text
// ---------------------------------------------------------------------------

struct GeoSeries {
  ExpressionDataset dataset;
  std::size_t imputed_cells = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool is_missing_cell(std::string_view s) {
  s = trim(unquote(trim(s)));
  if (s.empty()) return true;
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "null" || lower == "na" || lower == "nan";
}

/// Pulls "<n> min" / "t=<n>" time and "rep <n>" replicate tokens from a sample title.
inline void apply_title(SampleMeta& meta, const std::string& title) {
  static const std::regex time_re(R"((\d+(?:\.\d+)?)\s*(?:min|mins|minute|minutes)\b|\bt\s*=?\s*(\d+(?:\.\d+)?)\b)",
                                  std::regex::icase);
  static const std::regex rep_re(R"(\b(?:rep|replicate)\s*[_-]?\s*(\d+)\b)", std::regex::icase);
  std::smatch m;
  if (std::regex_search(title, m, time_re)) {
    const auto token = m[1].matched ? m[1].str() : m[2].str();
    if (auto t = parse_double(token)) meta.time_minutes = *t;
  }
  if (std::regex_search(title, m, rep_re))
    if (auto r = parse_int(m[1].str())) meta.replicate = static_cast<int>(*r);
  meta.label = title;
}

}  // namespace detail

/// Reads the table between `!series_matrix_table_begin` and
/// `!series_matrix_table_end`. Samples are labeled by GSM accession (used as
/// condition); `!Sample_title` values, when present, supply time and
/// replicate tokens. Missing cells ("null", "NA", empty) are imputed by the
/// row mean of the observed cells and counted in the result.
inline GeoSeries parse_geo_series_matrix(std::istream& in) {
  std::vector<std::string> titles;
  std::string line;
  std::size_t lineno = 0;
  bool begun = false;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (line.rfind("!series_matrix_table_begin", 0) == 0) {
      begun = true;
      break;
    }
    if (line.rfind("!Sample_title", 0) == 0) {
      const auto fields = detail::split(line, '\t');
      titles.clear();
      for (std::size_t i = 1; i < fields.size(); ++i)
        titles.emplace_back(detail::unquote(detail::trim(fields[i])));
    }
  }
  if (!begun) throw ParseError(0, "series matrix has no '!series_matrix_table_begin' marker");

  if (!detail::read_line(in, line)) throw ParseError(lineno + 1, "series matrix table has no header row");
  ++lineno;
  const auto header = detail::split(line, '\t');
  if (header.size() < 2 || detail::unquote(detail::trim(header[0])) != "ID_REF")
    throw ParseError(lineno, "table header must start with ID_REF and list at least one sample");

  GeoSeries out;
  std::vector<SampleMeta> samples;
  for (std::size_t c = 1; c < header.size(); ++c) {
    SampleMeta meta;
    meta.condition = std::string(detail::unquote(detail::trim(header[c])));
    meta.label = meta.condition;
    if (meta.condition.empty()) throw ParseError(lineno, "empty sample accession in column " + std::to_string(c + 1));
    if (c - 1 < titles.size()) detail::apply_title(meta, titles[c - 1]);
    samples.push_back(std::move(meta));
  }
  if (!titles.empty() && titles.size() != samples.size())
    out.warnings.push_back("!Sample_title lists " + std::to_string(titles.size()) + " titles for " +
                           std::to_string(samples.size()) + " samples");

  std::vector<GeneId> genes;
  std::vector<double> values;
  std::set<std::string> seen;
  bool ended = false;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (line.rfind("!series_matrix_table_end", 0) == 0) {
      ended = true;
      break;
    }
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, '\t');
    if (cells.size() != header.size())
      throw ParseError(lineno, "ragged table row: " + std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(header.size()));
    const std::string id(detail::unquote(detail::trim(cells[0])));
    if (!seen.insert(id).second) throw ParseError(lineno, "duplicate ID_REF '" + id + "'");
    try {
      genes.emplace_back(id);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    std::vector<std::optional<double>> row;
    double sum = 0.0;
    std::size_t observed = 0;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (detail::is_missing_cell(cells[c])) {
        row.emplace_back();
        continue;
      }
      auto v = detail::parse_double(detail::unquote(detail::trim(cells[c])));
      if (!v || !std::isfinite(*v) || *v < 0.0)
        throw ParseError(lineno, "probe '" + id + "', column " + std::to_string(c + 1) + ": '" +
                                     std::string(cells[c]) + "' is not a finite non-negative number");
      row.push_back(v);
      sum += *v;
      ++observed;
    }
    if (observed == 0) throw ParseError(lineno, "probe '" + id + "' has no observed values to impute from");
    const double mean = sum / static_cast<double>(observed);
    if (observed < row.size()) {
      out.imputed_cells += row.size() - observed;
      out.warnings.push_back("probe '" + id + "': " + std::to_string(row.size() - observed) +
                             " missing cell(s) imputed by row mean");
    }
    for (const auto& v : row) values.push_back(v.value_or(mean));
  }
  if (!ended) throw ParseError(lineno, "series matrix table has no '!series_matrix_table_end' marker");
  out.dataset = ExpressionDataset(std::move(genes), std::move(samples), std::move(values));
  return out;
}

// ---------------------------------------------------------------------------
// Weight files: `source,target,weight` plus `gene,bias`
// ---------------------------------------------------------------------------

inline void write_weights(const GrnnModel& model, std::ostream& weights, std::ostream& biases) {
  weights << "source,target,weight\n";
  for (const auto& e : model.edges())
    weights << e.source.str() << ',' << e.target.str() << ',' << detail::format_double(e.weight) << '\n';
  biases << "gene,bias\n";
  for (const auto& [gene, m] : model.modules()) biases << gene.str() << ',' << detail::format_double(m.bias) << '\n';
}

/// The bias file declares the model's genes; weights may only reference them.
inline GrnnModel read_weights(std::istream& weights, std::istream& biases) {
  auto expect_header = [](std::istream& in, std::string_view want) {
    std::string line;
    if (!detail::read_line(in, line) || detail::trim(line) != want)
      throw ParseError(1, "expected header '" + std::string(want) + "'");
  };
  auto number = [](std::string_view s, std::size_t lineno) {
    auto v = detail::parse_double(s);
    if (!v || !std::isfinite(*v)) throw ParseError(lineno, "'" + std::string(s) + "' is not a finite number");
    return *v;
  };

  std::map<GeneId, Module> modules;
  expect_header(biases, "gene,bias");
  std::string line;
  std::size_t lineno = 1;
  while (detail::read_line(biases, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 2) throw ParseError(lineno, "bias row must have 2 fields");
    GeneId g = [&] {
      try {
        return GeneId(detail::trim(f[0]));
      } catch (const ValidationError& e) {
        throw ParseError(lineno, e.what());
      }
    }();
    if (modules.count(g)) throw ParseError(lineno, "duplicate gene '" + g.str() + "' in bias file");
    modules[g].bias = number(f[1], lineno);
  }

  expect_header(weights, "source,target,weight");
  lineno = 1;
  while (detail::read_line(weights, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 3) throw ParseError(lineno, "weight row must have 3 fields");
    const std::string src(detail::trim(f[0])), tgt(detail::trim(f[1]));
    auto known = [&](const std::string& name) {
      return std::find_if(modules.begin(), modules.end(), [&](auto& kv) { return kv.first.str() == name; });
    };
    auto it = known(tgt);
    if (it == modules.end()) throw ParseError(lineno, "unknown target gene '" + tgt + "'");
    if (known(src) == modules.end()) throw ParseError(lineno, "unknown source gene '" + src + "'");
    for (const auto& in : it->second.incoming)
      if (in.source.str() == src) throw ParseError(lineno, "duplicate weight " + src + " -> " + tgt);
    it->second.incoming.push_back({GeneId(src), number(f[2], lineno)});
  }

  GrnnModel model;
  for (auto& [g, m] : modules) model.set_module(g, std::move(m));
  return model;
}

// ---------------------------------------------------------------------------
// Seeded synthetic networks and trajectories
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_genes = 20;
  std::size_t attachment_edges_per_node = 2;
  std::pair<double, double> weight_range{-0.5, 0.5};
  std::pair<double, double> bias_range{0.0, 0.3};
  std::size_t n_timepoints = 43;
  double noise_sigma = 0.0;
  double drift_rate = 0.0;  // per minute
  std::uint64_t seed = 1;
  std::size_t n_tracks = 1;          // independent replicate trajectories
  double time_step_minutes = 10.0;
};

inline void validate(const SyntheticSpec& s) {
  if (s.n_genes == 0) throw ValidationError("n_genes must be positive");
  if (s.attachment_edges_per_node == 0) throw ValidationError("attachment_edges_per_node must be positive");
  if (!(s.weight_range.first < s.weight_range.second)) throw ValidationError("weight_range needs lo < hi");
  if (!(s.bias_range.first < s.bias_range.second)) throw ValidationError("bias_range needs lo < hi");
  if (s.n_timepoints < 2) throw ValidationError("n_timepoints must be at least 2");
  if (!(s.noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
  if (!(s.drift_rate >= 0.0)) throw ValidationError("drift_rate must be non-negative");
  if (s.n_tracks == 0) throw ValidationError("n_tracks must be positive");
  if (!(s.time_step_minutes > 0.0)) throw ValidationError("time_step_minutes must be positive");
}

struct SyntheticData {
  Grn grn;
  GrnnModel truth;         // weights in effect at time 0
  GrnnModel drift_target;  // weights approached as drift saturates
  std::vector<GeneId> exogenous;  // unregulated genes, driven by fresh uniform draws
  ExpressionDataset data;
};

/// Preferential-attachment regulatory graph with seeded ground truth and
/// trajectories. Each new gene links to min(m, existing) distinct earlier
/// genes chosen with probability proportional to their current degree; each
/// link points new->old or old->new with probability 1/2. Genes with no
/// regulators are exogenous inputs re-drawn uniformly from [0, 1) at every
/// time step; every other gene follows x(t+1) = ReLU(W(t) x(t) + b) with
/// multiplicative noise x (1 + N(0, sigma)) clamped at 0. Under drift,
/// W(t) = (1 - a) W0 + a W1 with a = min(1, drift_rate * minutes).
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  detail::Rng rng(spec.seed);
  const std::size_t n = spec.n_genes;

  std::size_t width = 1;
  for (std::size_t v = n - 1; v >= 10; v /= 10) ++width;
  std::vector<GeneId> names;
  for (std::size_t i = 0; i < n; ++i) {
    std::string digits = std::to_string(i);
    names.emplace_back("g" + std::string(width - digits.size(), '0') + digits);
  }

  std::vector<std::pair<std::size_t, std::size_t>> links;  // (source, target)
  std::vector<std::size_t> endpoints;                      // one entry per unit of degree
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t k = std::min(spec.attachment_edges_per_node, v);
    std::vector<std::size_t> chosen;
    while (chosen.size() < k) {
      const std::size_t u = endpoints.empty() ? rng.below(v) : endpoints[rng.below(endpoints.size())];
      if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
    }
    for (auto u : chosen) {
      if (rng.uniform() < 0.5)
        links.emplace_back(v, u);
      else
        links.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }

  std::vector<Edge> edges;
  for (auto [s, t] : links) edges.push_back({names[s], names[t], std::nullopt});
  SyntheticData out;
  out.grn = Grn(names, std::move(edges));

  // Parameters are drawn in canonical edge order so they are independent of
  // the attachment sequence above.
  std::vector<Module> w0(n), w1(n);
  for (std::size_t g = 0; g < n; ++g) w0[g].bias = w1[g].bias = rng.uniform(spec.bias_range.first, spec.bias_range.second);
  for (const auto& e : out.grn.edges())
    w0[out.grn.require_index(e.target)].incoming.push_back(
        {e.source, rng.uniform(spec.weight_range.first, spec.weight_range.second)});
  for (const auto& e : out.grn.edges())
    w1[out.grn.require_index(e.target)].incoming.push_back(
        {e.source, rng.uniform(spec.weight_range.first, spec.weight_range.second)});
  for (std::size_t g = 0; g < n; ++g) {
    out.truth.set_module(names[g], w0[g]);
    out.drift_target.set_module(names[g], w1[g]);
  }

  std::vector<char> exogenous(n, 0);
  for (std::size_t g = 0; g < n; ++g)
    if (out.grn.predecessors(g).empty()) {
      exogenous[g] = 1;
      out.exogenous.push_back(names[g]);
    }

  const CompiledNetwork start(names, out.truth), end(names, out.drift_target);
  const std::size_t T = spec.n_timepoints, tracks = spec.n_tracks, cols = T * tracks;
  std::vector<double> values(n * cols);
  std::vector<SampleMeta> samples;
  CompiledNetwork current = start;
  std::vector<double> x(n), next(n);
  for (std::size_t r = 0; r < tracks; ++r) {
    for (std::size_t g = 0; g < n; ++g) x[g] = rng.uniform();
    for (std::size_t t = 0; t < T; ++t) {
      const double minutes = static_cast<double>(t) * spec.time_step_minutes;
      if (t > 0) {
        const double prev = minutes - spec.time_step_minutes;
        const double a = std::min(1.0, spec.drift_rate * prev);
        const CompiledNetwork* net = &start;
        if (spec.drift_rate > 0.0) {
          for (std::size_t g = 0; g < n; ++g)
            for (std::size_t i = 0; i < current.incoming()[g].size(); ++i)
              current.incoming()[g][i].weight =
                  (1.0 - a) * start.incoming()[g][i].weight + a * end.incoming()[g][i].weight;
          net = &current;
        }
        net->step(x, next);
        for (std::size_t g = 0; g < n; ++g) {
          if (exogenous[g]) {
            next[g] = rng.uniform();
            continue;
          }
          if (spec.noise_sigma > 0.0) next[g] = std::max(0.0, next[g] * (1.0 + rng.normal(0.0, spec.noise_sigma)));
          if (!std::isfinite(next[g]))
            throw NumericError("synthetic trajectory diverged at gene '" + names[g].str() + "'");
        }
        x.swap(next);
      }
      const std::size_t col = r * T + t;
      for (std::size_t g = 0; g < n; ++g) values[g * cols + col] = x[g];
      SampleMeta meta{minutes, "synthetic", static_cast<int>(r + 1), {}};
      meta.label = "synthetic:" + std::to_string(r + 1) + ":" + detail::format_short(minutes);
      samples.push_back(std::move(meta));
    }
  }
  out.data = ExpressionDataset(names, std::move(samples), std::move(values));
  return out;
}

}  // namespace grnn
