// grnn: command-line pipelines over the grnn library.
// Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.
// Errors are reported on stderr as a single JSON object.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "grnn/grnn.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using grnn::detail::format_double;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw grnn::IoError("cannot open '" + path + "' for reading");
  return in;
}

grnn::Grn load_grn(const std::string& path) {
  auto in = open_input(path);
  return grnn::parse_edge_list(in);
}

/// Expression CSV, or a series matrix when the file starts with '!'.
grnn::ExpressionDataset load_expression(const std::string& path) {
  auto in = open_input(path);
  if (in.peek() == '!') return grnn::parse_geo_series_matrix(in).dataset;
  return grnn::parse_expression_csv(in);
}

grnn::GrnnModel load_model(const std::string& weights, const std::string& biases) {
  auto w = open_input(weights);
  auto b = open_input(biases);
  return grnn::read_weights(w, b);
}

struct Output {
  std::string dir = ".";
  bool svg = false;

  void prepare() const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw grnn::IoError("cannot create output directory '" + dir + "': " + ec.message());
  }
  void write(const std::string& name, const std::string& content) const {
    const auto path = fs::path(dir) / name;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw grnn::IoError("cannot write '" + path.string() + "'");
  }
  void plot(const std::string& name, const std::function<std::string()>& render) const {
    if (svg) write(name, render());
  }
};

std::string model_weights_csv(const grnn::GrnnModel& m, std::string* biases) {
  std::ostringstream w, b;
  grnn::write_weights(m, w, b);
  if (biases) *biases = b.str();
  return w.str();
}

void write_model(const Output& out, const std::string& stem, const grnn::GrnnModel& m) {
  std::string biases;
  out.write(stem + "weights.csv", model_weights_csv(m, &biases));
  out.write(stem + "biases.csv", biases);
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct Common {
  Output out;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

void add_output(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out.dir, "Output directory")->envname("GRNN_OUT_DIR")->capture_default_str();
  sub->add_flag("--svg", c.out.svg, "Also write SVG renderings of the report tables");
}

void add_seed(CLI::App* sub, Common& c, bool required = true) {
  auto* opt = sub->add_option("--seed", c.seed, "Master seed (64-bit unsigned)");
  if (required) opt->required();
}

void add_workers(CLI::App* sub, Common& c) {
  sub->add_option("--workers", c.workers, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::string pair_default(const std::pair<double, double>& p) {
  return "[" + grnn::detail::format_short(p.first) + ", " + grnn::detail::format_short(p.second) + "]";
}

struct TrainArgs {
  grnn::TrainSpec spec;
  std::string pairing = "next";
  std::optional<double> min_design_eigenvalue;
  std::size_t log_every = 0;

  void add(CLI::App* sub, bool with_log = false) {
    sub->add_option("--lr", spec.learning_rate, "Gradient descent learning rate")->capture_default_str();
    sub->add_option("--epochs", spec.epochs, "Maximum epochs per module")->capture_default_str();
    sub->add_option("--init-range", spec.init_range, "Uniform initialisation interval LO HI")
        ->default_str(pair_default(spec.init_range));
    sub->add_option("--epsilon", spec.convergence_epsilon, "Early stop threshold on MSE change and squared gradient; 0 disables")
        ->capture_default_str();
    sub->add_option("--restarts", spec.restarts, "Seeded initialisations per module; the lowest MSE wins")
        ->capture_default_str();
    sub->add_option("--pairing", pairing, "Sample pairing: next (t -> t+1 within a track) or same (steady state)")
        ->check(CLI::IsMember({"next", "same"}))
        ->capture_default_str();
    sub->add_option("--min-design-eigenvalue", min_design_eigenvalue,
                    "Report modules whose active-region design eigenvalue falls below this as failures");
    if (with_log) sub->add_option("--log-every", log_every, "Write training_log.csv every N epochs; 0 disables")->capture_default_str();
  }

  grnn::ExtractOptions options(const Common& c) const {
    grnn::ExtractOptions o;
    o.pairing = pairing == "same" ? grnn::Pairing::SameTimepoint : grnn::Pairing::NextTimepoint;
    o.workers = c.workers;
    o.log_every = log_every;
    o.min_design_eigenvalue = min_design_eigenvalue;
    return o;
  }
};

std::string failures_csv(const std::map<grnn::GeneId, std::string>& failures, const std::string& label = "") {
  std::ostringstream o;
  for (const auto& [gene, msg] : failures) {
    if (!label.empty()) o << label << ',';
    o << gene.str() << ",\"" << msg << "\"\n";
  }
  return o.str();
}

void warn_failures(std::size_t count) {
  if (count) std::cerr << json_text({{"warning", std::to_string(count) + " module fit(s) failed; see failures.csv"}});
}

grnn::svg::Box box(const std::string& label, std::vector<double> v) { return {label, grnn::five_number(std::move(v))}; }

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void run_gen_synthetic(const grnn::SyntheticSpec& spec, const Common& c) {
  const auto s = grnn::generate_synthetic(spec);
  std::ostringstream edges, expr;
  grnn::write_edge_list(s.grn, edges);
  grnn::write_expression_csv(s.data, expr);
  c.out.write("grn.tsv", edges.str());
  c.out.write("expression.csv", expr.str());
  write_model(c.out, "truth_", s.truth);
  if (spec.drift_rate > 0.0) write_model(c.out, "drift_target_", s.drift_target);
  std::ostringstream exo;
  exo << "gene\n";
  for (const auto& g : s.exogenous) exo << g.str() << '\n';
  c.out.write("exogenous.csv", exo.str());
  c.out.plot("expression.svg", [&] {
    std::vector<grnn::svg::Series> series;
    const auto tracks = s.data.tracks();
    const auto& first = tracks.begin()->second;
    for (std::size_t g = 0; g < std::min<std::size_t>(8, s.data.gene_count()); ++g) {
      grnn::svg::Series line{s.data.genes()[g].str(), {}, {}};
      for (auto col : first) {
        line.x.push_back(*s.data.samples()[col].time_minutes);
        line.y.push_back(s.data.value(g, col));
      }
      series.push_back(std::move(line));
    }
    return grnn::svg::line_plot("Synthetic expression, first track", "minutes", "level", series);
  });
}

void run_extract_weights(const std::string& grn_path, const std::string& expr_path, const TrainArgs& t,
                         const Common& c) {
  auto spec = t.spec;
  spec.seed = c.seed;
  const auto r = grnn::extract_grnn(load_grn(grn_path), load_expression(expr_path), spec, t.options(c));
  write_model(c.out, "", r.model);
  std::ostringstream mods;
  mods << "target,mse,design_eigenvalue\n";
  for (const auto& [g, mse] : r.mse)
    mods << g.str() << ',' << format_double(mse) << ',' << format_double(r.design_eigenvalue.at(g)) << '\n';
  c.out.write("modules.csv", mods.str());
  c.out.write("failures.csv", "target,message\n" + failures_csv(r.failures));
  if (t.log_every) {
    std::ostringstream log;
    log << "epoch,target,mse\n";
    for (const auto& e : r.log) log << e.epoch << ',' << e.target.str() << ',' << format_double(e.mse) << '\n';
    c.out.write("training_log.csv", log.str());
  }
  warn_failures(r.failures.size());
}

grnn::WindowedResult windowed(const std::string& grn_path, const std::string& expr_path, grnn::WindowOptions win,
                              const TrainArgs& t, const Common& c) {
  auto spec = t.spec;
  spec.seed = c.seed;
  return grnn::extract_windowed(load_grn(grn_path), load_expression(expr_path), win, spec, t.options(c));
}

void write_configs(const Output& out, const grnn::WindowedResult& r) {
  std::ostringstream index, failures;
  index << "label,window_start_minutes,window_samples,weights_file,biases_file\n";
  failures << "label,target,message\n";
  for (std::size_t i = 0; i < r.configs.size(); ++i) {
    const auto& cfg = r.configs[i];
    write_model(out, "configs/" + cfg.label + "_", cfg.model);
    index << cfg.label << ',' << format_double(cfg.window_start_minutes) << ',' << cfg.window_length_samples
          << ",configs/" << cfg.label << "_weights.csv,configs/" << cfg.label << "_biases.csv\n";
    failures << failures_csv(r.failures[i], cfg.label);
  }
  out.write("configs.csv", index.str());
  out.write("failures.csv", failures.str());
}

std::size_t failure_count(const grnn::WindowedResult& r) {
  std::size_t n = 0;
  for (const auto& f : r.failures) n += f.size();
  return n;
}

void run_extract_windowed(const std::string& grn_path, const std::string& expr_path, const grnn::WindowOptions& win,
                          const TrainArgs& t, const Common& c) {
  const auto r = windowed(grn_path, expr_path, win, t, c);
  write_configs(c.out, r);
  warn_failures(failure_count(r));
}

std::map<grnn::GeneId, double> parse_inputs(const std::vector<std::string>& items) {
  std::map<grnn::GeneId, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw grnn::ValidationError("input '" + item + "' must be GENE=LEVEL");
    const auto level = grnn::detail::parse_double(item.substr(eq + 1));
    if (!level) throw grnn::ValidationError("input '" + item + "' has a non-numeric level");
    out[grnn::GeneId(item.substr(0, eq))] = *level;
  }
  return out;
}

void run_simulate(const std::string& weights, const std::string& biases, const std::vector<std::string>& inputs,
                  std::size_t depth, grnn::StimulusSpec stim, const Common& c) {
  const auto model = load_model(weights, biases);
  stim.inputs = parse_inputs(inputs);
  stim.seed = c.seed;
  std::vector<grnn::GeneId> input_genes;
  for (const auto& [g, v] : stim.inputs) input_genes.push_back(g);
  const auto subnet = grnn::expand_layers(grnn::grn_from_model(model), input_genes, depth);
  const auto traj = grnn::run_forward(model, subnet, stim, c.workers);
  std::ostringstream o;
  o << "gene,layer";
  for (std::size_t t = 0; t < traj.columns; ++t) o << ",t" << t;
  o << '\n';
  for (std::size_t g = 0; g < traj.genes.size(); ++g) {
    o << traj.genes[g].str() << ',' << *subnet.layer_of(traj.genes[g]);
    for (double v : traj.row(g)) o << ',' << format_double(v);
    o << '\n';
  }
  c.out.write("trajectory.csv", o.str());
  c.out.plot("trajectory.svg", [&] {
    std::vector<grnn::svg::Series> series;
    for (std::size_t g = 0; g < std::min<std::size_t>(10, traj.genes.size()); ++g) {
      grnn::svg::Series s{traj.genes[g].str(), {}, {}};
      for (std::size_t t = 0; t < traj.columns; ++t) {
        s.x.push_back(static_cast<double>(t));
        s.y.push_back(traj.value(g, t));
      }
      series.push_back(std::move(s));
    }
    return grnn::svg::line_plot("Forward simulation", "step", "level", series);
  });
}

void run_search(const std::string& grn_path, const std::vector<std::string>& input_genes, std::optional<std::size_t> input_size,
                std::size_t depth, grnn::ProfileOptions popts, bool seed_given, const Common& c) {
  const auto grn = load_grn(grn_path);
  if (input_genes.empty() == !input_size)
    throw grnn::ValidationError("give exactly one of --input-genes and --input-size");
  if (!input_genes.empty()) {
    std::vector<grnn::GeneId> ids(input_genes.begin(), input_genes.end());
    const auto net = grnn::expand_layers(grn, ids, depth);
    std::ostringstream o;
    o << "gene,layer\n";
    for (std::size_t k = 0; k < net.layers.size(); ++k)
      for (const auto& g : net.layers[k]) o << g.str() << ',' << k << '\n';
    c.out.write("subnetwork.csv", o.str());
    return;
  }
  if (!seed_given) throw grnn::ValidationError("--seed is required with --input-size");
  popts.seed = c.seed;
  popts.workers = c.workers;
  const auto p = grnn::profile_layers(grn, *input_size, depth, popts);
  std::ostringstream o;
  o << (p.cumulative ? "layer,mean_cumulative_count\n" : "layer,mean_count\n");
  for (std::size_t k = 0; k < p.mean_count_per_layer.size(); ++k)
    o << k << ',' << format_double(p.mean_count_per_layer[k]) << '\n';
  c.out.write("layers.csv", o.str());
  c.out.plot("layers.svg", [&] {
    grnn::svg::Series s{"mean genes", {}, {}};
    for (std::size_t k = 0; k < p.mean_count_per_layer.size(); ++k) {
      s.x.push_back(static_cast<double>(k));
      s.y.push_back(p.mean_count_per_layer[k]);
    }
    return grnn::svg::line_plot("Subnetwork layer sizes", "layer", "genes", {s});
  });
}

void run_sparsity(const std::string& expr_path, double threshold, const std::string& condition, const Common& c) {
  const auto data = load_expression(expr_path);
  std::map<std::string, double> r;
  if (condition.empty()) r = grnn::sparsity(data, threshold);
  else r[condition] = grnn::sparsity(data, threshold, condition);
  std::ostringstream o;
  o << "condition,sparsity\n";
  for (const auto& [cond, s] : r) o << cond << ',' << format_double(s) << '\n';
  c.out.write("sparsity.csv", o.str());
  std::cout << o.str();
}

void run_choices(std::uint64_t n, std::uint64_t k, bool unordered, bool exact, const Common& c) {
  const auto r = grnn::count_output_choices(n, k, !unordered, exact);
  json j{{"candidates", n}, {"required", k}, {"ordered", !unordered}, {"log10", r.log10}};
  if (r.exact) j["exact"] = r.exact->str();
  c.out.write("choices.json", json_text(j));
  std::cout << "log10 = " << grnn::detail::format_short(std::round(r.log10 * 100.0) / 100.0) << " (" << format_double(r.log10)
            << ")\n";
}

void run_plasticity_input(const std::string& grn_path, const std::string& expr_path,
                          const std::vector<std::string>& conditions, const TrainArgs& t,
                          grnn::PlasticityOptions popts, const Common& c) {
  auto spec = t.spec;
  spec.seed = c.seed;
  popts.seed = c.seed;
  const auto rep = grnn::input_plasticity(load_grn(grn_path), load_expression(expr_path), conditions, spec, popts,
                                          t.options(c));
  std::ostringstream edges;
  edges << "source,target,distance,probability\n";
  for (const auto& e : rep.edges)
    edges << e.source.str() << ',' << e.target.str() << ',' << format_double(e.distance) << ','
          << format_double(e.probability) << '\n';
  c.out.write("edges.csv", edges.str());
  std::ostringstream altered;
  altered << "grouping,count,ratio_percent\n";
  for (const auto& row : rep.altered)
    altered << row.grouping << ',' << row.count << ',' << format_double(row.ratio_percent) << '\n';
  c.out.write("altered.csv", altered.str());
  json j{{"conditions", rep.conditions}, {"threshold", rep.threshold}, {"edges", rep.edges.size()}};
  if (rep.beta) j["beta"] = {{"alpha", rep.beta->alpha}, {"beta", rep.beta->beta}};
  else j["beta"] = nullptr;
  if (!rep.beta_note.empty()) j["beta_note"] = rep.beta_note;
  c.out.write("plasticity.json", json_text(j));
  c.out.plot("plasticity.svg", [&] {
    std::vector<double> d, p;
    for (const auto& e : rep.edges) {
      d.push_back(e.distance);
      p.push_back(e.probability);
    }
    if (d.empty()) return grnn::svg::box_plot("Edge plasticity", "value", {});
    return grnn::svg::box_plot("Edge plasticity", "value", {box("distance", d), box("probability", p)});
  });
}

void run_plasticity_temporal(const std::string& grn_path, const std::string& expr_path, const grnn::WindowOptions& win,
                             const TrainArgs& t, const Common& c) {
  const auto r = windowed(grn_path, expr_path, win, t, c);
  write_configs(c.out, r);
  const auto series = grnn::temporal_correlation_series(r.configs);
  std::ostringstream o;
  o << "label,window_start_minutes,deviation\n";
  for (std::size_t i = 0; i < series.points.size(); ++i)
    o << series.points[i].label << ',' << format_double(r.configs[i].window_start_minutes) << ','
      << format_double(series.points[i].deviation) << '\n';
  c.out.write("deviation.csv", o.str());
  c.out.write("temporal.json",
              json_text({{"configs", r.configs.size()}, {"common_edges", series.common_edges}, {"dropped_edges", series.dropped_edges}}));
  c.out.plot("deviation.svg", [&] {
    grnn::svg::Series s{"1 - r(W_0, W_t)", {}, {}};
    for (std::size_t i = 0; i < series.points.size(); ++i) {
      s.x.push_back(r.configs[i].window_start_minutes);
      s.y.push_back(series.points[i].deviation);
    }
    return grnn::svg::line_plot("Weight deviation from the first window", "window start (minutes)", "deviation", {s});
  });
  warn_failures(failure_count(r));
}

void run_energy(std::uint64_t n, const std::vector<std::string>& compare, const Common& c) {
  std::vector<grnn::EnergyProfile> rows{grnn::grnn_power(n)};
  for (const auto& name : compare) {
    const auto s = grnn::parse_substrate(name);
    if (s != grnn::Substrate::GRNN) rows.push_back(grnn::silicon_power(n, s));
  }
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream o;
  o << "substrate,units,p_ex_fw,p_tra_fw,p_total_fw,p_total_pw,p_total_w\n";
  for (const auto& p : rows) {
    o << grnn::to_string(p.substrate) << ',' << p.n_units << ',' << opt(p.p_ex_fw()) << ',' << opt(p.p_tra_fw()) << ','
      << format_double(p.p_total_fw()) << ',' << format_double(p.p_total_pw()) << ',' << format_double(p.p_total_watts())
      << '\n';
    std::cout << grnn::to_string(p.substrate) << " x " << p.n_units << ": "
              << grnn::detail::format_short(std::round(p.p_total_pw() * 1e4) / 1e4) << " pW\n";
  }
  c.out.write("energy.csv", o.str());
}

void run_complexity(const std::string& grn_path, const std::string& ctm_path, const std::string& ctm_name, std::size_t block,
                    const Common& c) {
  const auto grn = load_grn(grn_path);
  auto ctm = [&] {
    if (ctm_path.empty()) return grnn::CtmTable(block);
    auto in = open_input(ctm_path);
    return grnn::CtmTable::from_csv(in, block, ctm_name);
  }();
  const auto score = grnn::complexity(grn, ctm);
  c.out.write("complexity.json", json_text({{"genes", grn.size()},
                                            {"edges", grn.edge_count()},
                                            {"algorithmic", score.algorithmic},
                                            {"structural", score.structural},
                                            {"estimator_id", score.estimator_id}}));
  const auto bc = grnn::betweenness_centrality(grn, c.workers);
  std::ostringstream o;
  o << "gene,betweenness\n";
  for (std::size_t i = 0; i < grn.size(); ++i) o << grn.gene(i).str() << ',' << format_double(bc[i]) << '\n';
  c.out.write("betweenness.csv", o.str());
}

std::vector<grnn::WeightConfig> load_configs(const std::string& index_path) {
  auto in = open_input(index_path);
  const fs::path base = fs::path(index_path).parent_path();
  std::vector<grnn::WeightConfig> out;
  std::string line;
  std::size_t lineno = 0;
  while (grnn::detail::read_line(in, line)) {
    ++lineno;
    if (lineno == 1 || grnn::detail::trim(line).empty()) continue;
    const auto f = grnn::detail::split(line, ',');
    if (f.size() != 5) throw grnn::ParseError(lineno, "config index row must have 5 fields");
    const auto start = grnn::detail::parse_double(f[1]);
    if (!start) throw grnn::ParseError(lineno, "bad window start '" + std::string(f[1]) + "'");
    out.push_back({std::string(f[0]), *start, static_cast<std::size_t>(std::stoull(std::string(f[2]))),
                   load_model((base / std::string(f[3])).string(), (base / std::string(f[4])).string())});
  }
  if (out.empty()) throw grnn::ValidationError("config index '" + index_path + "' lists no configs");
  return out;
}

void run_regress(const std::string& configs_path, const std::string& weights, const std::string& biases,
                 const std::string& input_gene, grnn::SweepOptions opts, const Common& c) {
  std::vector<grnn::WeightConfig> configs;
  if (!configs_path.empty()) {
    if (!weights.empty() || !biases.empty()) throw grnn::ValidationError("give --configs or --weights/--biases, not both");
    configs = load_configs(configs_path);
  } else {
    if (weights.empty() || biases.empty()) throw grnn::ValidationError("give --configs, or both --weights and --biases");
    configs.push_back({"W_0", 0.0, 0, load_model(weights, biases)});
  }
  opts.seed = c.seed;
  opts.workers = c.workers;
  const auto sweep = grnn::concentration_sweep(configs, grnn::GeneId(input_gene), opts);
  std::ostringstream s;
  s << "config,gene,concentration,response\n";
  for (const auto& r : sweep.records)
    s << r.config_label << ',' << r.gene.str() << ',' << format_double(r.concentration) << ',' << format_double(r.response)
      << '\n';
  c.out.write("sweep.csv", s.str());
  std::ostringstream failures;
  failures << "config,message\n";
  for (const auto& [label, msg] : sweep.failures) failures << label << ",\"" << msg << "\"\n";
  c.out.write("failures.csv", failures.str());
  if (sweep.records.empty()) throw grnn::ValidationError("no config produced sweep records; see failures.csv");

  const auto fits = grnn::fit_sweep(sweep.records);
  std::ostringstream f;
  f << "config,gene,a2,a1,a0,r_squared\n";
  for (const auto& q : fits)
    f << q.config_label << ',' << q.gene->str() << ',' << format_double(q.a2) << ',' << format_double(q.a1) << ','
      << format_double(q.a0) << ',' << (q.r_squared ? format_double(*q.r_squared) : std::string()) << '\n';
  c.out.write("fits.csv", f.str());

  const auto summary = grnn::coefficient_distribution(fits);
  std::ostringstream d;
  d << "config,coefficient,min,q1,median,q3,max,count\n";
  for (const auto& e : summary.entries)
    for (const auto& [name, v] : {std::pair{"a2", e.a2}, std::pair{"a1", e.a1}, std::pair{"a0", e.a0}})
      d << e.config_label << ',' << name << ',' << format_double(v.min) << ',' << format_double(v.q1) << ','
        << format_double(v.median) << ',' << format_double(v.q3) << ',' << format_double(v.max) << ',' << v.count << '\n';
  c.out.write("coefficients.csv", d.str());
  c.out.plot("a2.svg", [&] {
    std::vector<grnn::svg::Box> boxes;
    for (const auto& e : summary.entries) boxes.push_back({e.config_label, e.a2});
    return grnn::svg::box_plot("Quadratic coefficient a2 per config", "a2", boxes);
  });
}

void run_pca(const std::string& expr_path, std::size_t k, const grnn::PcaOptions& opts, const Common& c) {
  const auto data = load_expression(expr_path);
  const std::size_t samples = data.sample_count(), features = data.gene_count();
  std::vector<double> matrix(samples * features);
  for (std::size_t g = 0; g < features; ++g)
    for (std::size_t s = 0; s < samples; ++s) matrix[s * features + g] = data.value(g, s);
  const auto r = grnn::pca(matrix, samples, features, k, opts);
  std::ostringstream ex, comp, proj;
  ex << "component,eigenvalue,explained\n";
  comp << "component";
  for (const auto& g : data.genes()) comp << ',' << g.str();
  comp << '\n';
  for (std::size_t i = 0; i < r.k; ++i) {
    ex << "PC" << i + 1 << ',' << format_double(r.eigenvalues[i]) << ',' << format_double(r.explained[i]) << '\n';
    comp << "PC" << i + 1;
    for (std::size_t f = 0; f < features; ++f) comp << ',' << format_double(r.components[i * features + f]);
    comp << '\n';
  }
  proj << "sample,condition";
  for (std::size_t i = 0; i < r.k; ++i) proj << ",PC" << i + 1;
  proj << '\n';
  for (std::size_t s = 0; s < samples; ++s) {
    proj << grnn::sample_label(data.samples()[s]) << ',' << data.samples()[s].condition;
    for (std::size_t i = 0; i < r.k; ++i) proj << ',' << format_double(r.projection(s, i));
    proj << '\n';
  }
  c.out.write("explained.csv", ex.str());
  c.out.write("components.csv", comp.str());
  c.out.write("projections.csv", proj.str());
  if (r.k >= 2)
    c.out.plot("projections.svg", [&] {
      std::map<std::string, grnn::svg::Series> by_condition;
      for (std::size_t s = 0; s < samples; ++s) {
        auto& series = by_condition[data.samples()[s].condition];
        series.name = data.samples()[s].condition;
        series.x.push_back(r.projection(s, 0));
        series.y.push_back(r.projection(s, 1));
      }
      std::vector<grnn::svg::Series> series;
      for (auto& [cond, s] : by_condition) series.push_back(std::move(s));
      return grnn::svg::line_plot("Samples on the first two components", "PC1", "PC2", series, false);
    });
}

void run_rates(const std::string& expr_path, const std::string& condition, std::optional<int> replicate, const Common& c) {
  const auto data = load_expression(expr_path);
  const auto tracks = data.tracks();
  const std::vector<std::size_t>* chosen = nullptr;
  for (const auto& [key, idx] : tracks)
    if ((condition.empty() || key.first == condition) && (!replicate || key.second == *replicate)) {
      if (chosen) throw grnn::ValidationError("several condition/replicate tracks match; select one with --condition and --replicate");
      chosen = &idx;
    }
  if (!chosen) throw grnn::ValidationError("no condition/replicate track matches the selection");
  const auto r = grnn::expression_rate(data.select_samples(*chosen));
  std::ostringstream o;
  o << "gene";
  for (std::size_t i = 0; i < r.intervals(); ++i) o << ",from_" << grnn::detail::format_short(r.interval_start[i]);
  o << '\n';
  for (std::size_t g = 0; g < r.genes.size(); ++g) {
    o << r.genes[g].str();
    for (std::size_t i = 0; i < r.intervals(); ++i) o << ',' << format_double(r.rate(g, i));
    o << '\n';
  }
  c.out.write("rates.csv", o.str());
  auto extreme = [](const std::optional<grnn::RateExtreme>& e) -> json {
    if (!e) return nullptr;
    return {{"gene", e->gene.str()}, {"from_minutes", e->from_minutes}, {"to_minutes", e->to_minutes}, {"rate", e->rate}};
  };
  c.out.write("rate_extremes.json",
              json_text({{"min", extreme(r.min)}, {"max", extreme(r.max)}, {"max_magnitude", extreme(r.max_magnitude)}}));
}

// ---------------------------------------------------------------------------
// Resolved-config snapshot
// ---------------------------------------------------------------------------

std::string toml_value(const std::string& v) {
  if (v.front() == '[' || v == "true" || v == "false" || grnn::detail::parse_double(v)) return v;
  return json(v).dump();
}

/// Every option of the subcommand that ran, with the value it ran with, as a
/// TOML section that --config accepts.
std::string resolved_config(const CLI::App& sub) {
  std::ostringstream o;
  o << "[" << sub.get_name() << "]\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    std::string value;
    if (opt->get_type_size() == 0) {
      value = opt->count() ? "true" : "false";
    } else if (opt->count()) {
      const auto& r = opt->results();
      if (r.size() == 1) {
        value = r.front();
      } else {
        value = "[";
        for (std::size_t i = 0; i < r.size(); ++i) value += (i ? ", " : "") + toml_value(r[i]);
        value += "]";
      }
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty()) o << opt->get_lnames().front() << " = " << toml_value(value) << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

int report(const std::string& kind, const std::string& message, int code, std::optional<std::size_t> line = {}) {
  json j{{"error", {{"kind", kind}, {"message", message}}}};
  if (line) j["error"]["line"] = *line;
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gene regulatory networks as pre-trained neural networks: extraction, simulation and analysis"};
  app.set_config("--config", "", "TOML file of option values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", "grnn 1.0.0");

  Common common;
  TrainArgs train;
  std::string grn_path, expr_path, weights_path, biases_path, condition;

  auto grn_opt = [&](CLI::App* sub) { sub->add_option("--grn", grn_path, "Edge list (TSV: source, target, optional sign)")->required(); };
  auto expr_opt = [&](CLI::App* sub) {
    sub->add_option("--expression", expr_path, "Expression CSV or series-matrix file")->required();
  };
  auto model_opts = [&](CLI::App* sub, bool required) {
    auto* w = sub->add_option("--weights", weights_path, "Weights CSV (source,target,weight)");
    auto* b = sub->add_option("--biases", biases_path, "Biases CSV (gene,bias)");
    if (required) {
      w->required();
      b->required();
    }
  };

  // gen-synthetic
  grnn::SyntheticSpec syn;
  auto* gen = app.add_subcommand("gen-synthetic", "Seeded preferential-attachment network with ground-truth weights and trajectories");
  gen->add_option("--genes", syn.n_genes, "Number of genes")->capture_default_str();
  gen->add_option("--edges-per-node", syn.attachment_edges_per_node, "Attachment links per new gene")->capture_default_str();
  gen->add_option("--weight-range", syn.weight_range, "Ground-truth weight interval LO HI")
      ->default_str(pair_default(syn.weight_range));
  gen->add_option("--bias-range", syn.bias_range, "Ground-truth bias interval LO HI")
      ->default_str(pair_default(syn.bias_range));
  gen->add_option("--timepoints", syn.n_timepoints, "Samples per track")->capture_default_str();
  gen->add_option("--tracks", syn.n_tracks, "Independent replicate tracks")->capture_default_str();
  gen->add_option("--time-step", syn.time_step_minutes, "Minutes between samples")->capture_default_str();
  gen->add_option("--noise", syn.noise_sigma, "Multiplicative noise sigma")->capture_default_str();
  gen->add_option("--drift", syn.drift_rate, "Weight drift per minute")->capture_default_str();
  add_seed(gen, common);
  add_output(gen, common);

  // extract-weights
  auto* ext = app.add_subcommand("extract-weights", "Fit one perceptron module per gene of a GRN against expression data");
  grn_opt(ext);
  expr_opt(ext);
  train.add(ext, true);
  add_seed(ext, common);
  add_workers(ext, common);
  add_output(ext, common);

  // extract-windowed / plasticity-temporal
  grnn::WindowOptions win;
  auto window_opts = [&](CLI::App* sub) {
    sub->add_option("--window", win.window_samples, "Timepoints per window")->capture_default_str();
    sub->add_option("--stride", win.stride_samples, "Timepoints between window starts")->capture_default_str();
    sub->add_option("--condition", win.condition, "Condition whose tracks are windowed (required when several exist)");
  };
  auto* extw = app.add_subcommand("extract-windowed", "Sliding-window extraction producing W_<minutes> weight configs");
  grn_opt(extw);
  expr_opt(extw);
  window_opts(extw);
  train.add(extw);
  add_seed(extw, common);
  add_workers(extw, common);
  add_output(extw, common);

  // simulate
  std::vector<std::string> inputs;
  std::size_t depth = 10;
  grnn::StimulusSpec stim;
  auto* sim = app.add_subcommand("simulate", "Forward-propagate clamped input levels through a GRNN subnetwork");
  model_opts(sim, true);
  sim->add_option("--inputs", inputs, "Clamped inputs as GENE=LEVEL")->required();
  sim->add_option("--depth", depth, "Maximum subnetwork depth from the inputs")->capture_default_str();
  sim->add_option("--steps", stim.steps, "Time steps")->capture_default_str();
  sim->add_option("--noise", stim.noise_sigma, "Multiplicative noise sigma; 0 gives one deterministic run")->capture_default_str();
  sim->add_option("--iterations", stim.iterations, "Noisy runs averaged")->capture_default_str();
  add_seed(sim, common);
  add_workers(sim, common);
  add_output(sim, common);

  // search
  std::vector<std::string> input_genes;
  std::optional<std::size_t> input_size;
  grnn::ProfileOptions profile;
  auto* search = app.add_subcommand("search", "Layered subnetworks reachable from input genes, or mean layer sizes over random inputs");
  grn_opt(search);
  search->add_option("--input-genes", input_genes, "Explicit input genes; writes subnetwork.csv");
  search->add_option("--input-size", input_size, "Random input-set size; writes layers.csv (needs --seed)");
  search->add_option("--depth", depth, "Maximum layer depth")->capture_default_str();
  search->add_option("--trials", profile.trials, "Random input sets drawn")->capture_default_str();
  search->add_flag("--cumulative", profile.cumulative, "Report cumulative reachable counts per depth");
  auto* search_seed = search->add_option("--seed", common.seed, "Master seed (64-bit unsigned)");
  add_workers(search, common);
  add_output(search, common);

  // sparsity
  double threshold = 0.0;
  auto* sp = app.add_subcommand("sparsity", "Fraction of genes active per condition");
  expr_opt(sp);
  sp->add_option("--threshold", threshold, "Mean level above which a gene counts as active")->required();
  sp->add_option("--condition", condition, "Single condition to report");
  add_output(sp, common);

  // choices
  std::uint64_t n_candidates = 0, n_required = 0;
  bool unordered = false, exact = false;
  auto* ch = app.add_subcommand("choices", "Count the ways to pick k output genes from n candidates");
  ch->add_option("--n", n_candidates, "Candidate genes")->required();
  ch->add_option("--k", n_required, "Required outputs")->required();
  ch->add_flag("--unordered", unordered, "Count combinations instead of ordered selections");
  ch->add_flag("--exact", exact, "Also compute the exact big-integer value");
  add_output(ch, common);

  // plasticity-input
  std::vector<std::string> conditions;
  grnn::PlasticityOptions popts;
  std::optional<double> fixed_threshold;
  auto* pin = app.add_subcommand("plasticity-input", "Condition-dependent weight plasticity with bootstrap probabilities");
  grn_opt(pin);
  expr_opt(pin);
  pin->add_option("--conditions", conditions, "Conditions compared, in report order")->required();
  pin->add_option("--resamples", popts.resamples, "Bootstrap re-extractions")->capture_default_str();
  pin->add_option("--plasticity-epsilon", popts.epsilon, "Distance above which a resample counts as plastic")->capture_default_str();
  pin->add_option("--threshold", fixed_threshold, "Altered-weight threshold; default is the permutation null quantile");
  pin->add_option("--permutations", popts.permutations, "Permutation null re-extractions")->capture_default_str();
  pin->add_option("--null-quantile", popts.null_quantile, "Quantile of the null distances used as threshold")->capture_default_str();
  train.add(pin);
  add_seed(pin, common);
  add_workers(pin, common);
  add_output(pin, common);

  // plasticity-temporal
  auto* ptemp = app.add_subcommand("plasticity-temporal", "Deviation of windowed weight configs from the first window");
  grn_opt(ptemp);
  expr_opt(ptemp);
  window_opts(ptemp);
  train.add(ptemp);
  add_seed(ptemp, common);
  add_workers(ptemp, common);
  add_output(ptemp, common);

  // energy
  std::uint64_t grnn_units = 0;
  std::vector<std::string> compare;
  auto* en = app.add_subcommand("energy", "Power draw of a GRNN and of silicon substrates at the same size");
  en->add_option("--grnn", grnn_units, "Number of gene-perceptrons (and silicon neurons compared)")->required();
  en->add_option("--compare", compare, "Silicon substrates: Spikey R2600X IntelMobile RTX2070");
  add_output(en, common);

  // complexity
  std::string ctm_path, ctm_name = "custom";
  std::size_t block = 4;
  auto* cx = app.add_subcommand("complexity", "Algorithmic and structural complexity of a GRN");
  grn_opt(cx);
  cx->add_option("--ctm", ctm_path, "Block complexity table CSV (pattern_hex,bits); default is the entropy surrogate");
  cx->add_option("--ctm-name", ctm_name, "Name stamped into the estimator id for --ctm")->capture_default_str();
  cx->add_option("--block", block, "Block size")->capture_default_str();
  add_workers(cx, common);
  add_output(cx, common);

  // regress
  std::string configs_path, input_gene;
  grnn::SweepOptions sweep;
  auto* rg = app.add_subcommand("regress", "Concentration sweep with quadratic fits per reached gene");
  rg->add_option("--configs", configs_path, "Config index CSV written by extract-windowed");
  model_opts(rg, false);
  rg->add_option("--input-gene", input_gene, "Gene whose level is swept")->required();
  rg->add_option("--concentrations", sweep.concentrations, "Input levels swept")->capture_default_str();
  rg->add_option("--steps", sweep.steps, "Time steps per run")->capture_default_str();
  rg->add_option("--noise", sweep.noise_sigma, "Multiplicative noise sigma")->capture_default_str();
  rg->add_option("--iterations", sweep.iterations, "Noisy runs averaged")->capture_default_str();
  rg->add_option("--depth", sweep.max_depth, "Maximum subnetwork depth")->capture_default_str();
  rg->add_option("--tail", sweep.tail_fraction, "Trailing fraction of steps averaged as the response")->capture_default_str();
  add_seed(rg, common);
  add_workers(rg, common);
  add_output(rg, common);

  // pca
  std::size_t components = 2;
  grnn::PcaOptions pca_opts;
  auto* pc = app.add_subcommand("pca", "Principal components of samples over genes");
  expr_opt(pc);
  pc->add_option("--k", components, "Components")->capture_default_str();
  pc->add_option("--tolerance", pca_opts.tolerance, "Power iteration tolerance")->capture_default_str();
  pc->add_option("--max-iterations", pca_opts.max_iterations, "Power iteration cap")->capture_default_str();
  add_output(pc, common);

  // rates
  std::optional<int> replicate;
  auto* rt = app.add_subcommand("rates", "Expression change per minute between consecutive samples of one track");
  expr_opt(rt);
  rt->add_option("--condition", condition, "Track condition (required when several exist)");
  rt->add_option("--replicate", replicate, "Track replicate (required when several exist)");
  add_output(rt, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 1);
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    common.out.prepare();
    common.out.write("resolved_config.toml", resolved_config(*active));
    const std::string name = active->get_name();
    if (name == "gen-synthetic") {
      syn.seed = common.seed;
      run_gen_synthetic(syn, common);
    } else if (name == "extract-weights") {
      run_extract_weights(grn_path, expr_path, train, common);
    } else if (name == "extract-windowed") {
      run_extract_windowed(grn_path, expr_path, win, train, common);
    } else if (name == "simulate") {
      run_simulate(weights_path, biases_path, inputs, depth, stim, common);
    } else if (name == "search") {
      run_search(grn_path, input_genes, input_size, depth, profile, search_seed->count() > 0, common);
    } else if (name == "sparsity") {
      run_sparsity(expr_path, threshold, condition, common);
    } else if (name == "choices") {
      run_choices(n_candidates, n_required, unordered, exact, common);
    } else if (name == "plasticity-input") {
      popts.threshold = fixed_threshold;
      run_plasticity_input(grn_path, expr_path, conditions, train, popts, common);
    } else if (name == "plasticity-temporal") {
      run_plasticity_temporal(grn_path, expr_path, win, train, common);
    } else if (name == "energy") {
      run_energy(grnn_units, compare, common);
    } else if (name == "complexity") {
      run_complexity(grn_path, ctm_path, ctm_name, block, common);
    } else if (name == "regress") {
      run_regress(configs_path, weights_path, biases_path, input_gene, sweep, common);
    } else if (name == "pca") {
      run_pca(expr_path, components, pca_opts, common);
    } else if (name == "rates") {
      run_rates(expr_path, condition, replicate, common);
    }
  } catch (const grnn::IoError& e) {
    return report(e.kind(), e.what(), 2);
  } catch (const grnn::ParseError& e) {
    return report(e.kind(), e.what(), 1, e.line() ? std::optional<std::size_t>(e.line()) : std::nullopt);
  } catch (const grnn::Error& e) {
    return report(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 0;
}
