#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grnn/core.hpp"
#include "grnn/detail/parallel.hpp"
#include "grnn/detail/text.hpp"

namespace grnn {

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

enum class Substrate { GRNN, Spikey, R2600X, IntelMobile, RTX2070 };

inline std::string_view to_string(Substrate s) {
  switch (s) {
    case Substrate::GRNN: return "GRNN";
    case Substrate::Spikey: return "Spikey";
    case Substrate::R2600X: return "R2600X";
    case Substrate::IntelMobile: return "IntelMobile";
    case Substrate::RTX2070: return "RTX2070";
  }
  return "?";
}

inline Substrate parse_substrate(std::string_view name) {
  for (auto s : {Substrate::GRNN, Substrate::Spikey, Substrate::R2600X, Substrate::IntelMobile, Substrate::RTX2070})
    if (to_string(s) == name) return s;
  throw ValidationError("unknown substrate '" + std::string(name) + "'");
}

/// Power values are held as integer attowatts so scaling in n is exact.
struct EnergyProfile {
  std::uint64_t n_units = 0;
  Substrate substrate = Substrate::GRNN;
  std::optional<std::int64_t> p_ex_aw;   // GRNN only: transcription
  std::optional<std::int64_t> p_tra_aw;  // GRNN only: translation
  std::int64_t p_total_aw = 0;

  static constexpr double kAttoToFemto = 1e-3;
  static constexpr double kAttoToWatt = 1e-18;

  double p_total_fw() const { return static_cast<double>(p_total_aw) * kAttoToFemto; }
  double p_total_pw() const { return static_cast<double>(p_total_aw) * 1e-6; }
  double p_total_watts() const { return static_cast<double>(p_total_aw) * kAttoToWatt; }
  std::optional<double> p_ex_fw() const {
    if (!p_ex_aw) return std::nullopt;
    return static_cast<double>(*p_ex_aw) * kAttoToFemto;
  }
  std::optional<double> p_tra_fw() const {
    if (!p_tra_aw) return std::nullopt;
    return static_cast<double>(*p_tra_aw) * kAttoToFemto;
  }
};

namespace energy {

/// Transcription power per gene-perceptron: 0.01 fW.
inline constexpr std::int64_t kGeneExpressionAw = 10;
/// Translation draws 75 parts for every 2 parts of transcription.
inline constexpr std::int64_t kTranslationParts = 75;
inline constexpr std::int64_t kTranscriptionParts = 2;

/// Per-neuron power of the silicon platforms, in attowatts
/// (Spikey 1.49e-6 W, R2600X 9.62e-4 W, Intel mobile 3.37e-4 W, RTX2070 3.18e-5 W).
inline std::int64_t silicon_unit_aw(Substrate s) {
  switch (s) {
    case Substrate::Spikey: return 1'490'000'000'000LL;
    case Substrate::R2600X: return 962'000'000'000'000LL;
    case Substrate::IntelMobile: return 337'000'000'000'000LL;
    case Substrate::RTX2070: return 31'800'000'000'000LL;
    case Substrate::GRNN: break;
  }
  throw ValidationError("substrate '" + std::string(to_string(s)) + "' is not a silicon platform");
}

inline std::int64_t checked_mul(std::int64_t a, std::uint64_t n) {
  std::int64_t out;
  if (n > static_cast<std::uint64_t>(INT64_MAX) || __builtin_mul_overflow(a, static_cast<std::int64_t>(n), &out))
    throw NumericError("power of " + std::to_string(n) + " units overflows the attowatt range");
  return out;
}

}  // namespace energy

/// P_ex = n * 0.01 fW, P_tra = 75/2 * P_ex, P_total = P_ex + P_tra.
/// Housekeeping energy is not included.
inline EnergyProfile grnn_power(std::uint64_t n_gene_perceptrons) {
  if (n_gene_perceptrons == 0) throw ValidationError("GRNN size must be positive");
  static_assert((energy::kGeneExpressionAw * energy::kTranslationParts) % energy::kTranscriptionParts == 0);
  EnergyProfile p;
  p.n_units = n_gene_perceptrons;
  p.substrate = Substrate::GRNN;
  p.p_ex_aw = energy::checked_mul(energy::kGeneExpressionAw, n_gene_perceptrons);
  p.p_tra_aw = energy::checked_mul(
      energy::kGeneExpressionAw * energy::kTranslationParts / energy::kTranscriptionParts, n_gene_perceptrons);
  p.p_total_aw = *p.p_ex_aw + *p.p_tra_aw;
  return p;
}

inline EnergyProfile silicon_power(std::uint64_t n_neurons, Substrate s) {
  if (n_neurons == 0) throw ValidationError("neuron count must be positive");
  EnergyProfile p;
  p.n_units = n_neurons;
  p.substrate = s;
  p.p_total_aw = energy::checked_mul(energy::silicon_unit_aw(s), n_neurons);
  return p;
}

inline EnergyProfile power(std::uint64_t n, Substrate s) {
  return s == Substrate::GRNN ? grnn_power(n) : silicon_power(n, s);
}

// ---------------------------------------------------------------------------
// Betweenness centrality
// ---------------------------------------------------------------------------

/// Exact unweighted directed betweenness (Brandes), endpoints excluded and
/// no normalisation. Self-loops do not affect shortest paths.
inline std::vector<double> betweenness_centrality(const Grn& grn, std::size_t workers = 1) {
  const std::size_t n = grn.size();
  std::vector<std::vector<double>> partial(n);
  detail::parallel_for(n, workers, [&](std::size_t s) {
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    std::vector<long> dist(n, -1);
    std::vector<std::size_t> order, queue{s};
    sigma[s] = 1.0;
    dist[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto v = queue[head];
      order.push_back(v);
      for (auto w : grn.successors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    auto& out = partial[s];
    out.assign(n, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) out[w] = delta[w];
    }
  });
  std::vector<double> bc(n, 0.0);
  for (const auto& p : partial)
    for (std::size_t v = 0; v < n; ++v) bc[v] += p[v];
  return bc;
}

// ---------------------------------------------------------------------------
// Complexity
// ---------------------------------------------------------------------------

struct ComplexityScore {
  double algorithmic = 0.0;
  double structural = 0.0;
  std::string estimator_id;
};

inline constexpr std::string_view kStructuralEstimator = "bc-deg-entropy";

/// Shannon entropy (bits) of q_i = s_i / sum(s) with
/// s_i = (B_i + 1/n^2) * k_i / (n - 1), k_i = in-degree + out-degree
/// ignoring self-loops. Terms are summed in sorted order so relabeling
/// the genes cannot change the result beyond betweenness round-off.
inline double structural_complexity(const Grn& grn) {
  const std::size_t n = grn.size();
  if (n < 2) throw ValidationError("structural complexity needs at least two genes");
  const auto bc = betweenness_centrality(grn);
  const double lambda = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (auto j : grn.successors(i)) k += j != i;
    for (auto j : grn.predecessors(i)) k += j != i;
    s[i] = (bc[i] + lambda) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  std::sort(s.begin(), s.end());
  double total = 0.0;
  for (double v : s) total += v;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double v : s)
    if (v > 0.0) {
      const double q = v / total;
      h -= q * std::log2(q);
    }
  return h;
}

/// Complexity (bits) assigned to a single square binary block.
class CtmTable {
public:
  /// Default surrogate: block_size^2 * H(density) + 1, H the binary entropy.
  explicit CtmTable(std::size_t block_size = 4) : block_size_(block_size) { check_block_size(block_size); }

  /// CSV rows `pattern_hex,bits`; optional header line. Patterns are the
  /// block's cells read row-major, most significant bit first.
  static CtmTable from_csv(std::istream& in, std::size_t block_size, std::string name = "table") {
    CtmTable t(block_size);
    t.name_ = std::move(name);
    t.table_.emplace();
    std::string line;
    std::size_t lineno = 0;
    while (detail::read_line(in, line)) {
      ++lineno;
      if (detail::trim(line).empty() || (lineno == 1 && line.rfind("pattern_hex", 0) == 0)) continue;
      const auto f = detail::split(line, ',');
      if (f.size() != 2) throw ParseError(lineno, "CTM row must be 'pattern_hex,bits'");
      std::uint64_t pattern = 0;
      const auto hex = detail::trim(f[0]);
      const auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), pattern, 16);
      if (hex.empty() || ec != std::errc{} || ptr != hex.data() + hex.size())
        throw ParseError(lineno, "bad pattern '" + std::string(hex) + "'");
      auto bits = detail::parse_double(f[1]);
      if (!bits || !std::isfinite(*bits) || *bits < 0.0) throw ParseError(lineno, "bad bit count");
      if (!t.table_->emplace(pattern, *bits).second) throw ParseError(lineno, "duplicate pattern " + std::string(hex));
    }
    return t;
  }

  std::size_t block_size() const noexcept { return block_size_; }

  std::string estimator_id() const {
    const auto b = std::to_string(block_size_);
    if (table_) return "bdm-ctm-" + name_ + "-b" + b;
    return "bdm-entropy-surrogate-b" + b;
  }

  double bits(std::uint64_t pattern) const {
    if (table_) {
      auto it = table_->find(pattern);
      if (it == table_->end()) throw ValidationError("CTM table has no entry for pattern " + hex(pattern));
      return it->second;
    }
    const double cells = static_cast<double>(block_size_ * block_size_);
    const double p = static_cast<double>(std::popcount(pattern)) / cells;
    double h = 0.0;
    if (p > 0.0 && p < 1.0) h = -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
    return cells * h + 1.0;
  }

  std::string hex(std::uint64_t pattern) const {
    const std::size_t digits = (block_size_ * block_size_ + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t i = 0; i < digits; ++i, pattern >>= 4) out[digits - 1 - i] = "0123456789abcdef"[pattern & 0xf];
    return out;
  }

private:
  static void check_block_size(std::size_t b) {
    if (b == 0 || b > 8) throw ValidationError("block size must lie in [1, 8]");
  }

  std::size_t block_size_;
  std::string name_;
  std::optional<std::map<std::uint64_t, double>> table_;
};

/// Block decomposition of the adjacency matrix (canonical gene order,
/// zero-padded to a multiple of the block size): the sum over distinct block
/// patterns of ctm(pattern) + log2(multiplicity). Depends on gene order, so
/// it is reproducible but not relabeling-invariant.
inline double algorithmic_complexity(const Grn& grn, const CtmTable& ctm = CtmTable(4)) {
  if (grn.size() == 0) throw ValidationError("algorithmic complexity needs at least one gene");
  const std::size_t b = ctm.block_size();
  const std::size_t n = grn.size(), padded = (n + b - 1) / b * b, nb = padded / b;
  std::map<std::uint64_t, std::size_t> counts;
  for (std::size_t bi = 0; bi < nb; ++bi)
    for (std::size_t bj = 0; bj < nb; ++bj) {
      std::uint64_t pattern = 0;
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t c = 0; c < b; ++c) {
          const std::size_t i = bi * b + r, j = bj * b + c;
          pattern = (pattern << 1) | static_cast<std::uint64_t>(i < n && j < n && grn.has_edge(i, j));
        }
      ++counts[pattern];
    }
  double score = 0.0;
  for (const auto& [pattern, mult] : counts) score += ctm.bits(pattern) + std::log2(static_cast<double>(mult));
  return score;
}

inline ComplexityScore complexity(const Grn& grn, const CtmTable& ctm = CtmTable(4)) {
  return {algorithmic_complexity(grn, ctm), structural_complexity(grn),
          ctm.estimator_id() + "+" + std::string(kStructuralEstimator)};
}

}  // namespace grnn
