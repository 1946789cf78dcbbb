#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "grnn/detail/random.hpp"
#include "grnn/metrics.hpp"

namespace grnn {
namespace {

using Rational = boost::multiprecision::cpp_rational;

GeneId id(const std::string& s) { return GeneId(s); }

std::string name(std::size_t i) {
  std::string s = std::to_string(i);
  return "v" + std::string(3 - s.size(), '0') + s;
}

Grn from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<GeneId> genes;
  for (std::size_t i = 0; i < n; ++i) genes.push_back(id(name(i)));
  std::vector<Edge> edges;
  for (auto [s, t] : pairs) edges.push_back({genes[s], genes[t], std::nullopt});
  return Grn(genes, edges);
}

Grn ring(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({i, (i + 1) % n});
  return from_pairs(n, p);
}

Grn erdos_renyi(std::size_t n, double prob, std::uint64_t seed, bool loops = false) {
  detail::Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((loops || i != j) && rng.uniform(0.0, 1.0) < prob) p.push_back({i, j});
  return from_pairs(n, p);
}

TEST(Energy, GrnnExamples) {
  const auto one = grnn_power(1);
  EXPECT_DOUBLE_EQ(*one.p_ex_fw(), 0.01);
  EXPECT_DOUBLE_EQ(*one.p_tra_fw(), 0.375);
  EXPECT_DOUBLE_EQ(one.p_total_fw(), 0.385);
  EXPECT_DOUBLE_EQ(grnn_power(100).p_total_fw(), 38.5);
  EXPECT_NEAR(grnn_power(129).p_total_pw(), 0.0497, 0.00005);
  EXPECT_LT(grnn_power(129).p_total_pw(), 0.05);
}

TEST(Energy, RatioAndLinearityExact) {
  for (std::uint64_t n : {1ull, 2ull, 7ull, 129ull, 1000ull, 4000ull}) {
    const auto p = grnn_power(n);
    EXPECT_EQ(*p.p_tra_aw * 2, *p.p_ex_aw * 75);
    EXPECT_EQ(p.p_total_aw, *p.p_ex_aw + *p.p_tra_aw);
    EXPECT_EQ(grnn_power(2 * n).p_total_aw, 2 * p.p_total_aw);
    for (auto s : {Substrate::Spikey, Substrate::R2600X, Substrate::IntelMobile, Substrate::RTX2070}) {
      EXPECT_EQ(silicon_power(2 * n, s).p_total_aw, 2 * silicon_power(n, s).p_total_aw);
      EXPECT_FALSE(silicon_power(n, s).p_ex_aw);
    }
  }
  EXPECT_THROW(grnn_power(0), ValidationError);
}

TEST(Energy, SiliconConstants) {
  EXPECT_DOUBLE_EQ(silicon_power(1, Substrate::Spikey).p_total_watts(), 1.49e-6);
  EXPECT_DOUBLE_EQ(silicon_power(1, Substrate::R2600X).p_total_watts(), 9.62e-4);
  EXPECT_DOUBLE_EQ(silicon_power(1, Substrate::IntelMobile).p_total_watts(), 3.37e-4);
  EXPECT_DOUBLE_EQ(silicon_power(1, Substrate::RTX2070).p_total_watts(), 3.18e-5);
  EXPECT_DOUBLE_EQ(silicon_power(100, Substrate::RTX2070).p_total_watts(), 3.18e-3);
  for (std::uint64_t n : {1ull, 50ull, 129ull}) {
    const double ratio = silicon_power(n, Substrate::R2600X).p_total_watts() / grnn_power(n).p_total_watts();
    EXPECT_NEAR(ratio / 2.5e12, 1.0, 0.01);
  }
  EXPECT_EQ(parse_substrate("RTX2070"), Substrate::RTX2070);
  EXPECT_THROW(parse_substrate("TPU"), ValidationError);
  EXPECT_THROW(power(static_cast<std::uint64_t>(1) << 62, Substrate::R2600X), NumericError);
}

TEST(Betweenness, ChainAndCycle) {
  EXPECT_EQ(betweenness_centrality(from_pairs(3, {{0, 1}, {1, 2}})), (std::vector<double>{0, 1, 0}));
  const auto c = betweenness_centrality(ring(4));
  for (double v : c) EXPECT_EQ(v, c[0]);
  // Each node mediates the pairs at distance 2 and 3 that cross it: 1 + 2.
  EXPECT_EQ(c[0], 3.0);
}

// All shortest paths enumerated explicitly; exact rational accumulation.
std::vector<Rational> brute_betweenness(const Grn& g) {
  const std::size_t n = g.size();
  std::vector<Rational> out(n, 0);
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
      std::vector<std::vector<std::size_t>> paths;
      std::vector<std::size_t> path{s};
      std::function<void(std::size_t)> walk = [&](std::size_t u) {
        if (u == t) {
          paths.push_back(path);
          return;
        }
        for (auto v : g.successors(u))
          if (dist[v] == dist[u] + 1 && static_cast<int>(path.size()) <= dist[t]) {
            path.push_back(v);
            walk(v);
            path.pop_back();
          }
      };
      walk(s);
      std::vector<std::size_t> through(n, 0);
      for (const auto& p : paths)
        for (std::size_t i = 1; i + 1 < p.size(); ++i) ++through[p[i]];
      for (std::size_t v = 0; v < n; ++v)
        if (through[v]) out[v] += Rational(through[v], paths.size());
    }
  }
  return out;
}

TEST(Betweenness, MatchesBruteForceEnumeration) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    detail::Rng rng(seed);
    const std::size_t n = 2 + rng.below(11);
    const auto g = erdos_renyi(n, rng.uniform(0.1, 0.6), seed + 1000);
    const auto fast = betweenness_centrality(g, 1 + seed % 3);
    const auto slow = brute_betweenness(g);
    for (std::size_t v = 0; v < n; ++v) {
      const double exact = static_cast<double>(slow[v]);
      EXPECT_NEAR(fast[v], exact, 1e-12 * std::max(1.0, exact)) << "seed " << seed << " node " << v;
    }
  }
}

// Hub with a two-way edge to every leaf: every leaf-to-leaf path runs through it.
Grn hub(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t i = 1; i < n; ++i) {
    p.push_back({i, 0});
    p.push_back({0, i});
  }
  return from_pairs(n, p);
}

TEST(StructuralComplexity, HubBelowRingAndUniformIsLogN) {
  for (std::size_t n : {5, 8, 16, 32}) {
    EXPECT_NEAR(structural_complexity(ring(n)), std::log2(static_cast<double>(n)), 1e-12);
    EXPECT_LT(structural_complexity(hub(n)), structural_complexity(ring(n)));
  }
  EXPECT_THROW(structural_complexity(from_pairs(1, {})), ValidationError);
  EXPECT_EQ(structural_complexity(from_pairs(3, {})), 0.0);
}

TEST(StructuralComplexity, PermutationInvariant) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = erdos_renyi(20, 0.15, seed);
    detail::Rng rng(seed * 7);
    std::vector<std::size_t> perm(g.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<std::pair<std::size_t, std::size_t>> p;
    for (const auto& e : g.edges()) p.push_back({perm[*g.index_of(e.source)], perm[*g.index_of(e.target)]});
    EXPECT_NEAR(structural_complexity(from_pairs(g.size(), p)), structural_complexity(g), 1e-12);
    EXPECT_EQ(structural_complexity(g), structural_complexity(g));
  }
}

TEST(AlgorithmicComplexity, EmptyAndCompleteGraphs) {
  const CtmTable ctm(4);
  EXPECT_EQ(ctm.bits(0), 1.0);
  EXPECT_EQ(ctm.bits(0xffff), 1.0);
  // n = 10 pads to 12: nine blocks, all zero.
  EXPECT_DOUBLE_EQ(algorithmic_complexity(from_pairs(10, {})), 1.0 + std::log2(9.0));
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) all.push_back({i, j});
  EXPECT_DOUBLE_EQ(algorithmic_complexity(from_pairs(8, all)), algorithmic_complexity(from_pairs(8, {})));
  EXPECT_DOUBLE_EQ(algorithmic_complexity(from_pairs(8, {})), 1.0 + 2.0);
}

TEST(AlgorithmicComplexity, RandomAboveRing) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto er = erdos_renyi(32, 0.5, seed);
    EXPECT_GT(algorithmic_complexity(er), algorithmic_complexity(ring(32))) << "seed " << seed;
    EXPECT_EQ(algorithmic_complexity(er), algorithmic_complexity(erdos_renyi(32, 0.5, seed)));
  }
}

TEST(AlgorithmicComplexity, SingleBlockPattern) {
  // Edge v000 -> v001 sets row 0, column 1: bit 14 of a 16-bit row-major pattern.
  const auto g = from_pairs(4, {{0, 1}});
  const double h = -(1.0 / 16) * std::log2(1.0 / 16) - (15.0 / 16) * std::log2(15.0 / 16);
  EXPECT_NEAR(algorithmic_complexity(g), 16 * h + 1.0, 1e-12);
  std::istringstream csv("pattern_hex,bits\n4000,7.5\n");
  const auto table = CtmTable::from_csv(csv, 4, "demo");
  EXPECT_EQ(algorithmic_complexity(g, table), 7.5);
  EXPECT_EQ(table.estimator_id(), "bdm-ctm-demo-b4");
  EXPECT_THROW(algorithmic_complexity(from_pairs(4, {}), table), ValidationError);
}

TEST(CtmTable, MalformedCsv) {
  std::istringstream bad("zz,1\n"), dup("01,1\n01,2\n"), neg("01,-1\n");
  EXPECT_THROW(CtmTable::from_csv(bad, 4), ParseError);
  EXPECT_THROW(CtmTable::from_csv(dup, 4), ParseError);
  EXPECT_THROW(CtmTable::from_csv(neg, 4), ParseError);
  EXPECT_THROW(CtmTable(9), ValidationError);
}

TEST(Complexity, EstimatorIdStamped) {
  const auto c = complexity(ring(6));
  EXPECT_EQ(c.estimator_id, "bdm-entropy-surrogate-b4+bc-deg-entropy");
  EXPECT_EQ(c.structural, structural_complexity(ring(6)));
}

}  // namespace
}  // namespace grnn
