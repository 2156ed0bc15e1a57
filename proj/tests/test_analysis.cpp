#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "clpt/analysis.hpp"
#include "clpt/errors.hpp"
#include "clpt/rng.hpp"
#include "oracles.hpp"

using namespace clpt;

namespace {

// Distance distribution assembled by hand from an explicit matrix.
DistanceDistribution from_matrix(std::vector<double> matrix, std::size_t n) {
  DistanceDistribution d;
  d.count = n;
  d.matrix = std::move(matrix);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.values.push_back(d.matrix[i * n + j]);
  std::sort(d.values.begin(), d.values.end());
  return d;
}

std::vector<double> symmetric_random_matrix(Rng& rng, std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m[i * n + j] = m[j * n + i] = rng.u01();
  return m;
}

LmcRun stub_run(double best, double mean_m, double min_abs_m,
                std::uint32_t run_id) {
  LmcRun r;
  r.best_infidelity = best;
  r.min_abs_m = min_abs_m;
  Protocol q;
  q.duration = 1.0;
  q.values = {mean_m, mean_m};
  r.samples.protocols = {q, q};
  r.samples.infidelities = {best, best};
  r.samples.run_id = run_id;
  r.per_sample_m = {mean_m, mean_m};
  r.best_protocol = q;
  return r;
}

ComponentSummary stub_comp(std::uint32_t label, std::vector<double> mean,
                           double mean_m, double min_inf) {
  ComponentSummary c;
  c.label = label;
  c.size = 1;
  c.mean_m = mean_m;
  c.min_infidelity = min_inf;
  c.mean_protocol.duration = 1.0;
  c.mean_protocol.values = std::move(mean);
  return c;
}

}  // namespace

TEST_CASE("quantile interpolates linearly on the sorted range") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(std::vector<double>{7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), InsufficientRuns);
}

TEST_CASE("histograms bin correctly in both modes") {
  std::vector<double> v{0.0, 0.1, 0.2, 0.3, 1.0};
  HistogramConfig fixed;
  fixed.mode = HistogramConfig::Bins::Fixed;
  fixed.fixed_count = 4;
  const Histogram h = make_histogram(v, fixed);
  REQUIRE(h.edges.size() == 5);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
  // 0, 0.1, 0.2 in [0, 0.25); 0.3 in [0.25, 0.5); 1.0 closes the top bin.
  CHECK(h.counts[0] == 3);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[2] == 0);
  CHECK(h.counts[3] == 1);

  Rng rng(3);
  std::vector<double> big;
  for (int i = 0; i < 500; ++i) big.push_back(rng.u01());
  const Histogram fd = make_histogram(big);
  CHECK(fd.counts.size() >= 1);
  CHECK(fd.edges.size() == fd.counts.size() + 1);
  CHECK(std::is_sorted(fd.edges.begin(), fd.edges.end()));
  CHECK(std::accumulate(fd.counts.begin(), fd.counts.end(), std::uint64_t{0}) ==
        big.size());

  const Histogram flat = make_histogram(std::vector<double>{0.5, 0.5, 0.5});
  REQUIRE(flat.counts.size() == 1);
  CHECK(flat.counts[0] == 3);
  CHECK(flat.edges[0] < 0.5);
  CHECK(flat.edges[1] > 0.5);

  CHECK_THROWS_AS(make_histogram(std::vector<double>{}), InsufficientRuns);
}

TEST_CASE("histogram peaks find local maxima and plateau middles") {
  Histogram h;
  h.edges = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  h.counts = {1, 3, 1, 0, 2, 2, 2, 1};
  const auto peaks = histogram_peaks(h);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0] == doctest::Approx(1.5));   // single-bin maximum
  CHECK(peaks[1] == doctest::Approx(5.5));   // middle of the 2,2,2 plateau

  Histogram rising;
  rising.edges = {0, 1, 2, 3};
  rising.counts = {1, 2, 3};
  const auto edge_peak = histogram_peaks(rising);
  REQUIRE(edge_peak.size() == 1);
  CHECK(edge_peak[0] == doctest::Approx(2.5));

  Histogram uniform;
  uniform.edges = {0, 1, 2};
  uniform.counts = {4, 4};
  const auto mid = histogram_peaks(uniform);
  REQUIRE(mid.size() == 1);
  CHECK(mid[0] == doctest::Approx(1.0));
}

namespace {

// Block matrix: clusters of the given sizes with intra distance `near`
// and cross distance from `cross[a][b]`.
DistanceDistribution block_matrix(const std::vector<std::size_t>& sizes,
                                  double near,
                                  const std::vector<std::vector<double>>& cross) {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  std::vector<std::size_t> owner;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    owner.insert(owner.end(), sizes[c], c);
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v =
          owner[i] == owner[j] ? near : cross[owner[i]][owner[j]];
      m[i * n + j] = m[j * n + i] = v;
    }
  return from_matrix(std::move(m), n);
}

}  // namespace

TEST_CASE("merge heights are the sorted linkage tree of the matrix") {
  // Two tight blocks joined by one far edge.
  const auto d = block_matrix({3, 2}, 0.1, {{0.0, 1.0}, {1.0, 0.0}});
  const auto h = merge_heights(d);
  REQUIRE(h.size() == 4);
  CHECK(h[0] == doctest::Approx(0.1));
  CHECK(h[2] == doctest::Approx(0.1));
  CHECK(h[3] == doctest::Approx(1.0));

  // A far intra pair does not show up: the chain connects through the
  // middle, so heights stay at the link scale.
  std::vector<double> chain{0.0, 0.1, 0.9,
                            0.1, 0.0, 0.1,
                            0.9, 0.1, 0.0};
  const auto hc = merge_heights(from_matrix(std::move(chain), 3));
  REQUIRE(hc.size() == 2);
  CHECK(hc[0] == doctest::Approx(0.1));
  CHECK(hc[1] == doctest::Approx(0.1));

  CHECK(merge_heights(from_matrix(std::vector<double>{0.0}, 1)).empty());
  CHECK_THROWS_AS(merge_heights(from_matrix(std::vector<double>{}, 0)),
                  InsufficientRuns);
}

TEST_CASE("auto_epsilon prefers the scale with the most components") {
  // One boundary only: epsilon lands mid-gap.
  const auto two = block_matrix({3, 2}, 0.1, {{0.0, 1.0}, {1.0, 0.0}});
  CHECK(auto_epsilon(two) == doctest::Approx(0.55));

  // Three blocks, two of them close: the widest gap (0.4 to 2.0) would
  // merge the close pair; the rule keeps all three because the smaller
  // 0.1-to-0.4 gap also clears min_gap and yields more components.
  const auto three = block_matrix(
      {2, 2, 2}, 0.1,
      {{0.0, 0.4, 2.0}, {0.4, 0.0, 2.0}, {2.0, 2.0, 0.0}});
  CHECK(auto_epsilon(three) == doctest::Approx(0.25));
  CHECK(cluster_components(three).b0 == 3);

  // A lone straggler cannot found a component: the cut that isolates it
  // is rejected and the next scale up wins.
  const auto straggler = block_matrix(
      {2, 1, 2}, 0.05,
      {{0.0, 0.5, 1.0}, {0.5, 0.0, 1.0}, {1.0, 1.0, 0.0}});
  CHECK(auto_epsilon(straggler) == doctest::Approx(0.75));
  CHECK(cluster_components(straggler).b0 == 2);

  // All gaps below min_gap: fallback above the top height, one component.
  std::vector<double> tight{0.0, 0.1,   0.5,   0.5,
                            0.1, 0.0,   0.102, 0.5,
                            0.5, 0.102, 0.0,   0.104,
                            0.5, 0.5,   0.104, 0.0};
  const auto dt = from_matrix(std::move(tight), 4);
  CHECK(auto_epsilon(dt) == doctest::Approx(0.109));
  CHECK(cluster_components(dt).b0 == 1);

  // min_gap is config: raising it past every gap forces the fallback.
  GapConfig wide;
  wide.min_gap = 2.5;
  CHECK(auto_epsilon(three, wide) == doctest::Approx(2.0 + 2.5));

  CHECK_THROWS_AS(auto_epsilon(from_matrix(std::vector<double>{0.0}, 1)),
                  InsufficientRuns);
}

TEST_CASE("single linkage clustering matches a crafted geometry") {
  // Runs 0-2 mutually at 0.1, runs 3-4 at 0.1, cross distances 1.0.
  const std::size_t n = 5;
  std::vector<double> m(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 0.0;
  auto set = [&](std::size_t i, std::size_t j, double v) {
    m[i * n + j] = m[j * n + i] = v;
  };
  set(0, 1, 0.1);
  set(0, 2, 0.1);
  set(1, 2, 0.1);
  set(3, 4, 0.1);
  const auto d = from_matrix(m, n);

  const ComponentPartition part = cluster_components(d, 0.5);
  CHECK(part.epsilon == 0.5);
  CHECK(part.b0 == 2);
  CHECK(part.labels == std::vector<std::uint32_t>{0, 0, 0, 1, 1});
  CHECK(part.sizes == std::vector<std::uint32_t>{3, 2});
  CHECK(part.component_distances[0 * 2 + 0] == doctest::Approx(0.1));
  CHECK(part.component_distances[1 * 2 + 1] == doctest::Approx(0.1));
  CHECK(part.component_distances[0 * 2 + 1] == doctest::Approx(1.0));
  CHECK(part.component_distances[1 * 2 + 0] == doctest::Approx(1.0));

  const ComponentPartition auto_part = cluster_components(d);
  CHECK(auto_part.b0 == 2);
  CHECK(auto_part.epsilon == doctest::Approx(0.55));
}

TEST_CASE("clustering is single linkage, with strict epsilon comparison") {
  // 0 - 1 - 2 chained: far ends join through the middle.
  std::vector<double> m{0.0, 0.4, 0.8,
                        0.4, 0.0, 0.4,
                        0.8, 0.4, 0.0};
  const auto d = from_matrix(m, 3);
  CHECK(cluster_components(d, 0.5).b0 == 1);
  // Distance exactly equal to epsilon does not join.
  CHECK(cluster_components(d, 0.4).b0 == 3);
  CHECK(cluster_components(d, 0.41).b0 == 1);
}

TEST_CASE("clustering is monotone in epsilon and permutation invariant") {
  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 12;
    const auto d = from_matrix(symmetric_random_matrix(rng, n), n);
    const auto fine = cluster_components(d, 0.2);
    const auto coarse = cluster_components(d, 0.6);
    CHECK(fine.b0 >= coarse.b0);
    // Growing epsilon only merges: same fine label implies same coarse one.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (fine.labels[i] == fine.labels[j])
          CHECK(coarse.labels[i] == coarse.labels[j]);

    // Relabel the runs by a rotation; grouping must transport along.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::rotate(perm.begin(), perm.begin() + (rep % n), perm.end());
    std::vector<double> pm(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        pm[perm[i] * n + perm[j]] = d.matrix[i * n + j];
    const auto dp = from_matrix(std::move(pm), n);
    const auto part_p = cluster_components(dp, 0.2);
    CHECK(part_p.b0 == fine.b0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        CHECK((part_p.labels[perm[i]] == part_p.labels[perm[j]]) ==
              (fine.labels[i] == fine.labels[j]));
  }
}

TEST_CASE("pairwise_distances wraps the matrix kernel and sorts values") {
  Rng rng(22);
  std::vector<SampleSet> sets;
  for (int r = 0; r < 5; ++r) sets.push_back(oracles::random_set(rng, 4, 6, 1.5));

  const auto d = pairwise_distances(sets, Metric::DAvg, 2);
  CHECK(d.metric == Metric::DAvg);
  CHECK(d.subsample == 2);
  CHECK(d.t == 1.5);
  CHECK(d.count == 5);
  CHECK(d.matrix == set_distance_matrix(sets, Metric::DAvg, 2));
  REQUIRE(d.values.size() == 10);
  CHECK(std::is_sorted(d.values.begin(), d.values.end()));
  CHECK(std::accumulate(d.histogram.counts.begin(), d.histogram.counts.end(),
                        std::uint64_t{0}) == 10);

  CHECK_THROWS_AS(
      pairwise_distances(std::span<const SampleSet>(sets.data(), 1),
                         Metric::DAvg),
      InsufficientRuns);
  auto ragged = sets;
  ragged[2].protocols[1].values.push_back(0.0);
  CHECK_THROWS_AS(pairwise_distances(ragged, Metric::DAvg), ShapeMismatch);
  auto skewed = sets;
  skewed[1].protocols[0].duration = 2.0;
  CHECK_THROWS_AS(pairwise_distances(skewed, Metric::DAvg), ShapeMismatch);
}

TEST_CASE("restrict_distribution slices the matrix consistently") {
  Rng rng(23);
  std::vector<SampleSet> sets;
  for (int r = 0; r < 6; ++r) sets.push_back(oracles::random_set(rng, 3, 5, 1.0));
  const auto d = pairwise_distances(sets, Metric::DSet);

  const std::vector<std::size_t> keep{0, 2, 5};
  const auto r = restrict_distribution(d, keep);
  CHECK(r.count == 3);
  CHECK(r.metric == d.metric);
  CHECK(r.t == d.t);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(r.matrix[a * 3 + b] == d.matrix[keep[a] * 6 + keep[b]]);
  CHECK(std::is_sorted(r.values.begin(), r.values.end()));
  REQUIRE(r.values.size() == 3);

  // Slicing must agree with recomputing on the kept subset directly.
  std::vector<SampleSet> subset{sets[0], sets[2], sets[5]};
  const auto direct = pairwise_distances(subset, Metric::DSet);
  CHECK(r.matrix == direct.matrix);

  CHECK_THROWS_AS(restrict_distribution(d, std::vector<std::size_t>{1}),
                  InsufficientRuns);
  CHECK_THROWS_AS(restrict_distribution(d, std::vector<std::size_t>{2, 2}),
                  ShapeMismatch);
  CHECK_THROWS_AS(restrict_distribution(d, std::vector<std::size_t>{1, 6}),
                  ShapeMismatch);
}

TEST_CASE("optimal_run_indices keeps runs near the ensemble best") {
  std::vector<LmcRun> runs{stub_run(0.001, 0.5, 0.4, 0),
                           stub_run(0.002, -0.5, 0.4, 1),
                           stub_run(0.5, 0.0, 0.0, 2),
                           stub_run(0.021, 0.5, 0.4, 3)};
  CHECK(optimal_run_indices(runs, 0.02) ==
        std::vector<std::size_t>{0, 1, 3});
  CHECK(optimal_run_indices(runs, 1.0) ==
        std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(optimal_run_indices(runs, 1e-9) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(optimal_run_indices(std::vector<LmcRun>{}, 0.1),
                  InsufficientRuns);
}

TEST_CASE("summarize_components aggregates member runs") {
  std::vector<LmcRun> runs{stub_run(0.01, 0.8, 0.7, 0),
                           stub_run(0.03, 0.6, 0.5, 1),
                           stub_run(0.02, -0.7, 0.6, 2)};
  ComponentPartition part;
  part.b0 = 2;
  part.labels = {0, 0, 1};
  part.sizes = {2, 1};
  const std::vector<std::size_t> idx{0, 1, 2};

  const auto comps = summarize_components(part, runs, idx);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].label == 0);
  CHECK(comps[0].size == 2);
  CHECK(comps[0].mean_m == doctest::Approx(0.7));
  CHECK(comps[0].mean_min_abs_m == doctest::Approx(0.6));
  CHECK(comps[0].min_infidelity == doctest::Approx(0.01));
  CHECK(comps[0].mean_protocol.values[0] == doctest::Approx(0.7));
  CHECK(comps[1].size == 1);
  CHECK(comps[1].mean_m == doctest::Approx(-0.7));

  ComponentPartition bad = part;
  bad.labels = {0, 0};
  CHECK_THROWS_AS(summarize_components(bad, runs, idx), ShapeMismatch);
}

TEST_CASE("symmetric component ids need a magnetized pair") {
  std::vector<ComponentSummary> comps{stub_comp(0, {0.8, 0.8}, 0.8, 0.01),
                                      stub_comp(1, {-0.8, -0.8}, -0.8, 0.01),
                                      stub_comp(2, {0.0, 0.0}, 0.01, 0.02)};
  CHECK(symmetric_component_ids(comps) == std::vector<std::uint32_t>{2});

  // Without the minus branch nothing is excluded.
  std::vector<ComponentSummary> plus_only{stub_comp(0, {0.8, 0.8}, 0.8, 0.01),
                                          stub_comp(1, {0.0, 0.0}, 0.0, 0.02)};
  CHECK(symmetric_component_ids(plus_only).empty());

  // Threshold is inclusive for the excluded branch.
  std::vector<ComponentSummary> edge{stub_comp(0, {0.8, 0.8}, 0.8, 0.01),
                                     stub_comp(1, {-0.8, -0.8}, -0.8, 0.01),
                                     stub_comp(2, {0.0, 0.0}, 0.05, 0.02)};
  CHECK(symmetric_component_ids(edge, 0.05) == std::vector<std::uint32_t>{2});
}

TEST_CASE("order parameter skips excluded components") {
  std::vector<LmcRun> runs{stub_run(0.01, 0.8, 0.7, 0),
                           stub_run(0.01, -0.8, 0.6, 1),
                           stub_run(0.01, 0.0, 0.001, 2)};
  ComponentPartition part;
  part.b0 = 3;
  part.labels = {0, 1, 2};
  part.sizes = {1, 1, 1};
  const std::vector<std::size_t> idx{0, 1, 2};

  const auto all = order_parameter(part, runs, idx, std::vector<std::uint32_t>{});
  CHECK(all.value == doctest::Approx(0.001));
  CHECK(all.per_run.size() == 3);

  const std::vector<std::uint32_t> excl{2};
  const auto r = order_parameter(part, runs, idx, excl);
  CHECK(r.value == doctest::Approx(0.6));
  CHECK(std::isnan(r.per_run[2]));
  CHECK(r.per_run[0] == doctest::Approx(0.7));
  CHECK(r.excluded_components == excl);

  const std::vector<std::uint32_t> everything{0, 1, 2};
  CHECK_THROWS_AS(order_parameter(part, runs, idx, everything),
                  EmptyAfterExclusion);
  const std::vector<std::uint32_t> junk{9};
  CHECK_THROWS_AS(order_parameter(part, runs, idx, junk), ConfigError);
}

TEST_CASE("transition detection brackets the synthetic grid") {
  auto mk = [](double t, std::uint32_t b0, double order, double min_i) {
    PointRecord p;
    p.t = t;
    p.b0 = b0;
    p.order_param = order;
    p.min_infidelity = min_i;
    return p;
  };
  std::vector<PointRecord> pts{
      mk(1.0, 1, 0.2, 0.5),    mk(2.0, 1, 0.2, 0.3),
      mk(3.0, 2, 0.2, 1e-3),   mk(3.2, 2, 0.2, 1e-5),
      mk(3.4, 3, 0.2, 1e-6),   mk(3.6, 2, 0.001, 1e-7)};

  const auto tr = detect_transitions(pts, 1e-4, 0.05);
  REQUIRE(tr.size() == 4);

  auto find = [&](const std::string& name) {
    for (const auto& e : tr)
      if (e.name == name) return e;
    REQUIRE(false);
    return tr[0];
  };
  const auto t_sb = find("t_sb");
  CHECK(t_sb.bracketed);
  CHECK(t_sb.value == doctest::Approx(2.5));
  CHECK(t_sb.uncertainty == doctest::Approx(0.5));
  const auto t_qsl = find("t_qsl");
  CHECK(t_qsl.value == doctest::Approx(3.1));
  CHECK(t_qsl.uncertainty == doctest::Approx(0.1));
  const auto t_plus = find("t_plus");
  CHECK(t_plus.value == doctest::Approx(3.3));
  CHECK(t_plus.lo == doctest::Approx(3.2));
  CHECK(t_plus.hi == doctest::Approx(3.4));
  const auto t_minus = find("t_minus");
  CHECK(t_minus.value == doctest::Approx(3.5));

  // Already true at the first grid point: unbracketed at the edge.
  std::vector<PointRecord> edge{mk(1.0, 2, 0.2, 0.5), mk(2.0, 2, 0.2, 0.4)};
  const auto tre = detect_transitions(edge);
  REQUIRE(tre.size() == 1);
  CHECK(tre[0].name == "t_sb");
  CHECK_FALSE(tre[0].bracketed);
  CHECK(tre[0].value == 1.0);
  CHECK(tre[0].uncertainty == 0.0);

  // Never true: omitted entirely.
  std::vector<PointRecord> quiet{mk(1.0, 1, 0.2, 0.5), mk(2.0, 1, 0.2, 0.4)};
  CHECK(detect_transitions(quiet).empty());

  // b0 drops but order stays high: no t_minus.
  std::vector<PointRecord> hold{mk(1.0, 1, 0.2, 0.5), mk(2.0, 3, 0.2, 0.4),
                                mk(3.0, 2, 0.2, 0.3)};
  for (const auto& e : detect_transitions(hold)) CHECK(e.name != "t_minus");

  CHECK(detect_transitions(std::vector<PointRecord>{mk(1, 1, 0.1, 0.5)})
            .empty());
}

TEST_CASE("trap report flags components stuck above the ensemble best") {
  std::vector<LmcRun> runs;
  for (int i = 0; i < 4; ++i)
    runs.push_back(stub_run(1e-3 + 1e-4 * i, 0.8, 0.7, static_cast<std::uint32_t>(i)));
  runs.push_back(stub_run(0.060, 0.0, 0.0, 4));
  runs.push_back(stub_run(0.062, 0.0, 0.0, 5));

  const std::size_t n = 6;
  std::vector<double> m(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) m[i * n + j] = m[j * n + i] = 0.05;
  m[4 * n + 5] = m[5 * n + 4] = 0.05;
  const auto d = from_matrix(m, n);

  const TrapReport rep = trap_report(runs, d, 0.02);
  CHECK(rep.optimal_infidelity == doctest::Approx(1e-3));
  REQUIRE(rep.components.size() == 2);
  REQUIRE(rep.trapped.size() == 2);
  CHECK(rep.trapped[0] == 0);
  CHECK(rep.trapped[1] == 1);
  CHECK(rep.trapped_fraction == doctest::Approx(2.0 / 6.0));

  CHECK_THROWS_AS(trap_report(std::vector<LmcRun>(runs.begin(), runs.begin() + 3),
                              d, 0.02),
                  ShapeMismatch);
}

TEST_CASE("barrier estimate returns the largest collapsed beta") {
  auto pt = [](double beta, bool pair) {
    BetaScanPoint p;
    p.beta = beta;
    p.magnetized_pair = pair;
    return p;
  };
  std::vector<BetaScanPoint> scan{pt(1e6, true), pt(1e4, true), pt(1e2, false),
                                  pt(1e1, false)};
  const auto r = barrier_estimate(scan, 64);
  CHECK(r.collapsed_anywhere);
  CHECK(r.beta_star == 1e2);
  CHECK(r.barrier == doctest::Approx(1.0 / (1e2 * 64)));

  // Input order is irrelevant.
  std::reverse(scan.begin(), scan.end());
  CHECK(barrier_estimate(scan, 64).beta_star == 1e2);

  std::vector<BetaScanPoint> alive{pt(1e2, true), pt(1e1, true)};
  CHECK_THROWS_AS(barrier_estimate(alive, 64), NoCollapse);
  CHECK_THROWS_AS(barrier_estimate(std::vector<BetaScanPoint>{}, 64),
                  InsufficientRuns);
  CHECK_THROWS_AS(barrier_estimate(scan, 0), ConfigError);
}

TEST_CASE("trap tracker chains components across the grid") {
  const std::vector<double> grid{1.0, 2.0, 3.0};
  const std::vector<double> grid2{1.0, 2.0};
  std::vector<std::vector<ComponentSummary>> per_point(3);
  per_point[0] = {stub_comp(0, {0.8, 0.8}, 0.8, 0.010),
                  stub_comp(1, {-0.8, -0.8}, -0.8, 0.012)};
  per_point[1] = {stub_comp(0, {0.82, 0.82}, 0.8, 1e-3),
                  stub_comp(1, {-0.82, -0.82}, -0.8, 1.1e-3),
                  stub_comp(2, {0.0, 0.0}, 0.0, 2e-3)};
  per_point[2] = {stub_comp(0, {0.84, 0.84}, 0.8, 1e-4),
                  stub_comp(1, {-0.84, -0.84}, -0.8, 2e-4),
                  stub_comp(2, {0.01, 0.01}, 0.0, 1e-5)};

  const TrapCurves curves = trap_tracker(grid, per_point, 0.3);
  REQUIRE(curves.chains.size() == 3);
  CHECK(curves.chains[0] == std::vector<int>{0, 0, 0});
  CHECK(curves.chains[1] == std::vector<int>{1, 1, 1});
  CHECK(curves.chains[2] == std::vector<int>{-1, 2, 2});
  CHECK(std::isnan(curves.min_infidelity[2][0]));
  CHECK(curves.min_infidelity[2][1] == doctest::Approx(2e-3));
  CHECK(curves.chain_mean_abs_m[0] == doctest::Approx(0.8));
  CHECK(curves.chain_mean_abs_m[2] == doctest::Approx(0.0));
  // The symmetric chain first attains the global optimum at t = 3.
  REQUIRE(curves.crossover_t.has_value());
  CHECK(*curves.crossover_t == doctest::Approx(3.0));

  // A component farther than match_tol from every ancestor starts a new
  // chain instead of matching.
  std::vector<std::vector<ComponentSummary>> apart(2);
  apart[0] = {stub_comp(0, {0.8, 0.8}, 0.8, 0.01)};
  apart[1] = {stub_comp(0, {-0.8, -0.8}, -0.8, 0.01)};
  const TrapCurves fresh = trap_tracker(grid2, apart, 0.3);
  CHECK(fresh.chains.size() == 2);

  // Ambiguity: one component equally close to two ancestors.
  std::vector<std::vector<ComponentSummary>> ambig(2);
  ambig[0] = {stub_comp(0, {0.10, 0.10}, 0.1, 0.01),
              stub_comp(1, {0.12, 0.12}, 0.1, 0.01)};
  ambig[1] = {stub_comp(0, {0.11, 0.11}, 0.1, 0.01)};
  CHECK_THROWS_AS(trap_tracker(grid2, ambig, 0.3), TrackingLost);

  // Collision: two components claiming the same ancestor.
  std::vector<std::vector<ComponentSummary>> collide(2);
  collide[0] = {stub_comp(0, {0.0, 0.0}, 0.0, 0.01)};
  collide[1] = {stub_comp(0, {0.05, 0.05}, 0.0, 0.01),
                stub_comp(1, {-0.05, -0.05}, 0.0, 0.01)};
  CHECK_THROWS_AS(trap_tracker(grid2, collide, 0.3), TrackingLost);

  CHECK_THROWS_AS(trap_tracker(grid2, per_point, 0.3), ShapeMismatch);
}
