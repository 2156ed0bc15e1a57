#include "clpt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clpt/errors.hpp"

namespace clpt {

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InsufficientRuns("quantile of empty range");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

Histogram make_histogram(std::span<const double> values,
                         const HistogramConfig& cfg) {
  if (values.empty()) throw InsufficientRuns("histogram needs values");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double lo = v.front();
  const double hi = v.back();
  const auto n = static_cast<double>(v.size());

  Histogram h;
  if (hi <= lo) {  // all values identical
    h.edges = {lo - 1e-12, lo + 1e-12};
    h.counts = {v.size()};
    return h;
  }

  std::size_t bins;
  if (cfg.mode == HistogramConfig::Bins::Fixed) {
    bins = std::max<std::uint32_t>(cfg.fixed_count, 1);
  } else {
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    double width = 2.0 * iqr / std::cbrt(n);
    if (width <= 0.0) width = (hi - lo) / std::ceil(std::sqrt(n));
    bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    bins = std::clamp<std::size_t>(bins, 1, 1000);
  }

  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) *
                                      static_cast<double>(bins));
    if (b >= bins) b = bins - 1;  // x == hi lands in the last bin
    ++h.counts[b];
  }
  return h;
}

std::vector<double> histogram_peaks(const Histogram& h) {
  std::vector<double> peaks;
  const std::size_t n = h.counts.size();
  std::size_t i = 0;
  while (i < n) {
    if (h.counts[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;  // plateau [i, j] of equal counts
    while (j + 1 < n && h.counts[j + 1] == h.counts[i]) ++j;
    const std::uint64_t left = i > 0 ? h.counts[i - 1] : 0;
    const std::uint64_t right = j + 1 < n ? h.counts[j + 1] : 0;
    if (h.counts[i] > left && h.counts[i] > right)
      peaks.push_back(0.5 * (h.edges[i] + h.edges[j + 1]));
    i = j + 1;
  }
  return peaks;
}

DistanceDistribution pairwise_distances(std::span<const SampleSet> sets,
                                        Metric m, std::size_t subsample,
                                        const HistogramConfig& hist) {
  if (sets.size() < 2)
    throw InsufficientRuns("pairwise distances need at least two runs");
  const std::size_t steps = sets.front().protocols.empty()
                                ? 0
                                : sets.front().protocols.front().steps();
  for (const auto& s : sets) {
    if (s.protocols.empty()) throw ShapeMismatch("empty sample set");
    for (const auto& p : s.protocols)
      if (p.steps() != steps ||
          p.duration != sets.front().protocols.front().duration)
        throw ShapeMismatch("runs disagree on (T, L)");
  }

  DistanceDistribution out;
  out.metric = m;
  out.subsample = subsample;
  out.t = sets.front().protocols.front().duration;
  out.count = sets.size();
  out.matrix = set_distance_matrix(sets, m, subsample);
  out.values.reserve(sets.size() * (sets.size() - 1) / 2);
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t j = i + 1; j < sets.size(); ++j)
      out.values.push_back(out.matrix[i * sets.size() + j]);
  std::sort(out.values.begin(), out.values.end());
  out.histogram = make_histogram(out.values, hist);
  return out;
}

DistanceDistribution restrict_distribution(const DistanceDistribution& d,
                                           std::span<const std::size_t> keep,
                                           const HistogramConfig& hist) {
  if (keep.size() < 2)
    throw InsufficientRuns("restricted distribution needs at least two runs");
  for (std::size_t k = 0; k + 1 < keep.size(); ++k)
    if (keep[k] >= keep[k + 1]) throw ShapeMismatch("keep not increasing");
  if (keep.back() >= d.count) throw ShapeMismatch("keep index out of range");

  DistanceDistribution out;
  out.metric = d.metric;
  out.subsample = d.subsample;
  out.t = d.t;
  out.count = keep.size();
  out.matrix.assign(keep.size() * keep.size(), 0.0);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      out.matrix[a * keep.size() + b] = d.matrix[keep[a] * d.count + keep[b]];
  out.values.reserve(keep.size() * (keep.size() - 1) / 2);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = a + 1; b < keep.size(); ++b)
      out.values.push_back(out.matrix[a * keep.size() + b]);
  std::sort(out.values.begin(), out.values.end());
  out.histogram = make_histogram(out.values, hist);
  return out;
}

std::vector<double> merge_heights(const DistanceDistribution& d) {
  const std::size_t n = d.count;
  if (n == 0) throw InsufficientRuns("empty distance matrix");
  std::vector<double> heights;
  if (n < 2) return heights;
  // Prim over the complete graph; n is small enough for the dense scan.
  std::vector<std::uint8_t> in_tree(n, 0);
  std::vector<double> best(d.matrix.begin(), d.matrix.begin() + n);
  in_tree[0] = 1;
  heights.reserve(n - 1);
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t pick = 0;
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j] && best[j] < w) {
        w = best[j];
        pick = j;
      }
    in_tree[pick] = 1;
    heights.push_back(w);
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j]) best[j] = std::min(best[j], d.matrix[pick * n + j]);
  }
  std::sort(heights.begin(), heights.end());
  return heights;
}

double auto_epsilon(const DistanceDistribution& d, const GapConfig& cfg) {
  const std::vector<double> h = merge_heights(d);
  if (h.empty()) throw InsufficientRuns("need at least two runs");

  std::vector<double> candidates;
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    if (h[i + 1] - h[i] >= cfg.min_gap)
      candidates.push_back(0.5 * (h[i] + h[i + 1]));
  candidates.push_back(h.back() + cfg.min_gap);  // one-component fallback

  // Candidates come out in increasing order, so the first one reaching a
  // given component count is also the smallest scale that does.
  double best_eps = candidates.back();
  std::uint32_t best_b0 = 0;
  for (double eps : candidates) {
    const ComponentPartition p = cluster_components(d, eps);
    bool valid = true;
    for (std::uint32_t s : p.sizes)
      if (s < cfg.min_component) {
        valid = false;
        break;
      }
    if (!valid) continue;
    if (p.b0 > best_b0) {
      best_b0 = p.b0;
      best_eps = eps;
    }
  }
  return best_eps;
}

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

ComponentPartition cluster_components(const DistanceDistribution& d,
                                      std::optional<double> epsilon,
                                      const GapConfig& gap) {
  const std::size_t n = d.count;
  if (n == 0) throw InsufficientRuns("empty distance matrix");
  ComponentPartition part;
  part.epsilon = epsilon ? *epsilon : auto_epsilon(d, gap);

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d.matrix[i * n + j] < part.epsilon)
        uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));

  part.labels.assign(n, 0);
  std::vector<int> label_of_root(n, -1);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t r = uf.find(static_cast<std::uint32_t>(i));
    if (label_of_root[r] < 0) label_of_root[r] = static_cast<int>(next++);
    part.labels[i] = static_cast<std::uint32_t>(label_of_root[r]);
  }
  part.b0 = next;
  part.sizes.assign(next, 0);
  for (std::uint32_t l : part.labels) ++part.sizes[l];

  part.component_distances = component_distance_means(part, d);
  return part;
}

std::vector<double> component_distance_means(const ComponentPartition& part,
                                             const DistanceDistribution& d) {
  const std::size_t n = d.count;
  if (part.labels.size() != n)
    throw ShapeMismatch("partition rows != distance matrix size");
  const std::uint32_t b0 = part.b0;
  std::vector<double> means(static_cast<std::size_t>(b0) * b0, 0.0);
  std::vector<std::uint64_t> pair_count(static_cast<std::size_t>(b0) * b0, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::uint32_t a = part.labels[i];
      const std::uint32_t b = part.labels[j];
      means[a * b0 + b] += d.matrix[i * n + j];
      ++pair_count[a * b0 + b];
      if (a != b) {
        means[b * b0 + a] += d.matrix[i * n + j];
        ++pair_count[b * b0 + a];
      }
    }
  for (std::size_t k = 0; k < means.size(); ++k)
    if (pair_count[k] > 0) means[k] /= static_cast<double>(pair_count[k]);
  return means;
}

std::vector<std::size_t> optimal_run_indices(std::span<const LmcRun> runs,
                                             double margin) {
  if (runs.empty()) throw InsufficientRuns("no runs");
  double best = runs.front().best_infidelity;
  for (const auto& r : runs) best = std::min(best, r.best_infidelity);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (runs[i].best_infidelity - best <= margin) idx.push_back(i);
  return idx;
}

namespace {

double run_mean_m(const LmcRun& r) {
  if (r.per_sample_m.empty()) return 0.0;
  return std::accumulate(r.per_sample_m.begin(), r.per_sample_m.end(), 0.0) /
         static_cast<double>(r.per_sample_m.size());
}

}  // namespace

std::vector<ComponentSummary> summarize_components(
    const ComponentPartition& part, std::span<const LmcRun> runs,
    std::span<const std::size_t> indices) {
  if (part.labels.size() != indices.size())
    throw ShapeMismatch("partition rows != index count");
  std::vector<ComponentSummary> comps(part.b0);
  for (std::uint32_t c = 0; c < part.b0; ++c) comps[c].label = c;

  for (std::size_t i = 0; i < indices.size(); ++i) {
    const LmcRun& r = runs[indices[i]];
    ComponentSummary& c = comps[part.labels[i]];
    const Protocol rm = mean_protocol(r.samples);
    if (c.size == 0) {
      c.mean_protocol = rm;
    } else {
      for (std::size_t k = 0; k < rm.values.size(); ++k)
        c.mean_protocol.values[k] += rm.values[k];
    }
    ++c.size;
    c.mean_m += run_mean_m(r);
    c.mean_min_abs_m += r.min_abs_m;
    c.min_infidelity = std::min(c.min_infidelity, r.best_infidelity);
  }
  for (ComponentSummary& c : comps) {
    if (c.size == 0) continue;
    const double inv = 1.0 / static_cast<double>(c.size);
    c.mean_m *= inv;
    c.mean_min_abs_m *= inv;
    for (double& v : c.mean_protocol.values) v *= inv;
  }
  return comps;
}

std::vector<std::uint32_t> symmetric_component_ids(
    std::span<const ComponentSummary> comps, double m_threshold) {
  bool has_plus = false;
  bool has_minus = false;
  for (const auto& c : comps) {
    has_plus = has_plus || c.mean_m > m_threshold;
    has_minus = has_minus || c.mean_m < -m_threshold;
  }
  std::vector<std::uint32_t> ids;
  if (!has_plus || !has_minus) return ids;
  for (const auto& c : comps)
    if (std::abs(c.mean_m) <= m_threshold) ids.push_back(c.label);
  return ids;
}

OrderParameterResult order_parameter(const ComponentPartition& part,
                                     std::span<const LmcRun> runs,
                                     std::span<const std::size_t> indices,
                                     std::span<const std::uint32_t> exclude) {
  if (part.labels.size() != indices.size())
    throw ShapeMismatch("partition rows != index count");
  std::vector<std::uint8_t> excluded(part.b0, 0);
  OrderParameterResult out;
  for (std::uint32_t id : exclude) {
    if (id >= part.b0) throw ConfigError("excluded component id out of range");
    excluded[id] = 1;
    out.excluded_components.push_back(id);
  }

  out.per_run.assign(indices.size(),
                     std::numeric_limits<double>::quiet_NaN());
  double value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (excluded[part.labels[i]]) continue;
    out.per_run[i] = runs[indices[i]].min_abs_m;
    value = std::min(value, out.per_run[i]);
  }
  if (!std::isfinite(value))
    throw EmptyAfterExclusion("no runs left for the order parameter");
  out.value = value;
  return out;
}

std::vector<TransitionEstimate> detect_transitions(
    std::span<const PointRecord> points, double qsl_tol, double m_threshold) {
  std::vector<TransitionEstimate> out;
  if (points.size() < 2) return out;

  auto emit = [&](const std::string& name, std::size_t first_hit) {
    TransitionEstimate e;
    e.name = name;
    if (first_hit == 0) {
      e.bracketed = false;  // already true at the grid edge
      e.value = e.lo = e.hi = points[0].t;
      e.uncertainty = 0.0;
    } else {
      e.bracketed = true;
      e.lo = points[first_hit - 1].t;
      e.hi = points[first_hit].t;
      e.value = 0.5 * (e.lo + e.hi);
      e.uncertainty = 0.5 * (e.hi - e.lo);
    }
    out.push_back(e);
  };

  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].b0 >= 2 && points[i].order_param > m_threshold) {
      emit("t_sb", i);
      break;
    }
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].min_infidelity < qsl_tol) {
      emit("t_qsl", i);
      break;
    }
  std::size_t i_plus = points.size();
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].b0 >= 3) {
      emit("t_plus", i);
      i_plus = i;
      break;
    }
  for (std::size_t i = i_plus + 1; i < points.size(); ++i)
    if (points[i].b0 < 3 && points[i].order_param < m_threshold) {
      emit("t_minus", i);
      break;
    }
  return out;
}

TrapReport trap_report(std::span<const LmcRun> runs,
                       const DistanceDistribution& d, double margin) {
  if (runs.size() != d.count)
    throw ShapeMismatch("distance matrix does not match run count");
  std::vector<std::size_t> all(runs.size());
  std::iota(all.begin(), all.end(), 0u);

  const ComponentPartition part = cluster_components(d);
  TrapReport rep;
  rep.components = summarize_components(part, runs, all);
  for (const auto& r : runs)
    rep.optimal_infidelity =
        std::min(rep.optimal_infidelity, r.best_infidelity);

  rep.trapped.assign(part.b0, 0);
  std::size_t trapped_runs = 0;
  for (const auto& c : rep.components)
    if (c.min_infidelity - rep.optimal_infidelity > margin) {
      rep.trapped[c.label] = 1;
      trapped_runs += c.size;
    }
  rep.trapped_fraction =
      static_cast<double>(trapped_runs) / static_cast<double>(runs.size());
  return rep;
}

BarrierResult barrier_estimate(std::span<const BetaScanPoint> scan,
                               std::uint32_t steps) {
  if (scan.empty()) throw InsufficientRuns("empty beta scan");
  if (steps == 0) throw ConfigError("steps must be >= 1");
  std::vector<BetaScanPoint> s(scan.begin(), scan.end());
  std::sort(s.begin(), s.end(),
            [](const auto& a, const auto& b) { return a.beta > b.beta; });
  for (const auto& p : s) {
    if (!p.magnetized_pair) {
      BarrierResult out;
      out.beta_star = p.beta;
      out.barrier = 1.0 / (p.beta * static_cast<double>(steps));
      out.collapsed_anywhere = true;
      return out;
    }
  }
  throw NoCollapse("component pair persists at every scanned beta");
}

namespace {

// links[c] = ancestor index in `prev` for component c of `cur`, or -1.
// Nearest mean-protocol matching; a second candidate nearly as close, or
// two components claiming one ancestor, is ambiguous.
std::vector<int> match_components(const std::vector<ComponentSummary>& prev,
                                  const std::vector<ComponentSummary>& cur,
                                  double match_tol) {
  std::vector<int> match(cur.size(), -1);
  std::vector<int> claimed(prev.size(), -1);
  for (std::size_t c = 0; c < cur.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    int who = -1;
    for (std::size_t p = 0; p < prev.size(); ++p) {
      const double dist = distance(cur[c].mean_protocol, prev[p].mean_protocol);
      if (dist < best) {
        second = best;
        best = dist;
        who = static_cast<int>(p);
      } else if (dist < second) {
        second = dist;
      }
    }
    if (who < 0 || best >= match_tol) continue;
    if (second < 1.2 * best)
      throw TrackingLost("two ancestors equally close to one component");
    if (claimed[who] >= 0)
      throw TrackingLost("two components matched one ancestor");
    claimed[who] = static_cast<int>(c);
    match[c] = who;
  }
  return match;
}

}  // namespace

TrapCurves trap_tracker(
    std::span<const double> t_grid,
    std::span<const std::vector<ComponentSummary>> per_point,
    double match_tol) {
  if (t_grid.size() != per_point.size())
    throw ShapeMismatch("grid and component lists disagree");
  if (per_point.empty()) throw InsufficientRuns("empty grid");
  const std::size_t k_max = per_point.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrapCurves out;
  // chain_at[k][label] = chain index owning that component
  std::vector<std::vector<int>> chain_at(k_max);

  auto new_chain = [&]() {
    out.chains.emplace_back(k_max, -1);
    out.min_infidelity.emplace_back(k_max, nan);
    return static_cast<int>(out.chains.size() - 1);
  };

  chain_at[0].assign(per_point[0].size(), -1);
  for (std::size_t c = 0; c < per_point[0].size(); ++c) {
    const int ch = new_chain();
    chain_at[0][c] = ch;
    out.chains[ch][0] = static_cast<int>(c);
    out.min_infidelity[ch][0] = per_point[0][c].min_infidelity;
  }
  for (std::size_t k = 1; k < k_max; ++k) {
    const auto match = match_components(per_point[k - 1], per_point[k],
                                        match_tol);
    chain_at[k].assign(per_point[k].size(), -1);
    for (std::size_t c = 0; c < per_point[k].size(); ++c) {
      int ch = -1;
      if (match[c] >= 0) ch = chain_at[k - 1][match[c]];
      if (ch < 0) ch = new_chain();
      chain_at[k][c] = ch;
      out.chains[ch][k] = static_cast<int>(c);
      out.min_infidelity[ch][k] = per_point[k][c].min_infidelity;
    }
  }

  out.chain_mean_abs_m.assign(out.chains.size(), 0.0);
  for (std::size_t ch = 0; ch < out.chains.size(); ++ch) {
    std::size_t present = 0;
    for (std::size_t k = 0; k < k_max; ++k)
      if (out.chains[ch][k] >= 0) {
        out.chain_mean_abs_m[ch] +=
            std::abs(per_point[k][out.chains[ch][k]].mean_m);
        ++present;
      }
    if (present > 0) out.chain_mean_abs_m[ch] /= static_cast<double>(present);
  }

  for (std::size_t k = 0; k < k_max && !out.crossover_t; ++k) {
    double global = std::numeric_limits<double>::infinity();
    for (const auto& c : per_point[k]) global = std::min(global, c.min_infidelity);
    for (const auto& c : per_point[k])
      if (std::abs(c.mean_m) < 0.05 && c.min_infidelity <= global + 1e-12) {
        out.crossover_t = t_grid[k];
        break;
      }
  }
  return out;
}

}  // namespace clpt
