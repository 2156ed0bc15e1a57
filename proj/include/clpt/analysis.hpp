#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clpt/lmc.hpp"
#include "clpt/protocol.hpp"

namespace clpt {

struct HistogramConfig {
  enum class Bins { FreedmanDiaconis, Fixed };
  Bins mode = Bins::FreedmanDiaconis;
  std::uint32_t fixed_count = 50;  // used by Fixed mode
};

struct Histogram {
  std::vector<double> edges;          // bins + 1 ascending edges
  std::vector<std::uint64_t> counts;  // per bin; last bin closes the range
};

Histogram make_histogram(std::span<const double> values,
                         const HistogramConfig& cfg = {});

// Bin centers of local maxima, zero bins ignored; a plateau of equal
// counts collapses to its middle.
std::vector<double> histogram_peaks(const Histogram& h);

// Linear-interpolated quantile of an ascending-sorted range, q in [0, 1].
double quantile(std::span<const double> sorted, double q);

struct DistanceDistribution {
  Metric metric = Metric::DAvg;
  std::size_t subsample = 0;
  double t = 0.0;                // shared protocol duration
  std::size_t count = 0;         // number of sets compared (R)
  std::vector<double> matrix;    // R x R row-major, symmetric, zero diagonal
  std::vector<double> values;    // strict upper triangle, sorted ascending
  Histogram histogram;
};

// All R(R-1)/2 set distances plus their histogram. InsufficientRuns
// unless at least two sets are given; ShapeMismatch on ragged input.
DistanceDistribution pairwise_distances(std::span<const SampleSet> sets,
                                        Metric m, std::size_t subsample = 0,
                                        const HistogramConfig& hist = {});

// The distribution over a subset of the compared sets, sliced out of the
// already-computed matrix; keep must be strictly increasing, size >= 2.
DistanceDistribution restrict_distribution(const DistanceDistribution& d,
                                           std::span<const std::size_t> keep,
                                           const HistogramConfig& hist = {});

// Scale selection for single-linkage clustering. The partition can only
// change at the linkage merge heights (the minimum-spanning-tree edge
// weights of the distance graph), so candidate scales are the midpoints
// of gaps at least min_gap wide between consecutive sorted merge
// heights. Each candidate is kept only when no resulting component is
// smaller than min_component: a cut that strands stragglers sits inside
// a component, not between components. Among the surviving candidates
// the one with the most components wins (smallest scale on ties), and
// when none survives everything joins one component. Gaps in the raw
// sorted-distance sequence are useless here: distant same-component
// pairs fill the region between the true merge heights.
struct GapConfig {
  double min_gap = 0.005;
  std::uint32_t min_component = 2;
};

double auto_epsilon(const DistanceDistribution& d, const GapConfig& cfg = {});

// Sorted single-linkage merge heights: the MST edge weights of the
// complete graph weighted by d.matrix (count - 1 values).
std::vector<double> merge_heights(const DistanceDistribution& d);

struct ComponentPartition {
  double epsilon = 0.0;
  std::uint32_t b0 = 0;                // number of components
  std::vector<std::uint32_t> labels;   // per set, dense in [0, b0)
  std::vector<std::uint32_t> sizes;    // per component
  // b0 x b0 row-major: mean pairwise distance between (or, on the
  // diagonal, within) components; 0 for singleton diagonals.
  std::vector<double> component_distances;
};

// Single linkage: sets closer than epsilon join a component. Labels are
// ordered by each component's smallest member index.
ComponentPartition cluster_components(const DistanceDistribution& d,
                                      std::optional<double> epsilon = {},
                                      const GapConfig& gap = {});

// b0 x b0 mean-distance table for an existing partition measured against
// a distribution over the same sets; lets a partition built under one
// metric report separations under another.
std::vector<double> component_distance_means(const ComponentPartition& part,
                                             const DistanceDistribution& d);

// Runs whose best cost is within `margin` of the ensemble best; used to
// keep stuck runs out of the topological counts.
std::vector<std::size_t> optimal_run_indices(std::span<const LmcRun> runs,
                                             double margin);

struct ComponentSummary {
  std::uint32_t label = 0;
  std::uint32_t size = 0;
  double mean_m = 0.0;           // mean over members of run-mean magnetization
  double mean_min_abs_m = 0.0;   // mean over members of LmcRun::min_abs_m
  double min_infidelity = 1.0;   // best cost among members
  Protocol mean_protocol;        // mean over members of run mean protocols
};

// indices[i] maps partition row i to its run; pass the same index set
// that selected the sets fed into pairwise_distances.
std::vector<ComponentSummary> summarize_components(
    const ComponentPartition& part, std::span<const LmcRun> runs,
    std::span<const std::size_t> indices);

// Zero-crossing branches to drop from the order parameter: components
// with |mean m| <= m_threshold, reported only while magnetized components
// of both signs exist (without the +/- pair nothing is excluded).
std::vector<std::uint32_t> symmetric_component_ids(
    std::span<const ComponentSummary> comps, double m_threshold = 0.05);

struct OrderParameterResult {
  double value = 0.0;            // ensemble minimum over included runs
  std::vector<double> per_run;   // min |m| per partition row; NaN if excluded
  std::vector<std::uint32_t> excluded_components;
};

// min over iterations of |m|, per run and aggregated, skipping the given
// components. EmptyAfterExclusion when nothing remains.
OrderParameterResult order_parameter(const ComponentPartition& part,
                                     std::span<const LmcRun> runs,
                                     std::span<const std::size_t> indices,
                                     std::span<const std::uint32_t> exclude);

struct PointRecord {
  double t = 0.0;                 // protocol duration
  std::uint32_t b0 = 0;
  double epsilon = 0.0;
  double min_infidelity = 1.0;
  // min over non-excluded runs of |run mean magnetization|; 0 when the
  // exclusion empties the ensemble.
  double order_param = 0.0;
  std::vector<double> peaks;      // histogram peak locations
};

struct TransitionEstimate {
  std::string name;        // t_sb, t_qsl, t_plus, t_minus
  bool bracketed = false;
  double value = 0.0;      // bracket midpoint (grid edge when unbracketed)
  double uncertainty = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Grid-bracketed transition estimates:
//   t_sb    first b0 >= 2 with order parameter above m_threshold
//   t_qsl   first min_infidelity < qsl_tol
//   t_plus  first b0 >= 3
//   t_minus first b0 < 3 after t_plus, order parameter below m_threshold
// Each is the midpoint of the bracketing grid interval with half the
// spacing as uncertainty. A transition already true at the first grid
// point is reported unbracketed (value = grid edge); one that never
// happens is omitted.
std::vector<TransitionEstimate> detect_transitions(
    std::span<const PointRecord> points, double qsl_tol = 1e-4,
    double m_threshold = 0.05);

struct PhaseDiagram {
  std::vector<PointRecord> points;
  std::vector<TransitionEstimate> transitions;
};

struct TrapReport {
  double optimal_infidelity = 1.0;   // ensemble best
  double trapped_fraction = 0.0;     // runs inside trapped components
  std::vector<ComponentSummary> components;
  std::vector<std::uint8_t> trapped;  // per component
};

// Clusters *all* runs (no optimality filter) and flags components whose
// best cost sits more than `margin` above the ensemble best.
TrapReport trap_report(std::span<const LmcRun> runs,
                       const DistanceDistribution& d, double margin = 0.02);

struct BetaScanPoint {
  double beta = 0.0;
  std::uint32_t b0 = 0;
  double epsilon = 0.0;        // frozen epsilon used for this partition
  bool magnetized_pair = false;  // +m and -m components both present
};

struct BarrierResult {
  double beta_star = 0.0;  // largest scanned beta whose pair structure is gone
  double barrier = 0.0;    // 1 / (beta_star * steps)
  bool collapsed_anywhere = false;
};

// Collapse scale from a beta scan: the +/- component pair counts as
// intact structure; beta_star is the largest beta where it has merged
// away. Throws NoCollapse when the pair survives every scanned beta.
BarrierResult barrier_estimate(std::span<const BetaScanPoint> scan,
                               std::uint32_t steps);

struct TrapCurves {
  // chains[c][k] = component label of chain c at grid point k, -1 while
  // the chain is absent.
  std::vector<std::vector<int>> chains;
  std::vector<std::vector<double>> min_infidelity;  // NaN while absent
  std::vector<double> chain_mean_abs_m;  // |mean m| averaged along chain
  // First grid t where a symmetric chain (|mean m| < 0.05) attains the
  // global per-point minimum.
  std::optional<double> crossover_t;
};

// Component identity across the duration grid, matched by nearest mean
// protocols (ambiguous claims throw TrackingLost); per-chain infidelity
// curves and the symmetric chain's optimality crossover.
TrapCurves trap_tracker(std::span<const double> t_grid,
                        std::span<const std::vector<ComponentSummary>> per_point,
                        double match_tol);

}  // namespace clpt
