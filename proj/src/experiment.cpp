#include "clpt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "clpt/errors.hpp"
#include "clpt/omp_compat.hpp"

namespace clpt {

namespace fs = std::filesystem;

namespace {

void validate_common(const ExperimentConfig& cfg) {
  validate(cfg.sampler);
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.metrics.empty()) throw ConfigError("no metrics requested");
  for (std::size_t i = 0; i < cfg.metrics.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.metrics.size(); ++j)
      if (cfg.metrics[i] == cfg.metrics[j])
        throw ConfigError("repeated metric: " + metric_name(cfg.metrics[i]));
  if (cfg.output_dir.empty()) throw ConfigError("output_dir is empty");

  const AnalysisConfig& a = cfg.analysis;
  if (a.epsilon && !(*a.epsilon > 0.0))
    throw ConfigError("epsilon must be positive");
  if (!(a.gap.min_gap > 0.0)) throw ConfigError("min_gap must be positive");
  if (a.gap.min_component < 1)
    throw ConfigError("min_component must be >= 1");
  if (!(a.qsl_tol > 0.0)) throw ConfigError("qsl_tol must be positive");
  if (!(a.filter_margin >= 0.0) || !(a.trap_margin >= 0.0))
    throw ConfigError("margins must be nonnegative");
  if (!(a.m_threshold > 0.0)) throw ConfigError("m_threshold must be positive");
  if (!(a.match_tol > 0.0)) throw ConfigError("match_tol must be positive");
}

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

// Requested metrics with the avg/set pair forced in front: histogram
// peaks and reported component separations come from the avg metric,
// while connectivity (the partition, hence b0 and epsilon) comes from
// the set metric, whose closest-pair semantics match single linkage.
std::vector<Metric> metrics_to_compute(const ExperimentConfig& cfg) {
  std::vector<Metric> ms{Metric::DAvg, Metric::DSet};
  for (Metric m : cfg.metrics)
    if (m != Metric::DAvg && m != Metric::DSet) ms.push_back(m);
  return ms;
}

double run_mean_m(const LmcRun& r) {
  if (r.per_sample_m.empty()) return 0.0;
  return std::accumulate(r.per_sample_m.begin(), r.per_sample_m.end(), 0.0) /
         static_cast<double>(r.per_sample_m.size());
}

bool wants_metric(const ExperimentConfig& cfg, Metric m) {
  return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) !=
         cfg.metrics.end();
}

// Ensemble for `scfg` under `dir`, reloaded when a completed compatible
// one is already there, sampled and written out otherwise.
SampledEnsemble ensemble_at(const ExperimentConfig& cfg, const LmcConfig& scfg,
                            const fs::path& dir, bool resume,
                            const Logger& log) {
  if (resume && fs::exists(dir / "ensemble.json")) {
    try {
      io::EnsembleDir ens = io::read_ensemble(dir);
      // The stored manifest carries 12-significant-digit floats, so the
      // match is checked against the canonical form of the request.
      if (ens.config == io::round12(scfg) && ens.model == io::round12(cfg.model)) {
        say(log, "reusing completed ensemble in " + dir.string());
        return {std::move(ens.runs), true};
      }
      say(log, "stale configuration in " + dir.string() + ", resampling");
    } catch (const std::exception& e) {
      say(log, "unreadable ensemble in " + dir.string() + " (" + e.what() +
                   "), resampling");
    }
  }

  io::ensure_dir(dir);
  omp_set_threads(cfg.workers);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<LmcRun> runs = sample_ensemble(cfg.model, scfg);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  for (LmcRun& r : runs) io::canonicalize_run(r);
  for (const LmcRun& r : runs) io::write_run(dir, scfg, r);
  io::write_ensemble_manifest(dir, cfg.model, scfg, elapsed, cfg.workers);
  std::ostringstream msg;
  msg << "sampled " << runs.size() << " runs at T=" << io::fmt12(scfg.duration)
      << ", beta=" << io::fmt12(scfg.beta) << " in " << io::fmt12(elapsed)
      << "s";
  say(log, msg.str());
  return {std::move(runs), false};
}

struct AnalysisOutcome {
  PointRecord record;
  std::vector<ComponentSummary> primary_components;
  bool magnetized_pair = false;
};

// Analysis half: distances, clustering, summaries, artifact files, and
// point.json last. Deterministic in the runs' (canonical) values alone.
AnalysisOutcome analyze_runs(const ExperimentConfig& cfg, double duration,
                             std::span<const LmcRun> runs, const fs::path& dir,
                             std::optional<double> epsilon_override,
                             const Logger& log) {
  const AnalysisConfig& a = cfg.analysis;

  std::vector<std::size_t> indices = optimal_run_indices(runs, a.filter_margin);
  if (indices.size() < 2) {
    say(log, "optimality filter left " + std::to_string(indices.size()) +
                 " run(s); clustering the full ensemble instead");
    indices.resize(runs.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }

  std::vector<SampleSet> sets;
  sets.reserve(runs.size());
  for (const LmcRun& r : runs) sets.push_back(r.samples);

  const std::vector<Metric> ms = metrics_to_compute(cfg);
  std::vector<DistanceDistribution> fulls;
  std::vector<DistanceDistribution> opts;
  fulls.reserve(ms.size());
  opts.reserve(ms.size());
  for (Metric m : ms) {
    fulls.push_back(pairwise_distances(sets, m, a.subsample, a.hist));
    opts.push_back(indices.size() == runs.size()
                       ? fulls.back()
                       : restrict_distribution(fulls.back(), indices, a.hist));
  }
  const DistanceDistribution& avg_opt = opts[0];
  const DistanceDistribution& set_full = fulls[1];
  const DistanceDistribution& set_opt = opts[1];

  io::ComponentsArtifact art;
  art.linkage_metric = Metric::DSet;
  art.distance_metric = Metric::DAvg;
  art.t = io::round_sig12(duration);
  std::optional<double> eps = a.epsilon;
  if (epsilon_override) eps = epsilon_override;
  art.partition = cluster_components(set_opt, eps, a.gap);
  // Separations are reported as averaged-metric means even though
  // connectivity is decided by closest pairs.
  art.partition.component_distances =
      component_distance_means(art.partition, avg_opt);
  art.components = summarize_components(art.partition, runs, indices);
  art.filter_margin = a.filter_margin;
  art.optimal_indices = indices;
  const auto excluded = symmetric_component_ids(art.components, a.m_threshold);
  art.order = order_parameter(art.partition, runs, indices, excluded);
  art.trap = trap_report(runs, set_full, a.trap_margin);

  AnalysisOutcome out;
  double min_inf = 1.0;
  for (const LmcRun& r : runs) min_inf = std::min(min_inf, r.best_infidelity);
  out.record.t = io::round_sig12(duration);
  out.record.b0 = art.partition.b0;
  out.record.epsilon = io::round_sig12(art.partition.epsilon);
  out.record.min_infidelity = io::round_sig12(min_inf);
  // Phase-diagram order parameter: smallest |run mean magnetization|
  // among runs outside the excluded components. The per-iteration
  // minimum kept in the components artifact brushes zero whenever any
  // magnetized chain wanders across m = 0 once, which buries the
  // symmetric-branch signal; the run mean does not.
  std::vector<std::uint8_t> is_excluded(art.partition.b0, 0);
  for (std::uint32_t id : excluded) is_excluded[id] = 1;
  double order_scalar = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (is_excluded[art.partition.labels[i]]) continue;
    order_scalar =
        std::min(order_scalar, std::abs(run_mean_m(runs[indices[i]])));
  }
  if (!std::isfinite(order_scalar)) order_scalar = 0.0;
  out.record.order_param = io::round_sig12(order_scalar);
  out.record.peaks = histogram_peaks(avg_opt.histogram);
  for (double& p : out.record.peaks) p = io::round_sig12(p);

  out.primary_components = art.components;
  bool plus = false;
  bool minus = false;
  for (const ComponentSummary& c : art.components) {
    if (c.mean_m > a.m_threshold) plus = true;
    if (c.mean_m < -a.m_threshold) minus = true;
  }
  out.magnetized_pair = plus && minus;

  io::write_components_json(dir / "components.json", art);
  std::vector<DistanceDistribution> to_serialize;
  for (std::size_t k = 0; k < ms.size(); ++k)
    if (wants_metric(cfg, ms[k])) to_serialize.push_back(std::move(opts[k]));
  io::write_distances_csv(dir / "distances.csv", to_serialize);
  io::write_histogram_csv(dir / "histograms.csv", to_serialize);
  io::write_point_json(dir / "point.json", out.record);
  return out;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  validate_common(cfg);
  if (cfg.t_grid.empty()) throw ConfigError("duration grid is empty");
  for (double t : cfg.t_grid)
    if (!(t > 0.0)) throw ConfigError("durations must be positive");
  for (std::size_t i = 0; i + 1 < cfg.t_grid.size(); ++i)
    if (!(cfg.t_grid[i] < cfg.t_grid[i + 1]))
      throw ConfigError("duration grid must be strictly increasing");
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "desk") {
    cfg.sampler.steps = 32;
    cfg.sampler.runs = 32;
    cfg.sampler.samples = 1u << 8;
    cfg.sampler.delta_n = 1u << 10;
    cfg.sampler.burn_in = 1u << 14;
  } else if (name == "paper") {
    cfg.sampler.steps = 64;
    cfg.sampler.runs = 64;
    cfg.sampler.samples = 1u << 12;
    cfg.sampler.delta_n = 1u << 14;
    cfg.sampler.burn_in = 1u << 14;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
}

std::string t_dir_name(double t) {
  return "T_" + io::fmt12(io::round_sig12(t));
}

SampledEnsemble sample_point(const ExperimentConfig& cfg, double t,
                             bool resume, const Logger& log) {
  validate_common(cfg);
  LmcConfig scfg = cfg.sampler;
  scfg.duration = t;
  validate(scfg);
  return ensemble_at(cfg, scfg, cfg.output_dir / t_dir_name(t), resume, log);
}

PointResult run_point(const ExperimentConfig& cfg, double t, bool resume,
                      const Logger& log) {
  SampledEnsemble ens = sample_point(cfg, t, resume, log);
  AnalysisOutcome o =
      analyze_runs(cfg, t, ens.runs, cfg.output_dir / t_dir_name(t),
                   std::nullopt, log);
  return {std::move(o.record), std::move(o.primary_components), ens.resumed};
}

PointResult analyze_dir(const ExperimentConfig& cfg, const fs::path& dir,
                        const Logger& log) {
  io::EnsembleDir ens = io::read_ensemble(dir);
  AnalysisOutcome o = analyze_runs(cfg, ens.config.duration, ens.runs, dir,
                                   std::nullopt, log);
  return {std::move(o.record), std::move(o.primary_components), true};
}

SweepResult run_sweep(const ExperimentConfig& cfg, bool resume,
                      const Logger& log) {
  validate(cfg);
  io::ensure_dir(cfg.output_dir);
  const auto t0 = std::chrono::steady_clock::now();

  SweepResult out;
  std::vector<std::vector<ComponentSummary>> per_point;
  std::vector<double> grid;
  for (double t : cfg.t_grid) {
    PointResult pr = run_point(cfg, t, resume, log);
    grid.push_back(pr.record.t);
    out.diagram.points.push_back(std::move(pr.record));
    per_point.push_back(std::move(pr.components));
  }

  out.diagram.transitions = detect_transitions(
      out.diagram.points, cfg.analysis.qsl_tol, cfg.analysis.m_threshold);

  if (grid.size() >= 2) {
    try {
      out.curves = trap_tracker(grid, per_point, cfg.analysis.match_tol);
    } catch (const TrackingLost& e) {
      out.tracking_error = e.what();
      say(log, std::string("component tracking failed: ") + e.what());
    }
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  io::write_phase_diagram_json(cfg.output_dir / "phase_diagram.json",
                               out.diagram,
                               out.curves ? &*out.curves : nullptr,
                               out.tracking_error);
  io::write_sweep_manifest(cfg.output_dir / "sweep_manifest.json", cfg.model,
                           cfg.sampler, cfg.t_grid, cfg.metrics, elapsed,
                           cfg.workers);
  return out;
}

io::BetaScanArtifact run_beta_scan(const ExperimentConfig& cfg, double t,
                                   std::span<const double> betas, bool resume,
                                   const Logger& log) {
  validate_common(cfg);
  if (!(t > 0.0)) throw ConfigError("duration must be positive");
  if (betas.empty()) throw ConfigError("no betas to scan");
  std::vector<double> order(betas.begin(), betas.end());
  for (double b : order)
    if (!(b > 0.0)) throw ConfigError("betas must be positive");
  std::sort(order.begin(), order.end(), std::greater<>());
  if (std::adjacent_find(order.begin(), order.end()) != order.end())
    throw ConfigError("repeated beta in scan");

  io::ensure_dir(cfg.output_dir);

  io::BetaScanArtifact art;
  art.t = io::round_sig12(t);
  art.steps = cfg.sampler.steps;

  std::optional<double> frozen;
  for (double beta : order) {
    ExperimentConfig pc = cfg;
    pc.sampler.beta = beta;
    LmcConfig scfg = pc.sampler;
    scfg.duration = t;
    validate(scfg);

    const fs::path dir = cfg.output_dir / ("beta_" + io::fmt12(beta));
    SampledEnsemble ens = ensemble_at(pc, scfg, dir, resume, log);
    AnalysisOutcome o = analyze_runs(pc, t, ens.runs, dir, frozen, log);
    if (!frozen) frozen = o.record.epsilon;

    BetaScanPoint pt;
    pt.beta = io::round_sig12(beta);
    pt.b0 = o.record.b0;
    pt.epsilon = o.record.epsilon;
    pt.magnetized_pair = o.magnetized_pair;
    art.points.push_back(pt);
    std::ostringstream msg;
    msg << "beta=" << io::fmt12(beta) << ": b0=" << pt.b0
        << (pt.magnetized_pair ? ", magnetized pair intact"
                               : ", magnetized pair gone");
    say(log, msg.str());
  }

  try {
    art.barrier = barrier_estimate(art.points, art.steps);
    art.collapsed = true;
  } catch (const NoCollapse& e) {
    art.collapsed = false;
    art.warning = e.what();
  }
  io::write_beta_scan_json(cfg.output_dir / "beta_scan.json", art);
  return art;
}

}  // namespace clpt
