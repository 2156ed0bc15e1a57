#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clpt/analysis.hpp"
#include "clpt/io.hpp"
#include "clpt/lmc.hpp"
#include "clpt/model.hpp"

namespace clpt {

struct AnalysisConfig {
  std::optional<double> epsilon;  // fixed clustering scale; empty = automatic
  GapConfig gap;
  HistogramConfig hist;
  double qsl_tol = 1e-4;
  std::size_t subsample = 256;   // per-set thinning for avg/set distances
  // Runs count as optimal within this of the ensemble best. Tight on
  // purpose: a component stuck even a few 1e-3 above the optimum is a
  // trap, not part of the optimal level set, and must not inflate b0.
  double filter_margin = 1e-3;
  double trap_margin = 0.02;     // trapped-component classification
  double m_threshold = 0.05;     // magnetized / symmetric boundary
  double match_tol = 0.3;        // cross-duration component matching
};

struct ExperimentConfig {
  ModelParams model;
  LmcConfig sampler;
  std::vector<double> t_grid;
  std::vector<Metric> metrics{Metric::DAvg, Metric::DSet, Metric::DPrt};
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";
  int workers = 1;
};

// ConfigError unless the grid is nonempty, strictly increasing and all
// positive, workers >= 1, metrics are nonempty without repeats, the
// analysis thresholds are positive, and the sampler config validates.
void validate(const ExperimentConfig& cfg);

// desk:  R=32 runs, M=2^8 samples every 2^10 sweeps, L=32 sites.
// paper: R=64 runs, M=2^12 samples every 2^14 sweeps, L=64 sites.
// Anything else is a ConfigError.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

// Directory under output_dir holding one duration's artifacts, e.g. T_3.4.
std::string t_dir_name(double t);

using Logger = std::function<void(const std::string&)>;

struct SampledEnsemble {
  std::vector<LmcRun> runs;  // canonicalized, matching the on-disk bytes
  bool resumed = false;
};

// Sampling half of the pipeline: produce (or reload) the ensemble under
// output_dir/T_*/ and write the per-run artifacts plus ensemble.json,
// which marks the sampling complete; a matching ensemble already on disk
// is reloaded instead of recomputed.
SampledEnsemble sample_point(const ExperimentConfig& cfg, double t,
                             bool resume = true, const Logger& log = {});

struct PointResult {
  PointRecord record;
  // avg-metric component summaries of the optimality-filtered partition,
  // in label order; the sweep's cross-duration tracking consumes these.
  std::vector<ComponentSummary> components;
  bool resumed = false;
};

// The full pipeline at one duration: sample an ensemble (or reload one a
// previous invocation left behind), write per-run artifacts, compute the
// requested distance distributions over the optimality-filtered runs,
// cluster, and write distances.csv, histograms.csv, components.json,
// and finally point.json, whose presence marks the point complete and
// makes the next invocation skip straight to analysis.
PointResult run_point(const ExperimentConfig& cfg, double t,
                      bool resume = true, const Logger& log = {});

// Analysis half alone, over a point directory whose sampling artifacts
// already exist; duration and sampler settings come from the directory,
// analysis settings and metrics from cfg.
PointResult analyze_dir(const ExperimentConfig& cfg,
                        const std::filesystem::path& dir,
                        const Logger& log = {});

struct SweepResult {
  PhaseDiagram diagram;
  std::optional<TrapCurves> curves;  // empty when tracking failed
  std::string tracking_error;        // why, when it did
};

// run_point over the whole grid in order, then transition detection and
// cross-duration component tracking; writes phase_diagram.json and
// sweep_manifest.json under output_dir. A failure at one duration aborts
// the sweep but leaves every completed point resumable.
SweepResult run_sweep(const ExperimentConfig& cfg, bool resume = true,
                      const Logger& log = {});

// The single-duration pipeline repeated across betas (descending), each
// checkpointed under beta_*/ like a sweep point. The clustering scale is
// fixed by the largest beta and reused verbatim below it, so a component
// pair that merges on the way down is a real collapse and not a moving
// threshold. Writes beta_scan.json; a scan where the magnetized pair
// never collapses reports that in the artifact instead of throwing.
io::BetaScanArtifact run_beta_scan(const ExperimentConfig& cfg, double t,
                                   std::span<const double> betas,
                                   bool resume = true, const Logger& log = {});

}  // namespace clpt
