#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clpt/analysis.hpp"
#include "clpt/lmc.hpp"
#include "clpt/model.hpp"

namespace clpt::io {

inline constexpr int kSchemaVersion = 1;

// All floating-point output goes through these: 12 significant digits.
std::string fmt12(double v);
double round_sig12(double v);

// Rounds everything the serializers would round, and recomputes the
// derived per-sample magnetizations from the rounded protocols, so a run
// analyzed in memory and a run reloaded from disk are the same doubles.
void canonicalize_run(LmcRun& run);

// Manifests store floating-point fields at 12 significant digits, so
// equality against a stored manifest must be checked in that space.
ModelParams round12(ModelParams mp);
LmcConfig round12(LmcConfig cfg);

std::string iso8601_utc_now();

void ensure_dir(const std::filesystem::path& dir);

// Write-to-temp + rename; partial files never appear under the real name.
void write_text_atomic(const std::filesystem::path& p,
                       const std::string& content);

// One row per step boundary:
// t,re_a1..re_a4,im_a1..im_a4,n_x,n_y,n_z,abs_n,entropy
void write_trajectory_csv(const std::filesystem::path& p, const Protocol& q,
                          std::span<const QuantumState> states);

// One protocol per row: s_1,...,s_L,T,L,infidelity
void write_protocol_csv(const std::filesystem::path& p,
                        std::span<const Protocol> protocols,
                        std::span<const double> infidelities);

struct ProtocolFile {
  std::vector<Protocol> protocols;
  std::vector<double> infidelities;  // NaN where the file had none
};

// ConfigError on malformed content, IoError on filesystem trouble.
ProtocolFile read_protocol_csv(const std::filesystem::path& p);

// Per-run artifacts inside an ensemble directory:
//   run_NNNN_samples.csv, run_NNNN_best.csv, run_NNNN_manifest.json
// The manifest repeats the sampler configuration so a run directory is
// self-describing.
void write_run(const std::filesystem::path& dir, const LmcConfig& cfg,
               const LmcRun& run);
LmcRun read_run(const std::filesystem::path& dir, std::uint32_t run_id);

void write_ensemble_manifest(const std::filesystem::path& dir,
                             const ModelParams& mp, const LmcConfig& cfg,
                             double elapsed_seconds, int workers);

struct EnsembleDir {
  ModelParams model;
  LmcConfig config;
  std::vector<LmcRun> runs;
};

EnsembleDir read_ensemble(const std::filesystem::path& dir);

void write_distances_csv(const std::filesystem::path& p,
                         std::span<const DistanceDistribution> dists);
void write_histogram_csv(const std::filesystem::path& p,
                         std::span<const DistanceDistribution> dists);

struct ComponentsArtifact {
  Metric linkage_metric = Metric::DSet;    // decided the partition
  Metric distance_metric = Metric::DAvg;   // measures component_distances
  double t = 0.0;
  ComponentPartition partition;
  std::vector<ComponentSummary> components;
  double filter_margin = 0.0;
  std::vector<std::size_t> optimal_indices;
  OrderParameterResult order;
  TrapReport trap;
};

void write_components_json(const std::filesystem::path& p,
                           const ComponentsArtifact& art);

void write_point_json(const std::filesystem::path& p, const PointRecord& rec);
PointRecord read_point_json(const std::filesystem::path& p);

void write_phase_diagram_json(const std::filesystem::path& p,
                              const PhaseDiagram& pd, const TrapCurves* curves,
                              const std::string& tracking_error);

void write_sweep_manifest(const std::filesystem::path& p, const ModelParams& mp,
                          const LmcConfig& cfg, std::span<const double> t_grid,
                          std::span<const Metric> metrics,
                          double elapsed_seconds, int workers);

struct BetaScanArtifact {
  double t = 0.0;
  std::uint32_t steps = 0;
  std::vector<BetaScanPoint> points;  // any order; serialized as given
  bool collapsed = false;
  BarrierResult barrier;  // meaningful only when collapsed
  std::string warning;    // set on the NoCollapse path
};

void write_beta_scan_json(const std::filesystem::path& p,
                          const BetaScanArtifact& art);

}  // namespace clpt::io
