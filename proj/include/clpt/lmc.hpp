#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "clpt/model.hpp"
#include "clpt/protocol_types.hpp"
#include "clpt/quantum.hpp"
#include "clpt/rng.hpp"

namespace clpt {

// Geometric ramp of the inverse temperature over the first part of
// burn-in; after ramp_sweeps (0 means "all of burn-in") beta sits at its
// target. Disabled runs use the target beta throughout.
struct AnnealConfig {
  bool enabled = true;
  double beta_start = 1e2;
  std::uint32_t ramp_sweeps = 0;

  friend bool operator==(const AnnealConfig&, const AnnealConfig&) = default;
};

enum class InitKind { Uniform01, UniformSym, Zero, Custom };

struct InitConfig {
  // Mean-zero start by default: a one-sided draw never reaches the
  // negative-magnetization or symmetric branches once the landscape
  // splits, so ensembles seeded from [0, 1) miss most of the structure
  // they are supposed to count.
  InitKind kind = InitKind::UniformSym;
  std::vector<double> custom;  // only read when kind == Custom

  friend bool operator==(const InitConfig&, const InitConfig&) = default;
};

std::string init_kind_name(InitKind k);
InitKind init_kind_from_name(const std::string& s);  // ConfigError on junk

struct LmcConfig {
  std::uint32_t steps = 64;           // protocol sites L
  double duration = 1.0;              // total time T
  double beta = 1e6;
  double sigma = 1e-2;                // proposal width
  std::uint32_t burn_in = 1u << 14;   // sweeps discarded up front
  std::uint32_t delta_n = 1u << 14;   // sweeps between retained samples
  std::uint32_t samples = 1u << 12;   // retained samples per run (M)
  std::uint32_t runs = 64;            // ensemble size (R)
  std::uint64_t seed = 1;             // ensemble seed; runs derive their own
  AnnealConfig anneal;
  InitConfig init;

  friend bool operator==(const LmcConfig&, const LmcConfig&) = default;
};

// Throws ConfigError on nonsense (beta <= 0, sigma <= 0, zero sites, ...).
void validate(const LmcConfig& cfg);

struct LmcRun {
  SampleSet samples;
  std::vector<double> per_sample_m;   // magnetization of each sample
  double acceptance_rate = 0.0;       // accepted / attempted, post burn-in
  double best_infidelity = 1.0;       // minimum cost seen anywhere in the run
  Protocol best_protocol;
  double min_abs_m = 1.0;             // min |m| over post-burn-in updates
};

struct SamplerCaches;

// Single-site Metropolis walker at fixed model and duration.
//
// Cost evaluations are incremental. The swap symmetry of H(s) splits the
// dynamics into a 3-dim triplet block plus a singlet channel that only
// accrues a protocol-independent phase, so the caches hold triplet-sector
// step propagators u[i], prefix states phi[k] = U_k...U_1 |psi0> and
// suffix states chi[k] = U_{k+1}^dag ... U_L^dag |psi*>; the overlap is
// chi[k]^dag phi[k] + singlet term at every cut k. A proposal at site i
// needs only phi[i], chi[i+1] and one fresh 3x3 eigendecomposition;
// acceptance invalidates entries downstream of i via two watermarks that
// are re-extended lazily. Caches are rebuilt from scratch once per sweep
// so rounding drift cannot accumulate.
class Sampler {
 public:
  Sampler(const ModelParams& mp, const LmcConfig& cfg, std::uint32_t run_id);

  // Draws the starting protocol per cfg.init and builds the caches.
  void init_protocol();

  // One Metropolis attempt at `site`. Returns true on acceptance.
  // Out-of-bounds proposals are rejected outright, never clipped.
  bool attempt_site_update(std::uint32_t site, double beta);

  // L attempts at uniformly random sites (with replacement), then a full
  // cache refresh. Returns the number of accepted moves.
  std::uint32_t sweep(double beta);

  // Full schedule: burn-in with annealing, then cfg.samples retained
  // samples spaced cfg.delta_n sweeps apart.
  LmcRun run();

  double beta_at_sweep(std::uint64_t k) const;  // annealing schedule

  const Protocol& protocol() const { return protocol_; }
  double current_infidelity() const;
  std::uint64_t run_seed() const { return seed_; }

 private:
  void refresh_caches();
  void ensure_phi(std::uint32_t k);  // phi_[0..k] valid on exit
  void ensure_chi(std::uint32_t k);  // chi_[k..L] valid on exit

  ModelParams mp_;
  LmcConfig cfg_;
  std::uint32_t run_id_;
  std::uint64_t seed_;
  Rng rng_;
  double dt_;
  QuantumState psi0_;
  QuantumState target_;
  Protocol protocol_;

  std::shared_ptr<SamplerCaches> caches_;
  std::uint32_t phi_valid_ = 0;  // phi[k] valid for k <= phi_valid_
  std::uint32_t chi_valid_ = 0;  // chi[k] valid for k >= chi_valid_
  std::complex<double> amp_;     // triplet-sector final amplitude
  std::complex<double> singlet_term_;
};

// R independent runs with seeds derive_seed(cfg.seed, run_id). Runs fill
// preassigned slots, so results are identical bytes regardless of thread
// count; the serial twin exists for tests and benchmarks.
std::vector<LmcRun> sample_ensemble(const ModelParams& mp,
                                    const LmcConfig& cfg);
std::vector<LmcRun> sample_ensemble_serial(const ModelParams& mp,
                                           const LmcConfig& cfg);

}  // namespace clpt
