#include "clpt/lmc.hpp"

#include <array>
#include <cmath>

#include "clpt/errors.hpp"
#include "clpt/omp_compat.hpp"
#include "clpt/protocol.hpp"

namespace clpt {

std::string init_kind_name(InitKind k) {
  switch (k) {
    case InitKind::Uniform01: return "uniform01";
    case InitKind::UniformSym: return "uniform_sym";
    case InitKind::Zero: return "zero";
    case InitKind::Custom: return "custom";
  }
  return "uniform01";
}

InitKind init_kind_from_name(const std::string& s) {
  if (s == "uniform01") return InitKind::Uniform01;
  if (s == "uniform_sym") return InitKind::UniformSym;
  if (s == "zero") return InitKind::Zero;
  if (s == "custom") return InitKind::Custom;
  throw ConfigError("unknown init kind: " + s);
}

void validate(const LmcConfig& cfg) {
  if (cfg.steps == 0) throw ConfigError("steps must be >= 1");
  if (!(cfg.duration > 0.0)) throw ConfigError("duration must be > 0");
  if (!(cfg.beta > 0.0)) throw ConfigError("beta must be > 0");
  if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (cfg.delta_n == 0) throw ConfigError("delta_n must be >= 1");
  if (cfg.samples == 0) throw ConfigError("samples must be >= 1");
  if (cfg.runs == 0) throw ConfigError("runs must be >= 1");
  if (cfg.anneal.enabled && !(cfg.anneal.beta_start > 0.0))
    throw ConfigError("anneal beta_start must be > 0");
  if (cfg.init.kind == InitKind::Custom) {
    if (cfg.init.custom.size() != cfg.steps)
      throw ShapeMismatch("custom init length != steps");
    for (double v : cfg.init.custom)
      if (!(std::abs(v) <= 1.0))
        throw ConfigError("custom init value outside [-1, 1]");
  }
}

namespace {

// The model Hamiltonian commutes with the two-spin swap for every s, so
// the singlet amplitude only ever picks up the phase exp(-i J/4 dt) per
// step. The sampler therefore works in the total-spin basis
//   {|T+>, |T0>, |T->} (+) {|S>}
// and evolves 3-vectors; the singlet channel collapses to one constant
// term in the final amplitude.

struct Eig3 {
  Eigen::Vector3d w;
  Eigen::Matrix3d V;
};

inline void jacobi3(Eigen::Matrix3d& a, Eigen::Matrix3d& v, int p, int q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double root = std::sqrt(1.0 + tau * tau);
  const double t = tau >= 0.0 ? 1.0 / (tau + root) : 1.0 / (tau - root);
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  const double app = a(p, p);
  const double aqq = a(q, q);
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = a(q, p) = 0.0;
  const int k = 3 - p - q;  // the one untouched index
  const double akp = a(k, p);
  const double akq = a(k, q);
  a(k, p) = a(p, k) = c * akp - s * akq;
  a(k, q) = a(q, k) = s * akp + c * akq;
  for (int r = 0; r < 3; ++r) {
    const double vrp = v(r, p);
    const double vrq = v(r, q);
    v(r, p) = c * vrp - s * vrq;
    v(r, q) = s * vrp + c * vrq;
  }
}

Eig3 eig_sym3(Eigen::Matrix3d a) {
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
  const double thr = a.squaredNorm() * 1e-30;
  for (int sweep = 0; sweep < 24; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off <= thr) break;
    jacobi3(a, v, 0, 1);
    jacobi3(a, v, 0, 2);
    jacobi3(a, v, 1, 2);
  }
  std::array<int, 3> order{0, 1, 2};
  for (int i = 1; i < 3; ++i)
    for (int j = i; j > 0 && a(order[j], order[j]) < a(order[j - 1], order[j - 1]); --j)
      std::swap(order[j], order[j - 1]);
  Eig3 out;
  for (int i = 0; i < 3; ++i) {
    out.w[i] = a(order[i], order[i]);
    out.V.col(i) = v.col(order[i]);
  }
  return out;
}

// Triplet block of H(s) in the {T+, T0, T-} basis; tridiagonal.
inline Eigen::Matrix3d triplet_hamiltonian(const ModelParams& p, double s) {
  const double g = -s * p.h_x / std::sqrt(2.0);
  Eigen::Matrix3d h;
  h << -0.25 * p.J - p.h_z, g, 0.0,
       g, 0.25 * p.J, g,
       0.0, g, -0.25 * p.J + p.h_z;
  return h;
}

inline Eigen::Vector3cd triplet_part(const QuantumState& psi) {
  const double r = 1.0 / std::sqrt(2.0);
  return {psi[0], r * (psi[1] + psi[2]), psi[3]};
}

inline std::complex<double> singlet_part(const QuantumState& psi) {
  return (psi[1] - psi[2]) / std::sqrt(2.0);
}

using Cd = std::complex<double>;

inline std::array<Cd, 3> step_phases(const Eigen::Vector3d& w, double dt) {
  std::array<Cd, 3> ph;
  for (int k = 0; k < 3; ++k) {
    const double a = dt * w[k];
    ph[k] = {std::cos(a), -std::sin(a)};
  }
  return ph;
}

inline Eigen::Matrix3cd propagator3(const Eig3& e,
                                    const std::array<Cd, 3>& ph) {
  Eigen::Matrix3cd u;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Cd sum = 0.0;
      for (int k = 0; k < 3; ++k) sum += ph[k] * (e.V(i, k) * e.V(j, k));
      u(i, j) = sum;
    }
  return u;
}

}  // namespace

// Sampler caches live in the triplet sector. u3_ shadows u_ from the
// header declaration; only 3x3 blocks are stored.
struct SamplerCaches {
  std::vector<Eigen::Matrix3cd> u;
  std::vector<Eigen::Vector3cd> phi;
  std::vector<Eigen::Vector3cd> chi;
};

Sampler::Sampler(const ModelParams& mp, const LmcConfig& cfg,
                 std::uint32_t run_id)
    : mp_(mp),
      cfg_(cfg),
      run_id_(run_id),
      seed_(derive_seed(cfg.seed, run_id)),
      rng_(seed_),
      dt_(cfg.duration / static_cast<double>(cfg.steps)) {
  validate(cfg_);
  psi0_ = initial_state(mp_);
  target_ = target_state(mp_);
  init_protocol();
}

void Sampler::init_protocol() {
  const std::uint32_t n = cfg_.steps;
  protocol_.duration = cfg_.duration;
  protocol_.values.resize(n);
  switch (cfg_.init.kind) {
    case InitKind::Uniform01:
      for (auto& v : protocol_.values) v = rng_.u01();
      break;
    case InitKind::UniformSym:
      for (auto& v : protocol_.values) v = rng_.uniform(-1.0, 1.0);
      break;
    case InitKind::Zero:
      for (auto& v : protocol_.values) v = 0.0;
      break;
    case InitKind::Custom:
      protocol_.values = cfg_.init.custom;
      break;
  }

  caches_ = std::make_shared<SamplerCaches>();
  caches_->u.resize(n);
  caches_->phi.resize(n + 1);
  caches_->chi.resize(n + 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    const Eig3 e = eig_sym3(triplet_hamiltonian(mp_, protocol_.values[i]));
    caches_->u[i] = propagator3(e, step_phases(e.w, dt_));
  }

  // Singlet channel: constant phase exp(-i J/4 T) on a swap-invariant
  // amplitude, independent of the protocol.
  const double a = 0.25 * mp_.J * cfg_.duration;
  singlet_term_ = std::conj(singlet_part(target_)) * singlet_part(psi0_) *
                  Cd{std::cos(a), -std::sin(a)};

  refresh_caches();
}

void Sampler::refresh_caches() {
  auto& c = *caches_;
  const std::uint32_t n = cfg_.steps;
  c.phi[0] = triplet_part(psi0_);
  for (std::uint32_t k = 0; k < n; ++k) c.phi[k + 1] = c.u[k] * c.phi[k];
  c.chi[n] = triplet_part(target_);
  for (std::uint32_t k = n; k > 0; --k)
    c.chi[k - 1] = c.u[k - 1].adjoint() * c.chi[k];
  phi_valid_ = n;
  chi_valid_ = 0;
  amp_ = c.chi[n].dot(c.phi[n]);
}

void Sampler::ensure_phi(std::uint32_t k) {
  auto& c = *caches_;
  for (; phi_valid_ < k; ++phi_valid_)
    c.phi[phi_valid_ + 1] = c.u[phi_valid_] * c.phi[phi_valid_];
}

void Sampler::ensure_chi(std::uint32_t k) {
  auto& c = *caches_;
  for (; chi_valid_ > k; --chi_valid_)
    c.chi[chi_valid_ - 1] = c.u[chi_valid_ - 1].adjoint() * c.chi[chi_valid_];
}

double Sampler::current_infidelity() const {
  return std::max(0.0, 1.0 - std::norm(amp_ + singlet_term_));
}

bool Sampler::attempt_site_update(std::uint32_t site, double beta) {
  const double prop = protocol_.values[site] + cfg_.sigma * rng_.normal();
  if (!(std::abs(prop) <= 1.0)) return false;  // reject, never clip

  ensure_phi(site);
  ensure_chi(site + 1);
  auto& c = *caches_;

  const Eig3 e = eig_sym3(triplet_hamiltonian(mp_, prop));
  const auto ph = step_phases(e.w, dt_);
  // <chi_{i+1}| U'(prop) |phi_i> through the eigenbasis; U' itself is
  // only assembled if the move is accepted.
  const Eigen::Vector3cd a = e.V.transpose() * c.phi[site];
  const Eigen::Vector3cd b = e.V.transpose() * c.chi[site + 1];
  Cd amp_new = 0.0;
  for (int k = 0; k < 3; ++k) amp_new += std::conj(b[k]) * ph[k] * a[k];

  // delta = I_old - I_new; accept iff u < exp(-beta * (I_new - I_old)).
  const double delta = std::norm(amp_new + singlet_term_) -
                       std::norm(amp_ + singlet_term_);
  if (rng_.u01() >= std::exp(beta * delta)) return false;

  protocol_.values[site] = prop;
  c.u[site] = propagator3(e, ph);
  amp_ = amp_new;
  if (site < phi_valid_) phi_valid_ = site;
  if (site + 1 > chi_valid_) chi_valid_ = site + 1;
  return true;
}

std::uint32_t Sampler::sweep(double beta) {
  std::uint32_t accepted = 0;
  for (std::uint32_t t = 0; t < cfg_.steps; ++t)
    accepted += attempt_site_update(rng_.index(cfg_.steps), beta) ? 1 : 0;
  refresh_caches();
  return accepted;
}

double Sampler::beta_at_sweep(std::uint64_t k) const {
  if (!cfg_.anneal.enabled || cfg_.burn_in == 0) return cfg_.beta;
  std::uint64_t ramp = cfg_.anneal.ramp_sweeps == 0
                           ? cfg_.burn_in
                           : std::min<std::uint64_t>(cfg_.anneal.ramp_sweeps,
                                                     cfg_.burn_in);
  if (k >= ramp) return cfg_.beta;
  const double frac = static_cast<double>(k + 1) / static_cast<double>(ramp);
  return cfg_.anneal.beta_start *
         std::pow(cfg_.beta / cfg_.anneal.beta_start, frac);
}

LmcRun Sampler::run() {
  LmcRun out;
  out.samples.run_id = run_id_;
  out.samples.seed = seed_;
  out.samples.protocols.reserve(cfg_.samples);
  out.samples.infidelities.reserve(cfg_.samples);
  out.per_sample_m.reserve(cfg_.samples);

  out.best_infidelity = current_infidelity();
  out.best_protocol = protocol_;

  auto note_best = [&] {
    const double inf = current_infidelity();
    if (inf < out.best_infidelity) {
      out.best_infidelity = inf;
      out.best_protocol = protocol_;
    }
  };

  for (std::uint64_t k = 0; k < cfg_.burn_in; ++k) {
    sweep(beta_at_sweep(k));
    note_best();
  }

  std::uint64_t attempted = 0;
  std::uint64_t accepted = 0;
  out.min_abs_m = std::abs(magnetization(protocol_));
  for (std::uint32_t s = 0; s < cfg_.samples; ++s) {
    for (std::uint32_t j = 0; j < cfg_.delta_n; ++j) {
      accepted += sweep(cfg_.beta);
      attempted += cfg_.steps;
      note_best();
      out.min_abs_m =
          std::min(out.min_abs_m, std::abs(magnetization(protocol_)));
    }
    out.samples.protocols.push_back(protocol_);
    out.samples.infidelities.push_back(current_infidelity());
    out.per_sample_m.push_back(magnetization(protocol_));
  }
  out.acceptance_rate =
      attempted == 0 ? 0.0
                     : static_cast<double>(accepted) / static_cast<double>(attempted);
  return out;
}

namespace {

std::vector<LmcRun> ensemble_impl(const ModelParams& mp, const LmcConfig& cfg,
                                  bool parallel) {
  validate(cfg);
  std::vector<LmcRun> out(cfg.runs);
  const auto n = static_cast<std::int64_t>(cfg.runs);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t r = 0; r < n; ++r) {
    Sampler s(mp, cfg, static_cast<std::uint32_t>(r));
    out[static_cast<std::size_t>(r)] = s.run();
  }
  return out;
}

}  // namespace

std::vector<LmcRun> sample_ensemble(const ModelParams& mp,
                                    const LmcConfig& cfg) {
  return ensemble_impl(mp, cfg, true);
}

std::vector<LmcRun> sample_ensemble_serial(const ModelParams& mp,
                                           const LmcConfig& cfg) {
  return ensemble_impl(mp, cfg, false);
}

}  // namespace clpt
