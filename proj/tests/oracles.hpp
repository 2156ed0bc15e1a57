#pragma once

// Test-side references, deliberately independent of the library's
// eigendecomposition path: truncated exponential series and explicit
// matrix products.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "clpt/model.hpp"
#include "clpt/protocol_types.hpp"
#include "clpt/quantum.hpp"
#include "clpt/rng.hpp"

namespace oracles {

using Cd = std::complex<double>;

// exp(-i dt H) as a plain power series. With dt*||H|| well under 1 the
// 20-term tail is below 1e-25, far inside the comparison tolerances.
inline Eigen::Matrix4cd series_propagator(const Eigen::Matrix4d& h, double dt,
                                          int terms = 20) {
  const Eigen::Matrix4cd hc = h.cast<Cd>();
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  Eigen::Matrix4cd term = Eigen::Matrix4cd::Identity();
  const Cd factor(0.0, -dt);
  for (int k = 1; k < terms; ++k) {
    term = (term * hc) * (factor / static_cast<double>(k));
    u += term;
  }
  return u;
}

// States at every step boundary from explicit 4x4 products.
inline std::vector<clpt::QuantumState> product_trajectory(
    const clpt::ModelParams& mp, const clpt::Protocol& q,
    const clpt::QuantumState& psi0, int terms = 24) {
  std::vector<clpt::QuantumState> out;
  out.push_back(psi0);
  const double dt = q.dt();
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  for (double s : q.values) {
    u = series_propagator(clpt::hamiltonian(mp, s), dt, terms) * u;
    out.push_back(u * psi0);
  }
  return out;
}

inline clpt::Protocol random_protocol(clpt::Rng& rng, std::uint32_t steps,
                                      double duration) {
  clpt::Protocol q;
  q.duration = duration;
  q.values.reserve(steps);
  for (std::uint32_t i = 0; i < steps; ++i)
    q.values.push_back(rng.uniform(-1.0, 1.0));
  return q;
}

inline clpt::SampleSet random_set(clpt::Rng& rng, std::size_t count,
                                  std::uint32_t steps, double duration) {
  clpt::SampleSet s;
  for (std::size_t i = 0; i < count; ++i) {
    s.protocols.push_back(random_protocol(rng, steps, duration));
    s.infidelities.push_back(rng.u01());
  }
  return s;
}

}  // namespace oracles
