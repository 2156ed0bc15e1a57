#pragma once

#include <Eigen/Dense>
#include <complex>

namespace clpt {

// Two spin-1/2 basis, fixed everywhere in this codebase:
//   index 0: |up,up>    index 1: |up,down>
//   index 2: |down,up>  index 3: |down,down>
// Spin operators use hbar = 1, eigenvalues +-1/2.

using QuantumState = Eigen::Vector4cd;   // amplitudes in the basis above
using StepUnitary = Eigen::Matrix4cd;    // single-step propagator

// H(s) = -J S1z S2z - h_z (S1z + S2z) - s h_x (S1x + S2x)
//
// h_init / h_target are the *full* transverse coefficients of the static
// endpoint Hamiltonians: start in the ground state of H with transverse
// term -h_init (S1x + S2x), aim at the ground state for -h_target (...).
struct ModelParams {
  double J = 2.0;
  double h_z = 1.0;
  double h_x = 2.2360679774997896964091736687747;  // sqrt(5)
  double h_init = -2.0;
  double h_target = 2.0;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct BlochPoint {
  double n_x = 0.0;
  double n_y = 0.0;
  double n_z = 0.0;
  double norm() const { return std::sqrt(n_x * n_x + n_y * n_y + n_z * n_z); }
};

}  // namespace clpt
