#pragma once

#include <vector>

#include "clpt/model.hpp"
#include "clpt/protocol_types.hpp"

namespace clpt {

// Eigensystem of a real symmetric 4x4: A = V diag(w) V^T, w ascending,
// columns of V orthonormal.
struct EigSym4 {
  Eigen::Vector4d w;
  Eigen::Matrix4d V;
};

// Cyclic Jacobi. Hot path of the sampler: no heap, converges to
// off-diagonal norm < 1e-14 * ||A|| in a handful of sweeps at this size.
EigSym4 eig_sym4(Eigen::Matrix4d a);

// H(s) = -J S1z S2z - h_z (S1z+S2z) - s h_x (S1x+S2x), real symmetric.
Eigen::Matrix4d hamiltonian(const ModelParams& p, double s);

// Static Hamiltonian whose transverse coefficient is h_coeff itself
// (not scaled by h_x): -J S1z S2z - h_z (S1z+S2z) - h_coeff (S1x+S2x).
Eigen::Matrix4d endpoint_hamiltonian(const ModelParams& p, double h_coeff);

// Lowest eigenvector, sign-fixed so its largest-magnitude entry is
// positive. Throws DegenerateGroundState when the gap is below gap_tol.
QuantumState ground_state(const Eigen::Matrix4d& h, double gap_tol = 1e-10);

QuantumState initial_state(const ModelParams& p);   // ground of h_init side
QuantumState target_state(const ModelParams& p);    // ground of h_target side

// exp(-i dt H(s)) through the eigendecomposition above.
StepUnitary step_propagator(const ModelParams& p, double s, double dt);
StepUnitary propagator_from_eig(const EigSym4& e, double dt);

// Piecewise-constant evolution of |psi0> under protocol q.
QuantumState evolve(const ModelParams& p, const Protocol& q,
                    const QuantumState& psi0);

// States at every step boundary: result[k] is the state after k steps,
// result[0] = psi0, size L+1.
std::vector<QuantumState> evolve_trajectory(const ModelParams& p,
                                            const Protocol& q,
                                            const QuantumState& psi0);

// <target| U(q) |init> and the cost I = 1 - |amplitude|^2.
std::complex<double> final_amplitude(const ModelParams& p, const Protocol& q);
double infidelity(const ModelParams& p, const Protocol& q);

double energy(const ModelParams& p, double s, const QuantumState& psi);

// Bloch vector of qubit 1 after tracing out qubit 2.
BlochPoint reduced_bloch(const QuantumState& psi);

// Entanglement entropy (natural log) of either qubit, from |n|.
double entanglement_entropy(double bloch_norm);

}  // namespace clpt
