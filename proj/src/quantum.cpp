#include "clpt/quantum.hpp"

#include <array>
#include <cmath>

#include "clpt/errors.hpp"

namespace clpt {

namespace {

// One Jacobi rotation in the (p, q) plane, applied to a and accumulated
// into v. Annihilates a(p,q).
inline void jacobi_rotate(Eigen::Matrix4d& a, Eigen::Matrix4d& v, int p,
                          int q) {
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
  for (int k = 0; k < 4; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = a(p, k) = c * akp - s * akq;
    a(k, q) = a(q, k) = s * akp + c * akq;
  }
  for (int k = 0; k < 4; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

inline double off_diag_sq(const Eigen::Matrix4d& a) {
  return a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(0, 3) * a(0, 3) +
         a(1, 2) * a(1, 2) + a(1, 3) * a(1, 3) + a(2, 3) * a(2, 3);
}

}  // namespace

EigSym4 eig_sym4(Eigen::Matrix4d a) {
  Eigen::Matrix4d v = Eigen::Matrix4d::Identity();
  const double scale = a.squaredNorm();
  const double thr = scale > 0.0 ? scale * 1e-30 : 0.0;
  for (int sweep = 0; sweep < 24 && off_diag_sq(a) > thr; ++sweep) {
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 4; ++q) jacobi_rotate(a, v, p, q);
  }

  std::array<int, 4> order{0, 1, 2, 3};
  for (int i = 1; i < 4; ++i)  // insertion sort by eigenvalue
    for (int j = i; j > 0 && a(order[j], order[j]) < a(order[j - 1], order[j - 1]); --j)
      std::swap(order[j], order[j - 1]);

  EigSym4 out;
  for (int i = 0; i < 4; ++i) {
    out.w[i] = a(order[i], order[i]);
    out.V.col(i) = v.col(order[i]);
  }
  return out;
}

namespace {

// -J S1z S2z - h_z (S1z+S2z) - hx_total (S1x+S2x) in the fixed basis.
Eigen::Matrix4d build(double j, double h_z, double hx_total) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(0, 0) = -0.25 * j - h_z;
  h(1, 1) = 0.25 * j;
  h(2, 2) = 0.25 * j;
  h(3, 3) = -0.25 * j + h_z;
  const double x = -0.5 * hx_total;
  h(0, 1) = h(1, 0) = x;
  h(0, 2) = h(2, 0) = x;
  h(1, 3) = h(3, 1) = x;
  h(2, 3) = h(3, 2) = x;
  return h;
}

}  // namespace

Eigen::Matrix4d hamiltonian(const ModelParams& p, double s) {
  return build(p.J, p.h_z, s * p.h_x);
}

Eigen::Matrix4d endpoint_hamiltonian(const ModelParams& p, double h_coeff) {
  return build(p.J, p.h_z, h_coeff);
}

QuantumState ground_state(const Eigen::Matrix4d& h, double gap_tol) {
  const EigSym4 e = eig_sym4(h);
  if (e.w[1] - e.w[0] < gap_tol)
    throw DegenerateGroundState(
        "ground state ill-defined: spectral gap " +
        std::to_string(e.w[1] - e.w[0]) + " below tolerance");
  Eigen::Vector4d g = e.V.col(0);
  int imax = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(g[i]) > std::abs(g[imax])) imax = i;
  if (g[imax] < 0.0) g = -g;
  return g.cast<std::complex<double>>();
}

QuantumState initial_state(const ModelParams& p) {
  return ground_state(endpoint_hamiltonian(p, p.h_init));
}

QuantumState target_state(const ModelParams& p) {
  return ground_state(endpoint_hamiltonian(p, p.h_target));
}

StepUnitary propagator_from_eig(const EigSym4& e, double dt) {
  std::array<std::complex<double>, 4> ph;
  for (int k = 0; k < 4; ++k) {
    const double a = dt * e.w[k];
    ph[k] = {std::cos(a), -std::sin(a)};
  }
  StepUnitary u;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      std::complex<double> sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += ph[k] * (e.V(i, k) * e.V(j, k));
      u(i, j) = sum;
    }
  return u;
}

StepUnitary step_propagator(const ModelParams& p, double s, double dt) {
  return propagator_from_eig(eig_sym4(hamiltonian(p, s)), dt);
}

QuantumState evolve(const ModelParams& p, const Protocol& q,
                    const QuantumState& psi0) {
  validate_protocol(q);
  const double dt = q.dt();
  QuantumState psi = psi0;
  for (double s : q.values) psi = step_propagator(p, s, dt) * psi;
  return psi;
}

std::vector<QuantumState> evolve_trajectory(const ModelParams& p,
                                            const Protocol& q,
                                            const QuantumState& psi0) {
  validate_protocol(q);
  const double dt = q.dt();
  std::vector<QuantumState> states;
  states.reserve(q.steps() + 1);
  states.push_back(psi0);
  for (double s : q.values)
    states.push_back(step_propagator(p, s, dt) * states.back());
  return states;
}

std::complex<double> final_amplitude(const ModelParams& p, const Protocol& q) {
  const QuantumState fin = evolve(p, q, initial_state(p));
  return target_state(p).dot(fin);  // conjugate-linear in the target
}

double infidelity(const ModelParams& p, const Protocol& q) {
  const double f = std::norm(final_amplitude(p, q));
  return 1.0 - f;
}

double energy(const ModelParams& p, double s, const QuantumState& psi) {
  const Eigen::Matrix4d h = hamiltonian(p, s);
  return psi.dot(h.cast<std::complex<double>>() * psi).real();
}

BlochPoint reduced_bloch(const QuantumState& psi) {
  // rho1(a,b) = sum_c psi[2a+c] conj(psi[2b+c])
  const std::complex<double> r01 =
      psi[0] * std::conj(psi[2]) + psi[1] * std::conj(psi[3]);
  const double r00 = std::norm(psi[0]) + std::norm(psi[1]);
  const double r11 = std::norm(psi[2]) + std::norm(psi[3]);
  BlochPoint n;
  n.n_x = 2.0 * r01.real();
  n.n_y = -2.0 * r01.imag();
  n.n_z = r00 - r11;
  return n;
}

double entanglement_entropy(double bloch_norm) {
  const double n = std::clamp(bloch_norm, 0.0, 1.0);
  const double lp = 0.5 * (1.0 + n);
  const double lm = 0.5 * (1.0 - n);
  double s = 0.0;
  if (lp > 0.0) s -= lp * std::log(lp);
  if (lm > 0.0) s -= lm * std::log(lm);
  return s;
}

}  // namespace clpt
