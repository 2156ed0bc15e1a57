// Compares the OpenMP kernels against their serial references: the
// run-pair distance matrix and the ensemble sampler. Verifies agreement
// while timing, since the parallel paths must be bit-identical.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "clpt/lmc.hpp"
#include "clpt/omp_compat.hpp"
#include "clpt/protocol.hpp"
#include "clpt/rng.hpp"

namespace {

using clpt::Protocol;
using clpt::SampleSet;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<SampleSet> synthetic_sets(std::size_t r, std::size_t m,
                                      std::uint32_t l) {
  clpt::Rng rng(12345);
  std::vector<SampleSet> sets(r);
  for (std::size_t i = 0; i < r; ++i) {
    sets[i].run_id = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j < m; ++j) {
      Protocol q;
      q.duration = 3.4;
      q.values.reserve(l);
      for (std::uint32_t k = 0; k < l; ++k)
        q.values.push_back(rng.uniform(-1.0, 1.0));
      sets[i].protocols.push_back(std::move(q));
      sets[i].infidelities.push_back(rng.u01());
    }
  }
  return sets;
}

bool equal_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void bench_distances() {
  const auto sets = synthetic_sets(24, 128, 64);
  for (clpt::Metric m : {clpt::Metric::DAvg, clpt::Metric::DSet}) {
    auto t0 = std::chrono::steady_clock::now();
    const auto serial = clpt::set_distance_matrix_serial(sets, m, 0);
    const double ts = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = clpt::set_distance_matrix(sets, m, 0);
    const double tp = seconds_since(t0);

    std::printf("distance_matrix %s serial %.3fs parallel %.3fs x%.2f %s\n",
                clpt::metric_name(m).c_str(), ts, tp, ts / tp,
                equal_bits(serial, parallel) ? "identical" : "MISMATCH");
  }
}

void bench_sampler() {
  clpt::ModelParams mp;
  clpt::LmcConfig cfg;
  cfg.steps = 32;
  cfg.duration = 3.4;
  cfg.runs = 8;
  cfg.samples = 4;
  cfg.delta_n = 256;
  cfg.burn_in = 1u << 12;
  cfg.seed = 99;

  auto t0 = std::chrono::steady_clock::now();
  const auto serial = clpt::sample_ensemble_serial(mp, cfg);
  const double ts = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto parallel = clpt::sample_ensemble(mp, cfg);
  const double tp = seconds_since(t0);

  bool same = serial.size() == parallel.size();
  for (std::size_t i = 0; same && i < serial.size(); ++i) {
    same = serial[i].best_infidelity == parallel[i].best_infidelity &&
           serial[i].acceptance_rate == parallel[i].acceptance_rate &&
           serial[i].min_abs_m == parallel[i].min_abs_m;
    for (std::size_t j = 0; same && j < serial[i].samples.protocols.size();
         ++j)
      same = serial[i].samples.protocols[j].values ==
             parallel[i].samples.protocols[j].values;
  }
  std::printf("sample_ensemble serial %.3fs parallel %.3fs x%.2f %s\n", ts, tp,
              ts / tp, same ? "identical" : "MISMATCH");

  const double sweeps =
      static_cast<double>(cfg.burn_in + cfg.samples * cfg.delta_n) * cfg.runs;
  std::printf("sampler rate: %.0f sweeps/s serial (L=%u)\n", sweeps / ts,
              cfg.steps);
}

}  // namespace

int main() {
  std::printf("threads: %d (OpenMP %s)\n", clpt::omp_threads(),
              clpt::omp_enabled() ? "on" : "off");
  bench_distances();
  bench_sampler();
  return 0;
}
