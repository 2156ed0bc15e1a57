#include "clpt/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clpt/omp_compat.hpp"

namespace clpt {

void validate_protocol(const Protocol& q) {
  if (q.values.empty()) throw ConfigError("protocol needs at least one step");
  if (!(q.duration > 0.0)) throw ConfigError("protocol duration must be > 0");
  for (double v : q.values)
    if (!(std::abs(v) <= 1.0))
      throw ConfigError("protocol value outside [-1, 1]");
}

double magnetization(const Protocol& q) {
  double sum = 0.0;
  for (double v : q.values) sum += v;
  return sum / static_cast<double>(q.values.size());
}

double distance(const Protocol& a, const Protocol& b) {
  if (a.values.size() != b.values.size())
    throw ShapeMismatch("protocol lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.values.size()));
}

Protocol symmetry_transform(const Protocol& q) {
  Protocol out;
  out.duration = q.duration;
  out.values.resize(q.values.size());
  const std::size_t n = q.values.size();
  for (std::size_t i = 0; i < n; ++i) out.values[i] = -q.values[n - 1 - i];
  return out;
}

Protocol mean_protocol(const SampleSet& s) {
  if (s.protocols.empty()) throw ShapeMismatch("empty sample set");
  Protocol out;
  out.duration = s.protocols.front().duration;
  out.values.assign(s.protocols.front().values.size(), 0.0);
  for (const Protocol& q : s.protocols) {
    if (q.values.size() != out.values.size())
      throw ShapeMismatch("ragged sample set");
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] += q.values[i];
  }
  const double inv = 1.0 / static_cast<double>(s.protocols.size());
  for (double& v : out.values) v *= inv;
  return out;
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::DAvg: return "avg";
    case Metric::DSet: return "set";
    case Metric::DPrt: return "prt";
  }
  return "avg";
}

Metric metric_from_name(const std::string& name) {
  if (name == "avg" || name == "d_avg") return Metric::DAvg;
  if (name == "set" || name == "d_set") return Metric::DSet;
  if (name == "prt" || name == "d_prt") return Metric::DPrt;
  throw ConfigError("unknown metric: " + name);
}

namespace {

// Deterministic thinning: n evenly strided indices starting at 0.
std::vector<std::size_t> thin_indices(std::size_t total, std::size_t n) {
  std::vector<std::size_t> idx;
  if (n == 0 || n >= total) {
    idx.resize(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    return idx;
  }
  const std::size_t stride = total / n;
  idx.reserve(n);
  for (std::size_t i = 0; i < n; ++i) idx.push_back(i * stride);
  return idx;
}

}  // namespace

double d_avg(const SampleSet& a, const SampleSet& b, std::size_t subsample) {
  if (a.protocols.empty() || b.protocols.empty())
    throw ShapeMismatch("empty sample set");
  const auto ia = thin_indices(a.protocols.size(), subsample);
  const auto ib = thin_indices(b.protocols.size(), subsample);
  double sum = 0.0;
  for (std::size_t i : ia)
    for (std::size_t j : ib) sum += distance(a.protocols[i], b.protocols[j]);
  return sum / (static_cast<double>(ia.size()) * static_cast<double>(ib.size()));
}

double d_set(const SampleSet& a, const SampleSet& b, std::size_t subsample) {
  if (a.protocols.empty() || b.protocols.empty())
    throw ShapeMismatch("empty sample set");
  const bool self = &a == &b;
  const auto ia = thin_indices(a.protocols.size(), subsample);
  const auto ib = thin_indices(b.protocols.size(), subsample);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : ia)
    for (std::size_t j : ib) {
      if (self && i == j) continue;
      best = std::min(best, distance(a.protocols[i], b.protocols[j]));
    }
  return best;
}

double d_prt(const SampleSet& a, const SampleSet& b) {
  return distance(mean_protocol(a), mean_protocol(b));
}

double set_distance(const SampleSet& a, const SampleSet& b, Metric m,
                    std::size_t subsample) {
  switch (m) {
    case Metric::DAvg: return d_avg(a, b, subsample);
    case Metric::DSet: return d_set(a, b, subsample);
    case Metric::DPrt: return d_prt(a, b);
  }
  return 0.0;
}

namespace {

std::vector<double> distance_matrix_impl(std::span<const SampleSet> sets,
                                         Metric m, std::size_t subsample,
                                         bool parallel) {
  const std::size_t r = sets.size();
  std::vector<double> mat(r * r, 0.0);
  // Flatten the strict upper triangle so iterations are independent.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(r * (r - 1) / 2);
  for (std::uint32_t i = 0; i < r; ++i)
    for (std::uint32_t j = i + 1; j < r; ++j) pairs.emplace_back(i, j);

  const auto n = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const double d = set_distance(sets[i], sets[j], m, subsample);
    mat[i * r + j] = d;
    mat[j * r + i] = d;
  }
  return mat;
}

}  // namespace

std::vector<double> set_distance_matrix(std::span<const SampleSet> sets,
                                        Metric m, std::size_t subsample) {
  return distance_matrix_impl(sets, m, subsample, true);
}

std::vector<double> set_distance_matrix_serial(std::span<const SampleSet> sets,
                                               Metric m,
                                               std::size_t subsample) {
  return distance_matrix_impl(sets, m, subsample, false);
}

}  // namespace clpt
