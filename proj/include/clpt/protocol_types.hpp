#pragma once

#include <cstdint>
#include <vector>

#include "clpt/errors.hpp"

namespace clpt {

// Piecewise-constant control: values[i] on the i-th of L equal slices of
// [0, duration]. Bounds |values[i]| <= 1 are enforced at construction
// boundaries (sampling, file IO), not per access.
struct Protocol {
  std::vector<double> values;
  double duration = 0.0;

  std::size_t steps() const { return values.size(); }
  double dt() const { return duration / static_cast<double>(values.size()); }
};

// Throws ConfigError unless L >= 1, duration > 0 and every value is in
// [-1, 1] (NaN rejected).
void validate_protocol(const Protocol& q);

// One run's retained samples plus provenance.
struct SampleSet {
  std::vector<Protocol> protocols;
  std::vector<double> infidelities;  // cost of each sample, same order
  std::uint32_t run_id = 0;
  std::uint64_t seed = 0;            // derived per-run seed
};

}  // namespace clpt
