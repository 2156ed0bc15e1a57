#pragma once

#include <span>
#include <string>

#include "clpt/protocol_types.hpp"

namespace clpt {

double magnetization(const Protocol& q);

// Root-mean-square sitewise distance. ShapeMismatch unless lengths agree.
double distance(const Protocol& a, const Protocol& b);

/// s(t) -> -s(T - t): reverse site order and negate. An involution that
// leaves the cost of any protocol unchanged.
Protocol symmetry_transform(const Protocol& q);

Protocol mean_protocol(const SampleSet& s);

enum class Metric { DAvg, DSet, DPrt };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// Set distances. subsample > 0 thins each set to that many protocols
// (evenly strided, deterministic) before the pair sums; it applies to
// d_avg and d_set, while d_prt always uses full-set means.
//
// d_avg averages d over all M_a * M_b ordered pairs; when a and b are the
// same object the i == j diagonal stays in the denominator (its distance
// is zero). d_set is the minimum over cross pairs, skipping i == j for
// self-comparison.
double d_avg(const SampleSet& a, const SampleSet& b, std::size_t subsample = 0);
double d_set(const SampleSet& a, const SampleSet& b, std::size_t subsample = 0);
double d_prt(const SampleSet& a, const SampleSet& b);

double set_distance(const SampleSet& a, const SampleSet& b, Metric m,
                    std::size_t subsample = 0);

// R x R symmetric matrix of set distances (diagonal zero), flattened
// row-major. The parallel kernel and the serial reference produce
// identical bytes; the serial path is kept for tests and benchmarks.
std::vector<double> set_distance_matrix(std::span<const SampleSet> sets,
                                        Metric m, std::size_t subsample);
std::vector<double> set_distance_matrix_serial(std::span<const SampleSet> sets,
                                               Metric m,
                                               std::size_t subsample);

}  // namespace clpt
