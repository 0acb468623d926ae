#pragma once

#include "logsad/features.hpp"

#include <cstdint>
#include <vector>

namespace logsad {

// Index of the first center for a given seed.
std::size_t coreset_first_index(std::size_t n_points, std::uint64_t seed);

// Greedy k-center (farthest-point-first) selection under Euclidean distance.
// Starts from `first`; each later pick maximizes its distance to the nearest
// already-selected point, ties going to the lowest index. Returned in pick order.
std::vector<std::size_t> coreset_select_from(const Matrix& points, std::size_t budget, std::size_t first);

// Throws ValidationError unless 1 <= budget <= points.rows.
std::vector<std::size_t> coreset_select(const Matrix& points, std::size_t budget, std::uint64_t seed);

// max over all points of the Euclidean distance to the nearest selected point.
double coverage_radius(const Matrix& points, const std::vector<std::size_t>& selected);

}  // namespace logsad
