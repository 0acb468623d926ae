#pragma once

#include "logsad/features.hpp"
#include "logsad/hungarian.hpp"

#include <array>
#include <string>
#include <vector>

namespace logsad {

// One segmented instance with its mask already loaded.
struct MaskedInstance {
    std::string class_name;
    GridMask mask;
    double area_fraction = 0.0;
};

std::vector<MaskedInstance> load_instances(const ImageRecord& image);

struct InterestEntry {
    std::string class_name;
    std::array<std::vector<float>, kStageCount> stage_vectors;  // unit norm
    double area_fraction = 0.0;
    double centroid_y = 0.0;  // grid coordinates of the mask centroid
    double centroid_x = 0.0;
};

struct InterestSet {
    std::vector<InterestEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

// Average-pools each instance's masked patches per stage and unit-normalizes.
// Throws ValidationError naming the instance when a mask is empty or not
// aligned with the feature grid.
InterestSet pool_interests(const FeatureStack& stack, const std::vector<MaskedInstance>& instances);

// 1 - cos(p, q).
double matching_cost(std::span<const float> p, std::span<const float> q);
// Mean of per-stage matching costs.
double matching_cost(const InterestEntry& p, const InterestEntry& q);

CostMatrix interest_cost_matrix(const InterestSet& query, const InterestSet& reference);

// Optimal matched cost divided by min(i, j). Returns the maximal cost 2 when
// exactly one side is empty and 0 when both are.
double set_matching_cost(const InterestSet& query, const InterestSet& reference);

inline constexpr double kMaxInterestCost = 2.0;

struct InterestScore {
    double value = 0.0;
    bool no_interests = false;  // query had no instances
    std::size_t nearest_reference = 0;
};

// Minimum of set_matching_cost over the references.
InterestScore interest_score(const InterestSet& query, const std::vector<InterestSet>& references);

}  // namespace logsad
