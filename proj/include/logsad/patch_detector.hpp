#pragma once

#include "logsad/features.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace logsad {

struct CoresetInfo {
    double ratio = 1.0;
    std::uint64_t seed = 0;
    // Per stage, indices into the concatenated patch list, in pick order.
    // Empty when ratio == 1.
    std::array<std::vector<std::size_t>, kStageCount> selected;
};

// Anomaly-free patch features per stage. Immutable once constructed.
class MemoryBank {
public:
    MemoryBank() = default;
    // Throws ValidationError if a stage is empty or a row is not unit norm.
    MemoryBank(std::array<Matrix, kStageCount> stages, std::vector<std::string> source_ids, CoresetInfo coreset);

    const Matrix& stage(std::size_t k) const { return stages_[k]; }
    const std::vector<double>& row_norms(std::size_t k) const { return norms_[k]; }
    const std::vector<std::string>& source_ids() const noexcept { return source_ids_; }
    const CoresetInfo& coreset() const noexcept { return coreset_; }

private:
    std::array<Matrix, kStageCount> stages_;
    std::array<std::vector<double>, kStageCount> norms_;
    std::vector<std::string> source_ids_;
    CoresetInfo coreset_;
};

// Each stage bank concatenates that stage's patches across all inputs, then
// keeps ceil(ratio * total) rows chosen by greedy coreset when ratio < 1.
MemoryBank build_bank(const std::vector<FeatureStack>& features, double coreset_ratio, std::uint64_t seed,
                      std::vector<std::string> source_ids = {});

struct AnomalyMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;  // row-major

    double max() const;
    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

// For every query row: min over bank rows of (1 - cosine). bank_norms may be
// empty, in which case they are computed.
std::vector<double> nearest_cosine_distances(const Matrix& query, const Matrix& bank,
                                             const std::vector<double>& bank_norms = {});

struct PatchResult {
    double score = 0.0;  // max cell of the map
    AnomalyMap map;      // mean of the per-stage nearest-distance grids
};

PatchResult patch_score(const FeatureStack& query, const MemoryBank& bank);

// Bilinear resize to side x side with half-pixel centers (corners not aligned).
AnomalyMap upsample_map(const AnomalyMap& map, std::size_t side);

}  // namespace logsad
