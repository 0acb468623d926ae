#include "logsad/interest_detector.hpp"

#include "logsad/errors.hpp"

#include <algorithm>

namespace logsad {

std::vector<MaskedInstance> load_instances(const ImageRecord& image) {
    std::vector<MaskedInstance> out;
    out.reserve(image.interest_instances.size());
    for (const auto& ii : image.interest_instances)
        out.push_back({ii.class_name, load_mask(ii.mask_path), ii.area_fraction});
    return out;
}

InterestSet pool_interests(const FeatureStack& stack, const std::vector<MaskedInstance>& instances) {
    stack.check_shape();
    InterestSet set;
    set.entries.reserve(instances.size());
    for (std::size_t n = 0; n < instances.size(); ++n) {
        const auto& inst = instances[n];
        const std::string name = "instance " + std::to_string(n) + " ('" + inst.class_name + "')";
        if (inst.mask.height != stack.height() || inst.mask.width != stack.width())
            throw ValidationError(name + ": mask " + std::to_string(inst.mask.height) + "x" +
                                  std::to_string(inst.mask.width) + " does not match the " +
                                  std::to_string(stack.height()) + "x" + std::to_string(stack.width()) +
                                  " feature grid");
        const std::size_t count = inst.mask.count();
        if (count == 0) throw ValidationError(name + ": degenerate (empty) mask");

        InterestEntry e;
        e.class_name = inst.class_name;
        e.area_fraction = inst.area_fraction;
        for (std::size_t c = 0; c < inst.mask.cells.size(); ++c) {
            if (!inst.mask.cells[c]) continue;
            e.centroid_y += static_cast<double>(c / stack.width());
            e.centroid_x += static_cast<double>(c % stack.width());
        }
        e.centroid_y /= static_cast<double>(count);
        e.centroid_x /= static_cast<double>(count);

        for (std::size_t k = 0; k < kStageCount; ++k) {
            const auto& grid = stack.stages[k];
            std::vector<double> sum(grid.dim(), 0.0);
            for (std::size_t c = 0; c < inst.mask.cells.size(); ++c) {
                if (!inst.mask.cells[c]) continue;
                const auto row = grid.patches.row(c);
                for (std::size_t i = 0; i < row.size(); ++i) sum[i] += row[i];
            }
            auto& vec = e.stage_vectors[k];
            vec.resize(grid.dim());
            for (std::size_t i = 0; i < sum.size(); ++i) vec[i] = static_cast<float>(sum[i] / static_cast<double>(count));
            try {
                normalize_in_place(vec);
            } catch (const ValidationError&) {
                throw ValidationError(name + ": pooled feature at stage " + std::to_string(k) + " is zero");
            }
        }
        set.entries.push_back(std::move(e));
    }
    return set;
}

double matching_cost(std::span<const float> p, std::span<const float> q) { return cosine_distance(p, q); }

double matching_cost(const InterestEntry& p, const InterestEntry& q) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kStageCount; ++k) sum += matching_cost(p.stage_vectors[k], q.stage_vectors[k]);
    return sum / static_cast<double>(kStageCount);
}

CostMatrix interest_cost_matrix(const InterestSet& query, const InterestSet& reference) {
    CostMatrix m(query.size(), reference.size());
    for (std::size_t i = 0; i < query.size(); ++i)
        for (std::size_t j = 0; j < reference.size(); ++j) m(i, j) = matching_cost(query.entries[i], reference.entries[j]);
    return m;
}

double set_matching_cost(const InterestSet& query, const InterestSet& reference) {
    if (query.empty() && reference.empty()) return 0.0;
    if (query.empty() || reference.empty()) return kMaxInterestCost;
    const double n = static_cast<double>(std::min(query.size(), reference.size()));
    return std::clamp(optimal_assignment_cost(interest_cost_matrix(query, reference)) / n, 0.0, kMaxInterestCost);
}

InterestScore interest_score(const InterestSet& query, const std::vector<InterestSet>& references) {
    if (references.empty()) throw ValidationError("interest scoring needs at least one reference set");
    InterestScore s;
    if (query.empty()) {
        s.value = kMaxInterestCost;
        s.no_interests = true;
        return s;
    }
    s.value = kMaxInterestCost;
    for (std::size_t r = 0; r < references.size(); ++r) {
        const double c = set_matching_cost(query, references[r]);
        if (c < s.value || r == 0) {
            s.value = c;
            s.nearest_reference = r;
        }
    }
    return s;
}

}  // namespace logsad
