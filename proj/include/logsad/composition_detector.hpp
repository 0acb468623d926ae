#pragma once

#include "logsad/interest_detector.hpp"
#include "logsad/rule_spec.hpp"
#include "logsad/text_bank.hpp"

#include <map>
#include <string>
#include <vector>

namespace logsad {

struct InstanceFact {
    std::vector<float> feature;  // final-stage pooled vector, unit norm
    double centroid_y = 0.0;
    double centroid_x = 0.0;
    double area_fraction = 0.0;
};

// Per-image facts that rules are checked against.
struct SceneFacts {
    std::size_t grid_height = 0;
    std::size_t grid_width = 0;
    std::map<std::string, std::vector<InstanceFact>> instances;
};

// Zero-shot classification only uses the last (text-aligned) stage.
inline constexpr std::size_t kZeroShotStage = kStageCount - 1;

SceneFacts scene_facts(const InterestSet& interests, std::size_t grid_height, std::size_t grid_width);

// argmax over vocab of cosine(feature, text embedding); the earliest label wins ties.
std::string zero_shot_classify(std::span<const float> feature, const std::vector<std::string>& vocab,
                               const TextBank& bank);

std::size_t count_instances(const SceneFacts& facts, const std::string& class_name, double min_area);

struct Verdict {
    std::string rule_id;
    bool passed = false;
    std::string explanation;
};

Verdict evaluate_rule(const Rule& rule, const SceneFacts& facts, const TextBank& bank);

struct CompositionResult {
    int score = 0;  // 0 when every rule passes, else 1
    std::vector<Verdict> verdicts;
    std::vector<std::string> warnings;
};

CompositionResult composition_score(const std::vector<Rule>& rules, const SceneFacts& facts, const TextBank& bank);

}  // namespace logsad
