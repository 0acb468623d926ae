#pragma once

#include "logsad/bank_store.hpp"
#include "logsad/calibration.hpp"
#include "logsad/composition_detector.hpp"
#include "logsad/interest_detector.hpp"
#include "logsad/metrics.hpp"
#include "logsad/patch_detector.hpp"
#include "logsad/rule_spec.hpp"
#include "logsad/text_bank.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace logsad {

inline constexpr double kFullDataCoresetRatio = 0.10;
inline constexpr double kFewShotCoresetRatio = 1.0;

struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path rules;
    std::optional<std::filesystem::path> text_bank;
    std::optional<double> coreset_ratio;  // unset: 0.10 full-data, 1.0 k-shot
    std::uint64_t seed = 0;
    double sigma_floor = kDefaultSigmaFloor;
    double min_area = kDefaultMinArea;
    std::optional<std::size_t> k_shot;
    bool use_composition = true;
    std::optional<std::filesystem::path> output_dir;
    unsigned threads = 0;  // 0: LOGSAD_THREADS, else hardware concurrency

    double effective_coreset_ratio() const;
};

// JSON config; relative paths resolve against the config file's directory.
PipelineConfig load_config(const std::filesystem::path& source);

// Worker count: explicit request, else LOGSAD_THREADS (0 = auto), else hardware.
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. If any call throws,
// the exception from the lowest index is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// Train-split normal images. With k_shot, the first k after a seeded shuffle.
std::vector<const ImageRecord*> select_references(const Manifest& manifest, std::optional<std::size_t> k_shot,
                                                  std::uint64_t seed);

struct LoadedImage {
    std::string image_id;
    FeatureStack stack;
    InterestSet interests;
};

LoadedImage load_image(const ImageRecord& image);

struct References {
    std::vector<LoadedImage> images;

    std::vector<std::string> ids() const;
    std::vector<InterestSet> interest_sets() const;
};

References load_references(const std::vector<const ImageRecord*>& records, unsigned threads = 1);

MemoryBank build_reference_bank(const References& refs, double coreset_ratio, std::uint64_t seed);

// Raw detector scores for one image against a bank and reference sets.
struct RawScores {
    PatchResult patch;
    InterestScore interest;
};

RawScores raw_scores(const LoadedImage& image, const MemoryBank& bank, const std::vector<InterestSet>& references);

// Full-data mode: normal validation images scored against the bank.
// k-shot mode (or no validation images): leave-one-out over the references,
// or a single self-score when only one reference exists.
CalibrationStats calibrate(const Manifest& manifest, const References& refs, const MemoryBank& bank,
                           bool k_shot_mode, double coreset_ratio, std::uint64_t seed, double sigma_floor,
                           unsigned threads = 1);

// Everything needed to score a test image; immutable while scoring.
class ImageScorer {
public:
    ImageScorer(const MemoryBank& bank, std::vector<InterestSet> references, RuleSpec rules, TextBank text_bank,
                CalibrationStats stats, bool use_composition = true);

    struct Output {
        ScoreRecord record;
        AnomalyMap map;
    };

    Output score(const ImageRecord& image) const;
    Output score(const LoadedImage& image, Label label) const;

private:
    const MemoryBank& bank_;
    std::vector<InterestSet> references_;
    RuleSpec rules_;
    TextBank text_bank_;
    CalibrationStats stats_;
    bool use_composition_;
};

// Scores the manifest's test images in manifest order.
std::vector<ImageScorer::Output> score_test_images(const Manifest& manifest, const ImageScorer& scorer,
                                                   unsigned threads);

// Loads rules (min_area default applied) and the text bank, and checks them
// against each other and against the manifest's interest classes.
struct RuleContext {
    RuleSpec rules;
    TextBank text_bank;
};

RuleContext load_rule_context(const std::filesystem::path& rules_path,
                              const std::optional<std::filesystem::path>& text_bank_path, double min_area,
                              const Manifest* manifest);

std::string records_json(const std::vector<ScoreRecord>& records);

// Pixel AUROC over test images that carry a ground-truth mask, plus normal
// test images (all-zero ground truth). Undefined without any masks.
MetricValue pixel_metric(const Manifest& manifest, const std::vector<ImageScorer::Output>& outputs);

struct PipelineResult {
    std::vector<ScoreRecord> scores;
    Report report;
    CalibrationStats stats;
    std::vector<std::string> reference_ids;
};

// Bank -> calibration -> scoring -> evaluation. When output_dir is set,
// writes bank/, calibration.json, scores.csv, records.json, report.json and
// report.csv there.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace logsad
