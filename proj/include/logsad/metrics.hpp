#pragma once

#include "logsad/calibration.hpp"
#include "logsad/manifest.hpp"
#include "logsad/patch_detector.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace logsad {

struct LabeledScores {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;  // 1 = anomalous

    std::size_t positives() const;
    std::size_t negatives() const { return labels.size() - positives(); }
};

// Mann-Whitney estimate P(anomalous > normal) + P(tie)/2 from tie-averaged
// ranks. Throws ValidationError unless both classes are present.
double auroc(const LabeledScores& data);

struct F1Max {
    double value = 0.0;
    double threshold = 0.0;  // lowest observed score achieving the maximum
};

// Predict anomalous when score >= t, sweeping t over the observed scores.
// Throws ValidationError when there are no positives.
F1Max f1_max(const LabeledScores& data);

inline constexpr std::size_t kPixelEvalSide = 256;

// Nearest-neighbor resize for ground-truth masks.
GridMask resize_mask_nearest(const GridMask& mask, std::size_t side);

// Pixel AUROC over maps bilinearly resized (and masks nearest-resized) to side x side.
double pixel_auroc(const std::vector<AnomalyMap>& maps, const std::vector<GridMask>& ground_truth,
                   std::size_t side = kPixelEvalSide);

// A metric that may be undefined for the given data.
struct MetricValue {
    std::optional<double> value;
    std::string reason;  // why value is absent
};

struct Report {
    std::string category;
    std::size_t n_test = 0;
    std::size_t n_normal = 0;
    std::size_t n_structural = 0;
    std::size_t n_logical = 0;
    MetricValue auroc;
    MetricValue f1_max;
    MetricValue f1_threshold;
    MetricValue auroc_logical;
    MetricValue auroc_structural;
    MetricValue f1_max_logical;
    MetricValue f1_max_structural;
    MetricValue pixel_auroc;
};

// Image-level metrics over the manifest's test split, overall and per
// anomaly type (each type scored against all normal test images). Throws
// ValidationError listing every test image without a record.
Report report(const std::vector<ScoreRecord>& records, const Manifest& manifest);

std::string report_json(const Report& r);
// Flat "metric,value" rows; undefined values are empty.
std::string report_csv(const Report& r);

// Plain arithmetic mean, used for per-category averages.
double category_mean(std::span<const double> values);

// image_id,s_p,s_in,s_c,s,label. Reals use the shortest round-trip form.
std::string scores_csv(const std::vector<ScoreRecord>& records);
void write_scores_csv(const std::vector<ScoreRecord>& records, const std::filesystem::path& destination);
std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& source);

std::string format_real(double v);

}  // namespace logsad
