#pragma once

#include "logsad/composition_detector.hpp"
#include "logsad/manifest.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace logsad {

inline constexpr double kDefaultSigmaFloor = 1e-6;

struct CalibrationStats {
    double mu_p = 0.0;
    double sigma_p = 1.0;
    double mu_in = 0.0;
    double sigma_in = 1.0;
    std::size_t n_samples = 0;
    double sigma_floor = kDefaultSigmaFloor;
    std::vector<std::string> flags;
    std::vector<std::string> source_ids;
    std::string mode;  // "validation", "leave_one_out" or "single_reference"

    // Throws ValidationError unless both sigmas are >= sigma_floor > 0 and n_samples >= 1.
    void check() const;
};

// Arithmetic means and n-1 standard deviations. A sigma below the floor
// (including the undefined n == 1 case) is clamped and flagged.
CalibrationStats fit_stats(std::span<const double> patch_scores, std::span<const double> interest_scores,
                           double sigma_floor = kDefaultSigmaFloor);

// Logistic function kept strictly inside (0, 1) so a calibrated score can
// never tie with a composition violation.
double sigmoid(double x);

struct FusedScore {
    double z_p = 0.0;
    double z_in = 0.0;
    double s = 0.0;
};

FusedScore fuse_detail(double s_p, double s_in, int s_c, const CalibrationStats& stats);
// max(g(z_p), g(z_in), s_c)
double fuse(double s_p, double s_in, int s_c, const CalibrationStats& stats);

struct ScoreRecord {
    std::string image_id;
    Label label = Label::normal;
    double s_p = 0.0;
    double s_in = 0.0;
    int s_c = 0;
    double s = 0.0;
    std::vector<Verdict> verdicts;
    std::vector<std::string> flags;
};

void save_stats(const CalibrationStats& stats, const std::filesystem::path& destination);
CalibrationStats load_stats(const std::filesystem::path& source);

}  // namespace logsad
