#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace logsad {

inline constexpr std::size_t kStageCount = 4;

enum class Split { train, validation, test };
enum class Label { normal, structural_anomaly, logical_anomaly };

const char* to_string(Split split) noexcept;
const char* to_string(Label label) noexcept;
std::optional<Split> parse_split(const std::string& text) noexcept;
std::optional<Label> parse_label(const std::string& text) noexcept;

struct InterestInstance {
    std::string class_name;
    std::filesystem::path mask_path;
    double area_fraction = 0.0;
};

struct ImageRecord {
    std::string image_id;
    Split split = Split::train;
    Label label = Label::normal;
    std::array<std::filesystem::path, kStageCount> stage_feature_paths;
    std::vector<InterestInstance> interest_instances;
    std::optional<std::filesystem::path> pixel_gt_path;
};

// Paths are stored resolved against the manifest's directory.
struct Manifest {
    std::string category;
    std::vector<ImageRecord> images;

    const ImageRecord* find(const std::string& image_id) const;
};

// Parses and validates a manifest. Every problem found (schema, duplicate
// ids, split/label conflicts, missing files) is collected and reported in
// a single ValidationError.
Manifest load_manifest(const std::filesystem::path& source);

// Same as load_manifest for in-memory JSON text; relative paths resolve
// against base_dir.
Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir,
                        bool check_files = true);

// Writes a manifest with paths relative to the destination's directory.
void save_manifest(const Manifest& manifest, const std::filesystem::path& destination);

}  // namespace logsad
