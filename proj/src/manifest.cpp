#include "logsad/manifest.hpp"

#include "logsad/errors.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace logsad {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

const char* to_string(Label label) noexcept {
    switch (label) {
        case Label::normal: return "normal";
        case Label::structural_anomaly: return "structural_anomaly";
        case Label::logical_anomaly: return "logical_anomaly";
    }
    return "?";
}

std::optional<Split> parse_split(const std::string& text) noexcept {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    return std::nullopt;
}

std::optional<Label> parse_label(const std::string& text) noexcept {
    if (text == "normal") return Label::normal;
    if (text == "structural_anomaly") return Label::structural_anomaly;
    if (text == "logical_anomaly") return Label::logical_anomaly;
    return std::nullopt;
}

const ImageRecord* Manifest::find(const std::string& image_id) const {
    for (const auto& img : images)
        if (img.image_id == image_id) return &img;
    return nullptr;
}

namespace {

class Collector {
public:
    void add(const std::string& where, const std::string& what) { problems_.push_back(where + ": " + what); }
    bool empty() const { return problems_.empty(); }
    std::vector<std::string> take() { return std::move(problems_); }

private:
    std::vector<std::string> problems_;
};

std::optional<std::string> string_field(const json& obj, const char* key, const std::string& where, Collector& errs) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        errs.add(where, std::string("missing field '") + key + "'");
        return std::nullopt;
    }
    if (!it->is_string()) {
        errs.add(where, std::string("field '") + key + "' must be a string");
        return std::nullopt;
    }
    return it->get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    fs::path p(rel);
    return p.is_absolute() ? p : base / p;
}

void check_file(const fs::path& p, const std::string& where, bool enabled, Collector& errs) {
    if (enabled && !fs::is_regular_file(p)) errs.add(where, "missing file '" + p.string() + "'");
}

}  // namespace

Manifest parse_manifest(const std::string& json_text, const fs::path& base_dir, bool check_files) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Collector errs;
    Manifest m;
    if (!doc.is_object()) throw ValidationError("manifest root must be an object");
    if (auto c = string_field(doc, "category", "manifest", errs)) m.category = *c;

    auto images = doc.find("images");
    if (images == doc.end() || !images->is_array()) {
        errs.add("manifest", "missing array 'images'");
        throw ValidationError(errs.take());
    }

    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& entry : *images) {
        std::string where = "images[" + std::to_string(index++) + "]";
        if (!entry.is_object()) {
            errs.add(where, "must be an object");
            continue;
        }
        ImageRecord rec;
        if (auto id = string_field(entry, "image_id", where, errs)) {
            rec.image_id = *id;
            where += " (" + rec.image_id + ")";
            if (rec.image_id.empty()) errs.add(where, "image_id must be non-empty");
            if (!seen.insert(rec.image_id).second) errs.add(where, "duplicate image_id '" + rec.image_id + "'");
        }
        if (auto s = string_field(entry, "split", where, errs)) {
            if (auto split = parse_split(*s)) rec.split = *split;
            else errs.add(where, "unknown split '" + *s + "'");
        }
        bool label_ok = false;
        if (auto l = string_field(entry, "label", where, errs)) {
            if (auto label = parse_label(*l)) {
                rec.label = *label;
                label_ok = true;
            } else {
                errs.add(where, "unknown label '" + *l + "'");
            }
        }
        if (label_ok && rec.split != Split::test && rec.label != Label::normal)
            errs.add(where, std::string(to_string(rec.split)) + " images must be labeled normal");

        auto stages = entry.find("stages");
        if (stages == entry.end() || !stages->is_array()) {
            errs.add(where, "missing array 'stages'");
        } else if (stages->size() != kStageCount) {
            errs.add(where, "expected 4 stages, found " + std::to_string(stages->size()));
        } else {
            for (std::size_t k = 0; k < kStageCount; ++k) {
                const auto& sp = (*stages)[k];
                if (!sp.is_string()) {
                    errs.add(where, "stages[" + std::to_string(k) + "] must be a path string");
                    continue;
                }
                rec.stage_feature_paths[k] = resolve(base_dir, sp.get<std::string>());
                check_file(rec.stage_feature_paths[k], where, check_files, errs);
            }
        }

        if (auto interests = entry.find("interests"); interests != entry.end()) {
            if (!interests->is_array()) {
                errs.add(where, "'interests' must be an array");
            } else {
                std::size_t j = 0;
                for (const auto& inst : *interests) {
                    const std::string iw = where + ".interests[" + std::to_string(j++) + "]";
                    if (!inst.is_object()) {
                        errs.add(iw, "must be an object");
                        continue;
                    }
                    InterestInstance ii;
                    if (auto c = string_field(inst, "class_name", iw, errs)) {
                        ii.class_name = *c;
                        if (c->empty()) errs.add(iw, "class_name must be non-empty");
                    }
                    if (auto mp = string_field(inst, "mask", iw, errs)) {
                        ii.mask_path = resolve(base_dir, *mp);
                        check_file(ii.mask_path, iw, check_files, errs);
                    }
                    auto af = inst.find("area_fraction");
                    if (af == inst.end() || !af->is_number()) {
                        errs.add(iw, "missing number 'area_fraction'");
                    } else {
                        ii.area_fraction = af->get<double>();
                        if (!(ii.area_fraction > 0.0 && ii.area_fraction <= 1.0))
                            errs.add(iw, "area_fraction must be in (0, 1]");
                    }
                    rec.interest_instances.push_back(std::move(ii));
                }
            }
        }

        if (auto gt = entry.find("pixel_gt"); gt != entry.end() && !gt->is_null()) {
            if (!gt->is_string()) {
                errs.add(where, "'pixel_gt' must be a path string");
            } else {
                rec.pixel_gt_path = resolve(base_dir, gt->get<std::string>());
                check_file(*rec.pixel_gt_path, where, check_files, errs);
            }
        }
        m.images.push_back(std::move(rec));
    }
    if (!errs.empty()) throw ValidationError(errs.take());
    return m;
}

Manifest load_manifest(const fs::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open manifest '" + source.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), source.parent_path());
}

void save_manifest(const Manifest& manifest, const fs::path& destination) {
    const fs::path base = destination.parent_path();
    auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
    json images = json::array();
    for (const auto& img : manifest.images) {
        json stages = json::array();
        for (const auto& p : img.stage_feature_paths) stages.push_back(rel(p));
        json interests = json::array();
        for (const auto& ii : img.interest_instances)
            interests.push_back({{"class_name", ii.class_name}, {"mask", rel(ii.mask_path)}, {"area_fraction", ii.area_fraction}});
        json rec = {{"image_id", img.image_id},
                    {"split", to_string(img.split)},
                    {"label", to_string(img.label)},
                    {"stages", stages},
                    {"interests", interests}};
        if (img.pixel_gt_path) rec["pixel_gt"] = rel(*img.pixel_gt_path);
        images.push_back(std::move(rec));
    }
    json doc = {{"category", manifest.category}, {"images", images}};
    std::ofstream out(destination, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write manifest '" + destination.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace logsad
