#include "logsad/pipeline.hpp"

#include "logsad/errors.hpp"
#include "logsad/random.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

namespace logsad {

using nlohmann::json;
namespace fs = std::filesystem;

double PipelineConfig::effective_coreset_ratio() const {
    if (coreset_ratio) return *coreset_ratio;
    return k_shot ? kFewShotCoresetRatio : kFullDataCoresetRatio;
}

PipelineConfig load_config(const fs::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open config '" + source.string() + "'");
    const fs::path base = source.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    PipelineConfig c;
    std::vector<std::string> problems;
    try {
        const json doc = json::parse(in);
        if (!doc.contains("manifest")) problems.push_back("config: missing 'manifest'");
        else c.manifest = resolve(doc.at("manifest").get<std::string>());
        if (!doc.contains("rules")) problems.push_back("config: missing 'rules'");
        else c.rules = resolve(doc.at("rules").get<std::string>());
        if (doc.contains("text_bank") && !doc.at("text_bank").is_null())
            c.text_bank = resolve(doc.at("text_bank").get<std::string>());
        if (doc.contains("coreset_ratio") && !doc.at("coreset_ratio").is_null())
            c.coreset_ratio = doc.at("coreset_ratio").get<double>();
        c.seed = doc.value("seed", std::uint64_t{0});
        c.sigma_floor = doc.value("sigma_floor", kDefaultSigmaFloor);
        c.min_area = doc.value("min_area", kDefaultMinArea);
        if (doc.contains("k_shot") && !doc.at("k_shot").is_null()) c.k_shot = doc.at("k_shot").get<std::size_t>();
        c.use_composition = doc.value("use_composition", true);
        if (doc.contains("output_dir") && !doc.at("output_dir").is_null())
            c.output_dir = resolve(doc.at("output_dir").get<std::string>());
    } catch (const json::exception& e) {
        problems.push_back("config '" + source.string() + "' is malformed: " + e.what());
    }
    if (c.coreset_ratio && !(*c.coreset_ratio > 0.0 && *c.coreset_ratio <= 1.0))
        problems.push_back("config: coreset_ratio must be in (0, 1]");
    if (!(c.sigma_floor > 0.0)) problems.push_back("config: sigma_floor must be > 0");
    if (c.k_shot && *c.k_shot == 0) problems.push_back("config: k_shot must be >= 1");
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return c;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LOGSAD_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex guard;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

// Re-raises an error with the stage and image it came from, keeping its category.
template <class Fn>
auto in_stage(const std::string& stage, const std::string& image_id, Fn&& fn) -> decltype(fn()) {
    const std::string where = "stage '" + stage + "'" + (image_id.empty() ? "" : ", image '" + image_id + "'") + ": ";
    try {
        return fn();
    } catch (const ValidationError& e) {
        std::vector<std::string> p;
        for (const auto& s : e.problems()) p.push_back(where + s);
        throw ValidationError(std::move(p));
    } catch (const TensorError& e) {
        if (e.kind() != TensorErrorKind::io) throw ValidationError(where + e.what());
        throw RuntimeError(where + e.what());
    } catch (const std::exception& e) {
        throw RuntimeError(where + e.what());
    }
}

}  // namespace

std::vector<const ImageRecord*> select_references(const Manifest& manifest, std::optional<std::size_t> k_shot,
                                                  std::uint64_t seed) {
    std::vector<const ImageRecord*> normals;
    for (const auto& img : manifest.images)
        if (img.split == Split::train && img.label == Label::normal) normals.push_back(&img);
    if (normals.empty()) throw ValidationError("manifest has no normal train images to build a bank from");
    if (!k_shot) return normals;
    if (*k_shot == 0 || *k_shot > normals.size())
        throw ValidationError("k_shot " + std::to_string(*k_shot) + " outside [1, " + std::to_string(normals.size()) +
                              "] normal train images");
    Rng rng(seed);
    rng.shuffle(normals);
    normals.resize(*k_shot);
    return normals;
}

LoadedImage load_image(const ImageRecord& image) {
    return in_stage("load", image.image_id, [&] {
        LoadedImage out;
        out.image_id = image.image_id;
        out.stack = load_feature_stack(image);
        out.interests = pool_interests(out.stack, load_instances(image));
        return out;
    });
}

std::vector<std::string> References::ids() const {
    std::vector<std::string> out;
    for (const auto& i : images) out.push_back(i.image_id);
    return out;
}

std::vector<InterestSet> References::interest_sets() const {
    std::vector<InterestSet> out;
    for (const auto& i : images) out.push_back(i.interests);
    return out;
}

References load_references(const std::vector<const ImageRecord*>& records, unsigned threads) {
    References refs;
    refs.images.resize(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) { refs.images[i] = load_image(*records[i]); });
    return refs;
}

MemoryBank build_reference_bank(const References& refs, double coreset_ratio, std::uint64_t seed) {
    return in_stage("build-bank", "", [&] {
        std::vector<FeatureStack> stacks;
        stacks.reserve(refs.images.size());
        for (const auto& i : refs.images) stacks.push_back(i.stack);
        return build_bank(stacks, coreset_ratio, seed, refs.ids());
    });
}

RawScores raw_scores(const LoadedImage& image, const MemoryBank& bank, const std::vector<InterestSet>& references) {
    return {patch_score(image.stack, bank), interest_score(image.interests, references)};
}

CalibrationStats calibrate(const Manifest& manifest, const References& refs, const MemoryBank& bank,
                           bool k_shot_mode, double coreset_ratio, std::uint64_t seed, double sigma_floor,
                           unsigned threads) {
    std::vector<const ImageRecord*> validation;
    if (!k_shot_mode)
        for (const auto& img : manifest.images)
            if (img.split == Split::validation && img.label == Label::normal) validation.push_back(&img);

    std::vector<double> ps, is;
    std::vector<std::string> ids;
    std::vector<std::string> flags;
    std::string mode;
    if (!validation.empty()) {
        mode = "validation";
        const auto ref_sets = refs.interest_sets();
        ps.resize(validation.size());
        is.resize(validation.size());
        parallel_for(validation.size(), threads, [&](std::size_t i) {
            const auto img = load_image(*validation[i]);
            const auto raw = in_stage("calibrate", img.image_id, [&] { return raw_scores(img, bank, ref_sets); });
            ps[i] = raw.patch.score;
            is[i] = raw.interest.value;
        });
        for (const auto* v : validation) ids.push_back(v->image_id);
    } else if (refs.images.size() >= 2) {
        mode = "leave_one_out";
        if (!k_shot_mode) flags.push_back("no validation images; calibrated leave-one-out over the references");
        const std::size_t k = refs.images.size();
        ps.resize(k);
        is.resize(k);
        parallel_for(k, threads, [&](std::size_t held_out) {
            References rest;
            for (std::size_t j = 0; j < k; ++j)
                if (j != held_out) rest.images.push_back(refs.images[j]);
            const auto loo_bank = build_reference_bank(rest, coreset_ratio, seed);
            const auto& img = refs.images[held_out];
            const auto raw = in_stage("calibrate", img.image_id, [&] { return raw_scores(img, loo_bank, rest.interest_sets()); });
            ps[held_out] = raw.patch.score;
            is[held_out] = raw.interest.value;
        });
        ids = refs.ids();
    } else {
        mode = "single_reference";
        flags.push_back("WARNING: single reference image; calibration uses its self-score with sigma clamped to sigma_floor");
        const auto raw = in_stage("calibrate", refs.images[0].image_id,
                                  [&] { return raw_scores(refs.images[0], bank, refs.interest_sets()); });
        ps.push_back(raw.patch.score);
        is.push_back(raw.interest.value);
        ids = refs.ids();
    }
    auto stats = fit_stats(ps, is, sigma_floor);
    stats.mode = mode;
    stats.source_ids = std::move(ids);
    stats.flags.insert(stats.flags.begin(), flags.begin(), flags.end());
    return stats;
}

ImageScorer::ImageScorer(const MemoryBank& bank, std::vector<InterestSet> references, RuleSpec rules,
                         TextBank text_bank, CalibrationStats stats, bool use_composition)
    : bank_(bank),
      references_(std::move(references)),
      rules_(std::move(rules)),
      text_bank_(std::move(text_bank)),
      stats_(std::move(stats)),
      use_composition_(use_composition) {
    stats_.check();
    if (references_.empty()) throw ValidationError("scoring needs at least one reference interest set");
}

ImageScorer::Output ImageScorer::score(const ImageRecord& image) const {
    return score(load_image(image), image.label);
}

ImageScorer::Output ImageScorer::score(const LoadedImage& image, Label label) const {
    return in_stage("score", image.image_id, [&] {
        Output out;
        auto raw = raw_scores(image, bank_, references_);
        auto& rec = out.record;
        rec.image_id = image.image_id;
        rec.label = label;
        rec.s_p = raw.patch.score;
        rec.s_in = raw.interest.value;
        if (raw.interest.no_interests) rec.flags.push_back("no interests detected");
        if (use_composition_) {
            const auto facts = scene_facts(image.interests, image.stack.height(), image.stack.width());
            auto comp = composition_score(rules_.rules, facts, text_bank_);
            rec.s_c = comp.score;
            rec.verdicts = std::move(comp.verdicts);
            rec.flags.insert(rec.flags.end(), comp.warnings.begin(), comp.warnings.end());
        }
        rec.s = fuse(rec.s_p, rec.s_in, rec.s_c, stats_);
        out.map = std::move(raw.patch.map);
        return out;
    });
}

std::vector<ImageScorer::Output> score_test_images(const Manifest& manifest, const ImageScorer& scorer,
                                                   unsigned threads) {
    std::vector<const ImageRecord*> tests;
    for (const auto& img : manifest.images)
        if (img.split == Split::test) tests.push_back(&img);
    std::vector<ImageScorer::Output> out(tests.size());
    parallel_for(tests.size(), threads, [&](std::size_t i) { out[i] = scorer.score(*tests[i]); });
    return out;
}

RuleContext load_rule_context(const fs::path& rules_path, const std::optional<fs::path>& text_bank_path,
                              double min_area, const Manifest* manifest) {
    RuleContext ctx;
    ctx.rules = load_rulespec(rules_path);
    apply_default_min_area(ctx.rules, min_area);
    std::vector<std::string> problems;
    if (text_bank_path) {
        ctx.text_bank = load_text_bank(*text_bank_path);
        problems = check_rules_against_bank(ctx.rules, ctx.text_bank);
    } else if (rules_need_text_bank(ctx.rules)) {
        problems.push_back("rules classify against text labels but no text bank was given");
    }
    if (manifest) {
        for (const auto& img : manifest->images)
            for (const auto& ii : img.interest_instances)
                if (!ctx.rules.declares(ii.class_name))
                    problems.push_back("image '" + img.image_id + "': interest class '" + ii.class_name +
                                       "' is not declared in the rule file");
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return ctx;
}

std::string records_json(const std::vector<ScoreRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json verdicts = json::array();
        for (const auto& v : r.verdicts)
            verdicts.push_back({{"rule_id", v.rule_id}, {"passed", v.passed}, {"explanation", v.explanation}});
        arr.push_back({{"image_id", r.image_id},
                       {"label", to_string(r.label)},
                       {"s_p", r.s_p},
                       {"s_in", r.s_in},
                       {"s_c", r.s_c},
                       {"s", r.s},
                       {"verdicts", verdicts},
                       {"flags", r.flags}});
    }
    return arr.dump(2) + "\n";
}

MetricValue pixel_metric(const Manifest& manifest, const std::vector<ImageScorer::Output>& outputs) {
    std::vector<AnomalyMap> maps;
    std::vector<GridMask> masks;
    bool any_gt = false;
    for (const auto& out : outputs) {
        const auto* img = manifest.find(out.record.image_id);
        if (img == nullptr) continue;
        if (img->pixel_gt_path) {
            masks.push_back(load_mask(*img->pixel_gt_path));
            any_gt = true;
        } else if (img->label == Label::normal) {
            GridMask zero;
            zero.height = out.map.height;
            zero.width = out.map.width;
            zero.cells.assign(zero.height * zero.width, 0);
            masks.push_back(std::move(zero));
        } else {
            continue;
        }
        maps.push_back(out.map);
    }
    if (!any_gt) return {std::nullopt, "no pixel ground truth in the test split"};
    try {
        return {pixel_auroc(maps, masks), {}};
    } catch (const ValidationError& e) {
        return {std::nullopt, e.what()};
    }
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    const unsigned threads = resolve_threads(config.threads);
    const Manifest manifest = load_manifest(config.manifest);
    auto ctx = load_rule_context(config.rules, config.text_bank, config.min_area, &manifest);

    const auto ref_records = select_references(manifest, config.k_shot, config.seed);
    const References refs = load_references(ref_records, threads);
    const double ratio = config.effective_coreset_ratio();
    const MemoryBank bank = build_reference_bank(refs, ratio, config.seed);
    auto stats = calibrate(manifest, refs, bank, config.k_shot.has_value(), ratio, config.seed, config.sigma_floor,
                           threads);

    const ImageScorer scorer(bank, refs.interest_sets(), ctx.rules, ctx.text_bank, stats, config.use_composition);
    const auto outputs = score_test_images(manifest, scorer, threads);

    PipelineResult result;
    result.reference_ids = refs.ids();
    for (const auto& o : outputs) result.scores.push_back(o.record);
    result.report = report(result.scores, manifest);
    result.report.pixel_auroc = pixel_metric(manifest, outputs);
    result.stats = std::move(stats);

    if (config.output_dir) {
        const auto& dir = *config.output_dir;
        fs::create_directories(dir);
        save_bank(bank, {manifest.category, config.k_shot}, dir / "bank");
        save_stats(result.stats, dir / "calibration.json");
        write_scores_csv(result.scores, dir / "scores.csv");
        write_text(dir / "records.json", records_json(result.scores));
        write_text(dir / "report.json", report_json(result.report));
        write_text(dir / "report.csv", report_csv(result.report));
    }
    return result;
}

}  // namespace logsad
