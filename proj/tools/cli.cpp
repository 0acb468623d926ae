#include "cli.hpp"

#include "logsad/errors.hpp"
#include "logsad/pipeline.hpp"
#include "logsad/synth.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <ostream>

namespace logsad {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write '" + path.string() + "'");
    out << text;
}

References references_from_bank(const Manifest& manifest, const MemoryBank& bank, unsigned threads) {
    std::vector<const ImageRecord*> recs;
    std::vector<std::string> missing;
    for (const auto& id : bank.source_ids()) {
        if (const auto* r = manifest.find(id)) recs.push_back(r);
        else missing.push_back("bank source image '" + id + "' is not in the manifest");
    }
    if (!missing.empty()) throw ValidationError(std::move(missing));
    return load_references(recs, threads);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free logical and structural anomaly detection over precomputed embeddings", "logsad"};
    app.require_subcommand(1);

    std::string manifest_path, rules_path, text_bank_path, bank_path, calib_path, out_path, scores_path, records_path,
        csv_path, spec_path, preset, config_path;
    std::optional<std::size_t> k_shot;
    std::optional<double> coreset_ratio;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    double sigma_floor = kDefaultSigmaFloor;
    double min_area = kDefaultMinArea;
    bool no_composition = false;

    auto* validate = app.add_subcommand("validate", "Check a manifest (and optionally rules/text bank) for every schema error");
    validate->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    validate->add_option("--rules", rules_path, "Rule file JSON");
    validate->add_option("--text-bank", text_bank_path, "Text bank JSON");

    auto* build = app.add_subcommand("build-bank", "Build the patch memory bank from normal train images");
    build->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    build->add_option("--out", out_path, "Output bank directory")->required();
    build->add_option("--k-shot", k_shot, "Use k seeded-shuffled normal train images");
    build->add_option("--coreset-ratio", coreset_ratio, "Fraction of patches kept (default 0.1 full-data, 1.0 k-shot)");
    build->add_option("--seed", seed, "Seed for reference sampling and coreset start");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit calibration statistics from anomaly-free scores");
    calibrate_cmd->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    calibrate_cmd->add_option("--bank", bank_path, "Bank directory")->required();
    calibrate_cmd->add_option("--out", out_path, "Output calibration JSON")->required();
    calibrate_cmd->add_option("--sigma-floor", sigma_floor, "Lower bound on standard deviations");

    auto* score = app.add_subcommand("score", "Score every test image");
    score->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    score->add_option("--bank", bank_path, "Bank directory")->required();
    score->add_option("--calib", calib_path, "Calibration JSON")->required();
    score->add_option("--rules", rules_path, "Rule file JSON")->required();
    score->add_option("--text-bank", text_bank_path, "Text bank JSON (needed by zero-shot rules)");
    score->add_option("--out", out_path, "Output scores CSV")->required();
    score->add_option("--records", records_path, "Also write per-image records with verdicts (JSON)");
    score->add_option("--min-area", min_area, "Default minimum instance area fraction for rules");
    score->add_flag("--no-composition", no_composition, "Disable the composition detector");

    auto* eval = app.add_subcommand("eval", "Compute AUROC / F1-max from a scores CSV");
    eval->add_option("--scores", scores_path, "Scores CSV")->required();
    eval->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    eval->add_option("--out", out_path, "Output report JSON")->required();
    eval->add_option("--csv", csv_path, "Also write the report as CSV");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic interchange dataset");
    synth->add_option("--spec", spec_path, "Synth spec JSON");
    synth->add_option("--preset", preset, "Built-in spec")->check(CLI::IsMember({"pushpins"}));
    synth->add_option("--out", out_path, "Output directory")->required();
    synth->add_option("--seed", seed, "Override the spec seed");
    synth->add_option("--epsilon", epsilon, "Override the structural perturbation magnitude");

    auto* run = app.add_subcommand("run", "Run bank, calibration, scoring and evaluation end to end");
    run->add_option("--config", config_path, "Pipeline config JSON")->required();
    run->add_option("--out", out_path, "Output directory (overrides config output_dir)");
    run->add_option("--k-shot", k_shot, "Override k_shot");
    run->add_option("--seed", seed, "Override seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        const unsigned threads = resolve_threads(0);
        if (validate->parsed()) {
            const auto manifest = load_manifest(manifest_path);
            if (!rules_path.empty()) {
                std::optional<fs::path> tb;
                if (!text_bank_path.empty()) tb = text_bank_path;
                load_rule_context(rules_path, tb, kDefaultMinArea, &manifest);
            }
            out << "ok: " << manifest.images.size() << " images in category '" << manifest.category << "'\n";
        } else if (build->parsed()) {
            const auto manifest = load_manifest(manifest_path);
            const std::uint64_t s = seed.value_or(0);
            const auto refs = load_references(select_references(manifest, k_shot, s), threads);
            const double ratio = coreset_ratio.value_or(k_shot ? kFewShotCoresetRatio : kFullDataCoresetRatio);
            const auto bank = build_reference_bank(refs, ratio, s);
            save_bank(bank, {manifest.category, k_shot}, out_path);
            out << "bank: " << bank.stage(0).rows << " rows per stage from " << refs.images.size() << " images\n";
        } else if (calibrate_cmd->parsed()) {
            const auto manifest = load_manifest(manifest_path);
            const auto stored = load_bank(bank_path);
            const auto refs = references_from_bank(manifest, stored.bank, threads);
            // Leave-one-out banks reuse the full bank's coreset settings.
            const auto stats = calibrate(manifest, refs, stored.bank, stored.meta.k_shot.has_value(),
                                         stored.bank.coreset().ratio, stored.bank.coreset().seed, sigma_floor, threads);
            save_stats(stats, out_path);
            for (const auto& f : stats.flags) err << "flag: " << f << '\n';
            out << "calibration: mu_p=" << format_real(stats.mu_p) << " sigma_p=" << format_real(stats.sigma_p)
                << " mu_in=" << format_real(stats.mu_in) << " sigma_in=" << format_real(stats.sigma_in) << '\n';
        } else if (score->parsed()) {
            const auto manifest = load_manifest(manifest_path);
            std::optional<fs::path> tb;
            if (!text_bank_path.empty()) tb = text_bank_path;
            auto ctx = load_rule_context(rules_path, tb, min_area, &manifest);
            const auto stored = load_bank(bank_path);
            const auto refs = references_from_bank(manifest, stored.bank, threads);
            const ImageScorer scorer(stored.bank, refs.interest_sets(), std::move(ctx.rules), std::move(ctx.text_bank),
                                     load_stats(calib_path), !no_composition);
            const auto outputs = score_test_images(manifest, scorer, threads);
            std::vector<ScoreRecord> records;
            for (const auto& o : outputs) records.push_back(o.record);
            write_scores_csv(records, out_path);
            if (!records_path.empty()) write_text(records_path, records_json(records));
            out << "scored " << records.size() << " test images\n";
        } else if (eval->parsed()) {
            const auto manifest = load_manifest(manifest_path);
            const auto rep = report(read_scores_csv(scores_path), manifest);
            write_text(out_path, report_json(rep));
            if (!csv_path.empty()) write_text(csv_path, report_csv(rep));
            out << report_json(rep);
        } else if (synth->parsed()) {
            if (spec_path.empty() == preset.empty()) throw ValidationError("synth needs exactly one of --spec or --preset");
            SynthSpec spec = spec_path.empty() ? pushpins_like_spec() : load_synth_spec(spec_path);
            if (seed) spec.seed = *seed;
            if (epsilon) spec.epsilon = *epsilon;
            const auto files = generate_dataset(spec, out_path);
            out << "wrote " << files.manifest.string() << '\n';
        } else if (run->parsed()) {
            auto config = load_config(config_path);
            if (!out_path.empty()) config.output_dir = fs::path(out_path);
            if (k_shot) config.k_shot = k_shot;
            if (seed) config.seed = *seed;
            const auto result = run_pipeline(config);
            for (const auto& f : result.stats.flags) err << "flag: " << f << '\n';
            out << report_json(result.report);
        }
        return 0;
    } catch (const ValidationError& e) {
        for (const auto& p : e.problems()) err << "error: " << p << '\n';
        return 1;
    } catch (const TensorError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == TensorErrorKind::io ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace logsad
