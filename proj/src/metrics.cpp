#include "logsad/metrics.hpp"

#include "logsad/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace logsad {

using nlohmann::json;

std::size_t LabeledScores::positives() const {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
}

namespace {

void check_lengths(const LabeledScores& d) {
    if (d.scores.size() != d.labels.size()) throw ValidationError("scores and labels differ in length");
}

}  // namespace

double auroc(const LabeledScores& data) {
    check_lengths(data);
    const std::size_t pos = data.positives();
    const std::size_t neg = data.labels.size() - pos;
    if (pos == 0 || neg == 0) throw ValidationError("AUROC needs both anomalous and normal samples");

    std::vector<std::size_t> order(data.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return data.scores[a] < data.scores[b]; });
    // Sum of 1-based ranks of the positives, ties sharing their average rank.
    // Twice the rank keeps every quantity integral.
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && data.scores[order[j]] == data.scores[order[i]]) ++j;
        const std::uint64_t twice_avg = static_cast<std::uint64_t>(i + 1 + j);  // (i+1) + j
        for (std::size_t k = i; k < j; ++k)
            if (data.labels[order[k]]) twice_rank_sum += twice_avg;
        i = j;
    }
    // U counted in half-units: 2U = 2R - P(P+1)
    const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(pos) * (pos + 1);
    return (static_cast<double>(twice_u) / 2.0) / (static_cast<double>(pos) * static_cast<double>(neg));
}

F1Max f1_max(const LabeledScores& data) {
    check_lengths(data);
    const std::size_t pos = data.positives();
    if (pos == 0) throw ValidationError("F1-max needs at least one anomalous sample");

    std::vector<std::size_t> order(data.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return data.scores[a] > data.scores[b]; });
    F1Max best{-1.0, 0.0};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = data.scores[order[i]];
        while (i < order.size() && data.scores[order[i]] == t) {
            (data.labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        const std::size_t fn = pos - tp;
        const double f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
        // Thresholds descend, so >= keeps the lowest maximizer.
        if (f1 >= best.value) best = {f1, t};
    }
    return best;
}

GridMask resize_mask_nearest(const GridMask& mask, std::size_t side) {
    GridMask out;
    out.height = side;
    out.width = side;
    out.cells.resize(side * side);
    for (std::size_t y = 0; y < side; ++y) {
        const std::size_t sy = std::min(mask.height - 1, y * mask.height / side);
        for (std::size_t x = 0; x < side; ++x) {
            const std::size_t sx = std::min(mask.width - 1, x * mask.width / side);
            out.cells[y * side + x] = mask.cells[sy * mask.width + sx];
        }
    }
    return out;
}

double pixel_auroc(const std::vector<AnomalyMap>& maps, const std::vector<GridMask>& ground_truth, std::size_t side) {
    if (maps.size() != ground_truth.size()) throw ValidationError("pixel AUROC needs one mask per map");
    LabeledScores all;
    all.scores.reserve(maps.size() * side * side);
    all.labels.reserve(maps.size() * side * side);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const auto up = upsample_map(maps[i], side);
        const auto gt = resize_mask_nearest(ground_truth[i], side);
        all.scores.insert(all.scores.end(), up.values.begin(), up.values.end());
        all.labels.insert(all.labels.end(), gt.cells.begin(), gt.cells.end());
    }
    return auroc(all);
}

namespace {

MetricValue try_metric(const LabeledScores& d, bool want_f1, bool want_threshold = false) {
    try {
        if (!want_f1) return {auroc(d), {}};
        const auto f = f1_max(d);
        return {want_threshold ? f.threshold : f.value, {}};
    } catch (const ValidationError& e) {
        return {std::nullopt, e.what()};
    }
}

LabeledScores subset(const std::vector<const ScoreRecord*>& recs, std::optional<Label> anomaly_kind) {
    LabeledScores d;
    for (const auto* r : recs) {
        if (anomaly_kind && r->label != Label::normal && r->label != *anomaly_kind) continue;
        d.scores.push_back(r->s);
        d.labels.push_back(r->label == Label::normal ? 0 : 1);
    }
    return d;
}

json metric_json(const MetricValue& m) { return m.value ? json(*m.value) : json(nullptr); }

}  // namespace

Report report(const std::vector<ScoreRecord>& records, const Manifest& manifest) {
    Report r;
    r.category = manifest.category;
    std::vector<const ScoreRecord*> test;
    std::vector<std::string> unscored;
    for (const auto& img : manifest.images) {
        if (img.split != Split::test) continue;
        auto it = std::find_if(records.begin(), records.end(), [&](const auto& s) { return s.image_id == img.image_id; });
        if (it == records.end()) {
            unscored.push_back("test image '" + img.image_id + "' has no score");
            continue;
        }
        test.push_back(&*it);
        ++r.n_test;
        switch (img.label) {
            case Label::normal: ++r.n_normal; break;
            case Label::structural_anomaly: ++r.n_structural; break;
            case Label::logical_anomaly: ++r.n_logical; break;
        }
    }
    if (!unscored.empty()) throw ValidationError(std::move(unscored));

    // Labels come from the manifest, not the score file.
    std::vector<ScoreRecord> relabeled;
    relabeled.reserve(test.size());
    for (const auto* rec : test) {
        relabeled.push_back(*rec);
        relabeled.back().label = manifest.find(rec->image_id)->label;
    }
    std::vector<const ScoreRecord*> recs;
    for (const auto& rec : relabeled) recs.push_back(&rec);

    const auto all = subset(recs, std::nullopt);
    const auto logical = subset(recs, Label::logical_anomaly);
    const auto structural = subset(recs, Label::structural_anomaly);
    r.auroc = try_metric(all, false);
    r.f1_max = try_metric(all, true);
    r.f1_threshold = try_metric(all, true, true);
    r.auroc_logical = try_metric(logical, false);
    r.auroc_structural = try_metric(structural, false);
    r.f1_max_logical = try_metric(logical, true);
    r.f1_max_structural = try_metric(structural, true);
    r.pixel_auroc = {std::nullopt, "no anomaly maps supplied"};
    return r;
}

std::string report_json(const Report& r) {
    json reasons = json::object();
    auto put = [&](json& doc, const char* key, const MetricValue& m) {
        doc[key] = metric_json(m);
        if (!m.value) reasons[key] = m.reason;
    };
    json doc = {{"category", r.category},
                {"n_test", r.n_test},
                {"n_normal", r.n_normal},
                {"n_structural", r.n_structural},
                {"n_logical", r.n_logical}};
    put(doc, "auroc", r.auroc);
    put(doc, "f1_max", r.f1_max);
    put(doc, "f1_threshold", r.f1_threshold);
    put(doc, "auroc_logical", r.auroc_logical);
    put(doc, "auroc_structural", r.auroc_structural);
    put(doc, "f1_max_logical", r.f1_max_logical);
    put(doc, "f1_max_structural", r.f1_max_structural);
    put(doc, "pixel_auroc", r.pixel_auroc);
    doc["null_reasons"] = reasons;
    return doc.dump(2) + "\n";
}

std::string report_csv(const Report& r) {
    std::ostringstream out;
    out << "metric,value\n";
    auto row = [&](const char* name, const MetricValue& m) {
        out << name << ',' << (m.value ? format_real(*m.value) : std::string{}) << '\n';
    };
    row("auroc", r.auroc);
    row("f1_max", r.f1_max);
    row("f1_threshold", r.f1_threshold);
    row("auroc_logical", r.auroc_logical);
    row("auroc_structural", r.auroc_structural);
    row("f1_max_logical", r.f1_max_logical);
    row("f1_max_structural", r.f1_max_structural);
    row("pixel_auroc", r.pixel_auroc);
    return out.str();
}

double category_mean(std::span<const double> values) {
    if (values.empty()) throw ValidationError("mean of no categories");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string scores_csv(const std::vector<ScoreRecord>& records) {
    std::ostringstream out;
    out << "image_id,s_p,s_in,s_c,s,label\n";
    for (const auto& r : records)
        out << r.image_id << ',' << format_real(r.s_p) << ',' << format_real(r.s_in) << ',' << r.s_c << ','
            << format_real(r.s) << ',' << to_string(r.label) << '\n';
    return out.str();
}

void write_scores_csv(const std::vector<ScoreRecord>& records, const std::filesystem::path& destination) {
    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write scores '" + destination.string() + "'");
    out << scores_csv(records);
}

namespace {

double parse_real(const std::string& field, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ValidationError("scores line " + std::to_string(line) + ": bad number '" + field + "'");
    return v;
}

}  // namespace

std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open scores '" + source.string() + "'");
    std::string line;
    std::getline(in, line);
    if (line != "image_id,s_p,s_in,s_c,s,label") throw ValidationError("scores file has an unexpected header");
    std::vector<ScoreRecord> out;
    std::vector<std::string> problems;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) {
            problems.push_back("scores line " + std::to_string(n) + ": expected 6 fields");
            continue;
        }
        try {
            ScoreRecord r;
            r.image_id = f[0];
            r.s_p = parse_real(f[1], n);
            r.s_in = parse_real(f[2], n);
            r.s_c = static_cast<int>(parse_real(f[3], n));
            r.s = parse_real(f[4], n);
            auto label = parse_label(f[5]);
            if (!label) throw ValidationError("scores line " + std::to_string(n) + ": unknown label '" + f[5] + "'");
            r.label = *label;
            out.push_back(std::move(r));
        } catch (const ValidationError& e) {
            problems.push_back(e.what());
        }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return out;
}

}  // namespace logsad
