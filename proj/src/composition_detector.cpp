#include "logsad/composition_detector.hpp"

#include "logsad/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace logsad {

namespace {

std::vector<const InstanceFact*> eligible(const SceneFacts& facts, const std::string& cls, double min_area) {
    std::vector<const InstanceFact*> out;
    auto it = facts.instances.find(cls);
    if (it == facts.instances.end()) return out;
    for (const auto& f : it->second)
        if (f.area_fraction >= min_area) out.push_back(&f);
    return out;
}

// Largest-area instance; the earliest wins on equal area.
const InstanceFact* dominant(const SceneFacts& facts, const std::string& cls, double min_area) {
    const InstanceFact* best = nullptr;
    for (const auto* f : eligible(facts, cls, min_area))
        if (best == nullptr || f->area_fraction > best->area_fraction) best = f;
    return best;
}

std::string format_histogram(const std::map<std::string, int>& h) {
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (const auto& [label, n] : h) {
        if (n == 0) continue;
        if (!first) out << ", ";
        out << label << ':' << n;
        first = false;
    }
    out << '}';
    return out.str();
}

Verdict missing(const Rule& rule, const std::string& cls) {
    return {rule.id, false, "missing interest '" + cls + "'"};
}

Verdict check(const Rule& rule, const CountEq& p, const SceneFacts& facts, const TextBank&) {
    const auto n = count_instances(facts, p.class_name, rule.min_area);
    const std::string text = "count(" + p.class_name + ")=" + std::to_string(n) + ", expected " + std::to_string(p.k);
    return {rule.id, n == static_cast<std::size_t>(p.k), text};
}

Verdict check(const Rule& rule, const ZsConsistency& p, const SceneFacts& facts, const TextBank& bank) {
    const auto* a = dominant(facts, p.class_a, rule.min_area);
    if (a == nullptr) return missing(rule, p.class_a);
    const auto* b = dominant(facts, p.class_b, rule.min_area);
    if (b == nullptr) return missing(rule, p.class_b);
    const auto la = zero_shot_classify(a->feature, p.vocab_a, bank);
    const auto lb = zero_shot_classify(b->feature, p.vocab_b, bank);
    const bool ok = std::find(p.allowed_pairs.begin(), p.allowed_pairs.end(), std::make_pair(la, lb)) !=
                    p.allowed_pairs.end();
    return {rule.id, ok, "pair (" + la + "," + lb + ")" + (ok ? " allowed" : " not allowed")};
}

Verdict check(const Rule& rule, const AttrCountConsistency& p, const SceneFacts& facts, const TextBank& bank) {
    const auto* a = dominant(facts, p.attr_class, rule.min_area);
    if (a == nullptr) return missing(rule, p.attr_class);
    const auto label = zero_shot_classify(a->feature, p.vocab, bank);
    const auto n = count_instances(facts, p.count_class, rule.min_area);
    auto it = p.counts.find(label);
    if (it == p.counts.end())
        return {rule.id, false, "label '" + label + "' of " + p.attr_class + " has no configured count"};
    const std::string text = "count(" + p.count_class + ")=" + std::to_string(n) + ", expected " +
                             std::to_string(it->second) + " for " + p.attr_class + " '" + label + "'";
    return {rule.id, n == static_cast<std::size_t>(it->second), text};
}

Verdict check(const Rule& rule, const HistogramMatch& p, const SceneFacts& facts, const TextBank& bank) {
    const auto found = eligible(facts, p.class_name, rule.min_area);
    int expected_total = 0;
    for (const auto& [label, n] : p.reference) expected_total += n;
    if (found.empty() && expected_total > 0) return missing(rule, p.class_name);
    std::map<std::string, int> observed;
    for (const auto* f : found) ++observed[zero_shot_classify(f->feature, p.vocab, bank)];
    bool ok = true;
    for (const auto& label : p.vocab) {
        const auto want = p.reference.count(label) ? p.reference.at(label) : 0;
        const auto have = observed.count(label) ? observed.at(label) : 0;
        ok = ok && want == have;
    }
    const std::string text = "histogram(" + p.class_name + ")=" + format_histogram(observed) +
                             (ok ? ", matches " : ", expected ") + format_histogram(p.reference);
    return {rule.id, ok, text};
}

Verdict check(const Rule& rule, const RegionCountEq& p, const SceneFacts& facts, const TextBank&) {
    const auto found = eligible(facts, p.class_name, rule.min_area);
    if (found.empty()) return missing(rule, p.class_name);
    const double extent = static_cast<double>(p.axis == Axis::x ? facts.grid_width : facts.grid_height);
    const double line = p.split_fraction * extent;
    std::size_t first = 0, second = 0;
    for (const auto* f : found) {
        // Cell centers sit at index + 0.5.
        const double pos = (p.axis == Axis::x ? f->centroid_x : f->centroid_y) + 0.5;
        (pos < line ? first : second) += 1;
    }
    const char* names = p.axis == Axis::x ? "left=%zu, right=%zu" : "top=%zu, bottom=%zu";
    char buf[96];
    std::snprintf(buf, sizeof buf, names, first, second);
    std::ostringstream text;
    text << "count(" << p.class_name << ") " << buf << " split along " << (p.axis == Axis::x ? 'x' : 'y') << " at "
         << p.split_fraction;
    return {rule.id, first == second, text.str()};
}

}  // namespace

SceneFacts scene_facts(const InterestSet& interests, std::size_t grid_height, std::size_t grid_width) {
    SceneFacts facts;
    facts.grid_height = grid_height;
    facts.grid_width = grid_width;
    for (const auto& e : interests.entries)
        facts.instances[e.class_name].push_back({e.stage_vectors[kZeroShotStage], e.centroid_y, e.centroid_x, e.area_fraction});
    return facts;
}

std::string zero_shot_classify(std::span<const float> feature, const std::vector<std::string>& vocab,
                               const TextBank& bank) {
    if (vocab.empty()) throw ValidationError("zero-shot classification needs a non-empty vocabulary");
    const std::string* best = nullptr;
    double best_sim = 0.0;
    for (const auto& label : vocab) {
        const auto& emb = bank.at(label);
        if (emb.size() != feature.size())
            throw ValidationError("feature dim " + std::to_string(feature.size()) + " does not match text dim " +
                                  std::to_string(emb.size()));
        const double sim = 1.0 - cosine_distance(feature, emb);
        if (best == nullptr || sim > best_sim) {
            best = &label;
            best_sim = sim;
        }
    }
    return *best;
}

std::size_t count_instances(const SceneFacts& facts, const std::string& class_name, double min_area) {
    return eligible(facts, class_name, min_area).size();
}

Verdict evaluate_rule(const Rule& rule, const SceneFacts& facts, const TextBank& bank) {
    return std::visit([&](const auto& p) { return check(rule, p, facts, bank); }, rule.params);
}

CompositionResult composition_score(const std::vector<Rule>& rules, const SceneFacts& facts, const TextBank& bank) {
    CompositionResult r;
    if (rules.empty()) r.warnings.push_back("no rules configured");
    for (const auto& rule : rules) {
        r.verdicts.push_back(evaluate_rule(rule, facts, bank));
        if (!r.verdicts.back().passed) r.score = 1;
    }
    return r;
}

}  // namespace logsad
