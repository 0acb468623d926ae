#include "logsad/synth.hpp"

#include "logsad/errors.hpp"
#include "logsad/features.hpp"
#include "logsad/random.hpp"
#include "logsad/text_bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

namespace logsad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const SynthClass* find_class(const SynthSpec& spec, const std::string& name) {
    for (const auto& c : spec.classes)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<std::string> prototype_labels(const SynthClass& c) {
    return c.variants.empty() ? std::vector<std::string>{c.name} : c.variants;
}

std::string logical_target(const SynthSpec& spec) {
    return spec.logical_class.empty() && !spec.classes.empty() ? spec.classes.front().name : spec.logical_class;
}

std::vector<std::pair<std::string, std::string>> disallowed_pairs(const SynthSpec& spec) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!spec.consistency) return out;
    const auto& cons = *spec.consistency;
    for (const auto& a : find_class(spec, cons.class_a)->variants)
        for (const auto& b : find_class(spec, cons.class_b)->variants)
            if (std::find(cons.allowed_pairs.begin(), cons.allowed_pairs.end(), std::make_pair(a, b)) ==
                cons.allowed_pairs.end())
                out.emplace_back(a, b);
    return out;
}

std::vector<float> random_unit(Rng& rng, std::size_t d) {
    std::vector<float> v(d);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    normalize_in_place(v);
    return v;
}

void perturb(std::span<float> f, std::span<const float> direction, double scale) {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(f[i] + scale * direction[i]);
    normalize_in_place(f);
}

struct Plan {
    std::string id;
    Split split;
    Label label;
};

struct Placement {
    std::string class_name;
    std::string prototype;
    std::vector<std::size_t> cells;
};

}  // namespace

void SynthSpec::check() const {
    std::vector<std::string> p;
    if (grid_side == 0) p.push_back("grid_side must be >= 1");
    if (dim == 0) p.push_back("dim must be >= 1");
    if (instance_side == 0 || instance_side > grid_side) p.push_back("instance_side must be in [1, grid_side]");
    if (!(noise >= 0.0)) p.push_back("noise must be >= 0");
    if (!(epsilon >= 0.0)) p.push_back("epsilon must be >= 0");
    if (!(train_fraction > 0.0 && validation_fraction >= 0.0 && train_fraction + validation_fraction <= 1.0))
        p.push_back("train_fraction/validation_fraction must be non-negative with train > 0 and sum <= 1");
    if (structural_patches == 0 || structural_patches > grid_side * grid_side)
        p.push_back("structural_patches must be in [1, grid cells]");
    if (classes.empty()) p.push_back("at least one interest class is required");
    std::set<std::string> labels;
    std::size_t normal_cells = 0;
    for (const auto& c : classes) {
        if (c.name.empty()) p.push_back("class names must be non-empty");
        if (c.count < 0) p.push_back("class '" + c.name + "' has a negative count");
        normal_cells += static_cast<std::size_t>(std::max(c.count, 0)) * instance_side * instance_side;
        for (const auto& l : prototype_labels(c))
            if (!labels.insert(l).second) p.push_back("prototype label '" + l + "' is used twice");
    }
    const std::size_t cells = grid_side * grid_side;
    if (normal_cells > cells) p.push_back("infeasible: instances need more cells than the grid has");
    if (consistency) {
        const auto* a = find_class(*this, consistency->class_a);
        const auto* b = find_class(*this, consistency->class_b);
        if (!a || !b || a->variants.empty() || b->variants.empty()) {
            p.push_back("consistency classes must exist and declare variants");
        } else {
            if (consistency->allowed_pairs.empty()) p.push_back("consistency needs at least one allowed pair");
            for (const auto& [la, lb] : consistency->allowed_pairs)
                if (std::find(a->variants.begin(), a->variants.end(), la) == a->variants.end() ||
                    std::find(b->variants.begin(), b->variants.end(), lb) == b->variants.end())
                    p.push_back("allowed pair (" + la + "," + lb + ") is not a variant pair");
        }
    }
    if (n_logical > 0 && p.empty()) {
        if (logical_mode == LogicalMode::count_delta) {
            const auto* c = find_class(*this, logical_target(*this));
            if (!c) {
                p.push_back("logical_class '" + logical_class + "' is not a configured class");
            } else {
                const int n = c->count + count_delta;
                if (count_delta == 0) p.push_back("count_delta must be non-zero to plant a logical anomaly");
                if (n < 0) p.push_back("count_delta drives the instance count below zero");
                if (normal_cells + static_cast<std::size_t>(std::max(count_delta, 0)) * instance_side * instance_side > cells)
                    p.push_back("infeasible: more instances than grid cells");
            }
        } else if (!consistency) {
            p.push_back("attribute_swap needs a consistency constraint");
        } else if (disallowed_pairs(*this).empty()) {
            p.push_back("attribute_swap needs at least one disallowed variant pair");
        }
    }
    if (!p.empty()) throw ValidationError(std::move(p));
}

SynthSpec pushpins_like_spec() {
    SynthSpec s;
    s.category = "pushpins_like";
    s.classes = {{"pushpin", 15, {}}};
    s.logical_mode = LogicalMode::count_delta;
    s.logical_class = "pushpin";
    s.count_delta = -1;
    s.seed = 42;
    return s;
}

RuleSpec synth_rules(const SynthSpec& spec) {
    RuleSpec r;
    r.category = spec.category;
    for (const auto& c : spec.classes) {
        r.interests.push_back(c.name);
        r.rules.push_back({"count_" + c.name, kDefaultMinArea, false, CountEq{c.name, c.count}});
    }
    if (spec.consistency) {
        const auto& cons = *spec.consistency;
        r.rules.push_back({"consistency_" + cons.class_a + "_" + cons.class_b, kDefaultMinArea, false,
                           ZsConsistency{cons.class_a, find_class(spec, cons.class_a)->variants, cons.class_b,
                                         find_class(spec, cons.class_b)->variants, cons.allowed_pairs}});
    }
    return r;
}

SynthOutput generate_dataset(const SynthSpec& spec, const fs::path& directory) {
    spec.check();
    const std::size_t side = spec.grid_side;
    const std::size_t cells = side * side;
    const std::size_t d = spec.dim;
    Rng master(spec.seed);

    // Canonical background per stage and one prototype per label per stage.
    std::array<Matrix, kStageCount> background;
    for (auto& bg : background) {
        bg = Matrix(cells, d);
        for (std::size_t c = 0; c < cells; ++c) {
            auto v = random_unit(master, d);
            std::copy(v.begin(), v.end(), bg.row(c).begin());
        }
    }
    std::map<std::string, std::array<std::vector<float>, kStageCount>> protos;
    for (const auto& c : spec.classes) {
        for (const auto& label : prototype_labels(c)) {
            auto& stages = protos[label];
            for (std::size_t k = 0; k < kStageCount; ++k) {
                // Keep prototypes of a stage apart: pairwise cosine < 0.9.
                for (int attempt = 0;; ++attempt) {
                    if (attempt == 100) throw ValidationError("cannot draw separated prototypes; increase dim");
                    auto v = random_unit(master, d);
                    bool separated = true;
                    for (const auto& [other, ov] : protos)
                        if (&ov != &stages && !ov[k].empty() && dot(v, ov[k]) >= 0.9) separated = false;
                    if (separated) {
                        stages[k] = std::move(v);
                        break;
                    }
                }
            }
        }
    }

    std::vector<Plan> plans;
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.n_normal)));
    const auto n_val = std::min(spec.n_normal - std::min(n_train, spec.n_normal),
                                static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(spec.n_normal))));
    auto make_id = [&](const char* prefix, std::size_t i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, i);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < spec.n_normal; ++i) {
        const Split split = i < n_train ? Split::train : (i < n_train + n_val ? Split::validation : Split::test);
        plans.push_back({make_id("normal", i), split, Label::normal});
    }
    for (std::size_t i = 0; i < spec.n_structural; ++i)
        plans.push_back({make_id("structural", i), Split::test, Label::structural_anomaly});
    for (std::size_t i = 0; i < spec.n_logical; ++i)
        plans.push_back({make_id("logical", i), Split::test, Label::logical_anomaly});

    fs::create_directories(directory / "features");
    fs::create_directories(directory / "masks");
    fs::create_directories(directory / "gt");

    const auto bad_pairs = disallowed_pairs(spec);
    Manifest manifest;
    manifest.category = spec.category;
    for (const auto& plan : plans) {
        Rng rng(master.next());

        // Which prototype each class uses in this scene.
        std::map<std::string, std::string> proto_of;
        for (const auto& c : spec.classes)
            proto_of[c.name] = c.variants.empty() ? c.name : c.variants[rng.index(c.variants.size())];
        if (spec.consistency) {
            const auto& cons = *spec.consistency;
            const bool swap = plan.label == Label::logical_anomaly && spec.logical_mode == LogicalMode::attribute_swap;
            const auto& pool = swap ? bad_pairs : cons.allowed_pairs;
            const auto& pick = pool[rng.index(pool.size())];
            proto_of[cons.class_a] = pick.first;
            proto_of[cons.class_b] = pick.second;
        }

        std::vector<std::pair<std::string, int>> counts;
        for (const auto& c : spec.classes) {
            int n = c.count;
            if (plan.label == Label::logical_anomaly && spec.logical_mode == LogicalMode::count_delta &&
                c.name == logical_target(spec))
                n += spec.count_delta;
            counts.emplace_back(c.name, n);
        }

        // Non-overlapping square placements, first fit over shuffled corners.
        const std::size_t s = spec.instance_side;
        std::vector<std::size_t> corners;
        for (std::size_t y = 0; y + s <= side; ++y)
            for (std::size_t x = 0; x + s <= side; ++x) corners.push_back(y * side + x);
        rng.shuffle(corners);
        std::vector<char> used(cells, 0);
        std::vector<Placement> placements;
        std::size_t next_corner = 0;
        for (const auto& [name, n] : counts) {
            for (int i = 0; i < n; ++i) {
                bool placed = false;
                while (!placed && next_corner < corners.size()) {
                    const std::size_t cy = corners[next_corner] / side, cx = corners[next_corner] % side;
                    ++next_corner;
                    std::vector<std::size_t> block;
                    for (std::size_t dy = 0; dy < s; ++dy)
                        for (std::size_t dx = 0; dx < s; ++dx) block.push_back((cy + dy) * side + cx + dx);
                    if (std::any_of(block.begin(), block.end(), [&](auto c) { return used[c] != 0; })) continue;
                    for (auto c : block) used[c] = 1;
                    placements.push_back({name, proto_of[name], std::move(block)});
                    placed = true;
                }
                if (!placed) throw ValidationError("infeasible: could not place every instance on the grid");
            }
        }

        FeatureStack stack;
        for (std::size_t k = 0; k < kStageCount; ++k) {
            auto& g = stack.stages[k];
            g.height = side;
            g.width = side;
            g.patches = background[k];
            for (const auto& pl : placements)
                for (auto c : pl.cells) std::copy(protos[pl.prototype][k].begin(), protos[pl.prototype][k].end(), g.patches.row(c).begin());
            for (std::size_t c = 0; c < cells; ++c) {
                auto row = g.patches.row(c);
                for (auto& x : row) x = static_cast<float>(x + spec.noise * rng.normal());
                normalize_in_place(row);
            }
        }

        ImageRecord rec;
        rec.image_id = plan.id;
        rec.split = plan.split;
        rec.label = plan.label;

        if (plan.label == Label::structural_anomaly) {
            std::vector<std::size_t> order(cells);
            for (std::size_t c = 0; c < cells; ++c) order[c] = c;
            rng.shuffle(order);
            order.resize(spec.structural_patches);
            GridMask gt{side, side, std::vector<std::uint8_t>(cells, 0)};
            for (auto c : order) gt.cells[c] = 1;
            for (std::size_t k = 0; k < kStageCount; ++k)
                for (auto c : order) perturb(stack.stages[k].patches.row(c), random_unit(rng, d), spec.epsilon);
            const fs::path gt_path = directory / "gt" / (plan.id + ".lsad");
            write_tensor(tensor_from_mask(gt), gt_path);
            rec.pixel_gt_path = gt_path;
        }

        for (std::size_t k = 0; k < kStageCount; ++k) {
            rec.stage_feature_paths[k] = directory / "features" / (plan.id + "_s" + std::to_string(k) + ".lsad");
            write_tensor(tensor_from_grid(stack.stages[k]), rec.stage_feature_paths[k]);
        }
        for (std::size_t n = 0; n < placements.size(); ++n) {
            GridMask m{side, side, std::vector<std::uint8_t>(cells, 0)};
            for (auto c : placements[n].cells) m.cells[c] = 1;
            InterestInstance ii;
            ii.class_name = placements[n].class_name;
            ii.mask_path = directory / "masks" / (plan.id + "_i" + std::to_string(n) + ".lsad");
            ii.area_fraction = static_cast<double>(placements[n].cells.size()) / static_cast<double>(cells);
            write_tensor(tensor_from_mask(m), ii.mask_path);
            rec.interest_instances.push_back(std::move(ii));
        }
        manifest.images.push_back(std::move(rec));
    }

    SynthOutput out{directory / "manifest.json", directory / "rules.json", directory / "text_bank.json",
                    directory / "config.json"};
    save_manifest(manifest, out.manifest);
    save_rulespec(synth_rules(spec), out.rules);
    std::map<std::string, std::vector<float>> text;
    for (const auto& [label, stages] : protos) text[label] = stages[kStageCount - 1];
    save_text_bank(TextBank(std::move(text)), out.text_bank);
    json config = {{"manifest", "manifest.json"},
                   {"rules", "rules.json"},
                   {"text_bank", "text_bank.json"},
                   {"seed", spec.seed}};
    std::ofstream cfg(out.config, std::ios::trunc);
    if (!cfg) throw RuntimeError("cannot write '" + out.config.string() + "'");
    cfg << config.dump(2) << '\n';
    return out;
}

SynthSpec load_synth_spec(const fs::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open synth spec '" + source.string() + "'");
    SynthSpec s;
    try {
        const json doc = json::parse(in);
        s.category = doc.value("category", s.category);
        s.n_normal = doc.value("n_normal", s.n_normal);
        s.n_structural = doc.value("n_structural", s.n_structural);
        s.n_logical = doc.value("n_logical", s.n_logical);
        s.train_fraction = doc.value("train_fraction", s.train_fraction);
        s.validation_fraction = doc.value("validation_fraction", s.validation_fraction);
        s.grid_side = doc.value("grid_side", s.grid_side);
        s.dim = doc.value("dim", s.dim);
        s.instance_side = doc.value("instance_side", s.instance_side);
        s.noise = doc.value("noise", s.noise);
        s.epsilon = doc.value("epsilon", s.epsilon);
        s.structural_patches = doc.value("structural_patches", s.structural_patches);
        s.seed = doc.value("seed", s.seed);
        for (const auto& c : doc.at("classes"))
            s.classes.push_back({c.at("name").get<std::string>(), c.value("count", 1),
                                 c.value("variants", std::vector<std::string>{})});
        if (doc.contains("consistency") && !doc.at("consistency").is_null()) {
            const auto& c = doc.at("consistency");
            SynthConsistency cons{c.at("class_a").get<std::string>(), c.at("class_b").get<std::string>(), {}};
            for (const auto& p : c.at("allowed_pairs"))
                cons.allowed_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            s.consistency = std::move(cons);
        }
        if (doc.contains("logical")) {
            const auto& l = doc.at("logical");
            const auto mode = l.value("mode", std::string("count_delta"));
            if (mode == "count_delta") s.logical_mode = LogicalMode::count_delta;
            else if (mode == "attribute_swap") s.logical_mode = LogicalMode::attribute_swap;
            else throw ValidationError("unknown logical mode '" + mode + "'");
            s.logical_class = l.value("class", std::string{});
            s.count_delta = l.value("count_delta", s.count_delta);
        }
    } catch (const json::exception& e) {
        throw ValidationError("synth spec '" + source.string() + "' is malformed: " + e.what());
    }
    s.check();
    return s;
}

void save_synth_spec(const SynthSpec& s, const fs::path& destination) {
    json classes = json::array();
    for (const auto& c : s.classes) classes.push_back({{"name", c.name}, {"count", c.count}, {"variants", c.variants}});
    json doc = {{"category", s.category},
                {"n_normal", s.n_normal},
                {"n_structural", s.n_structural},
                {"n_logical", s.n_logical},
                {"train_fraction", s.train_fraction},
                {"validation_fraction", s.validation_fraction},
                {"grid_side", s.grid_side},
                {"dim", s.dim},
                {"instance_side", s.instance_side},
                {"noise", s.noise},
                {"epsilon", s.epsilon},
                {"structural_patches", s.structural_patches},
                {"seed", s.seed},
                {"classes", classes},
                {"logical",
                 {{"mode", s.logical_mode == LogicalMode::count_delta ? "count_delta" : "attribute_swap"},
                  {"class", s.logical_class},
                  {"count_delta", s.count_delta}}}};
    if (s.consistency) {
        json pairs = json::array();
        for (const auto& [a, b] : s.consistency->allowed_pairs) pairs.push_back({a, b});
        doc["consistency"] = {{"class_a", s.consistency->class_a}, {"class_b", s.consistency->class_b}, {"allowed_pairs", pairs}};
    }
    std::ofstream out(destination, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write '" + destination.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace logsad
