#pragma once

#include "logsad/manifest.hpp"
#include "logsad/rule_spec.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace logsad {

struct SynthClass {
    std::string name;
    int count = 1;                      // instances in a normal scene
    std::vector<std::string> variants;  // attribute labels; empty = one prototype named after the class
};

// Pairing constraint between the variants of two classes.
struct SynthConsistency {
    std::string class_a;
    std::string class_b;
    std::vector<std::pair<std::string, std::string>> allowed_pairs;
};

enum class LogicalMode { count_delta, attribute_swap };

struct SynthSpec {
    std::string category = "synthetic";
    std::size_t n_normal = 50;
    std::size_t n_structural = 25;
    std::size_t n_logical = 25;
    // Normal images go to train / validation / test in these proportions.
    double train_fraction = 0.5;
    double validation_fraction = 0.2;

    std::size_t grid_side = 16;
    std::size_t dim = 16;  // per stage
    std::size_t instance_side = 1;
    double noise = 0.05;

    std::vector<SynthClass> classes;
    std::optional<SynthConsistency> consistency;

    double epsilon = 0.5;
    std::size_t structural_patches = 4;

    LogicalMode logical_mode = LogicalMode::count_delta;
    std::string logical_class;  // defaults to the first class
    int count_delta = -1;

    std::uint64_t seed = 42;

    // Throws ValidationError for an infeasible or malformed spec.
    void check() const;
};

// 15 single-cell "pushpin" instances on a 16x16 grid; 50 normal /
// 25 structural / 25 logical (count - 1); seed 42.
SynthSpec pushpins_like_spec();

SynthSpec load_synth_spec(const std::filesystem::path& source);
void save_synth_spec(const SynthSpec& spec, const std::filesystem::path& destination);

struct SynthOutput {
    std::filesystem::path manifest;
    std::filesystem::path rules;
    std::filesystem::path text_bank;
    std::filesystem::path config;
};

// Writes features/, masks/, gt/, manifest.json, rules.json, text_bank.json
// and config.json under `directory`. Same spec => byte-identical files.
SynthOutput generate_dataset(const SynthSpec& spec, const std::filesystem::path& directory);

// Rules implied by the spec: count_eq per class, plus zs_consistency when a
// consistency constraint is configured.
RuleSpec synth_rules(const SynthSpec& spec);

}  // namespace logsad
