#pragma once

#include "logsad/pipeline.hpp"
#include "logsad/synth.hpp"

#include <filesystem>

namespace testutil {

// Pushpins-like scene shrunk to an 8x8 grid so many images stay fast.
inline logsad::SynthSpec small_spec(std::size_t n_normal, std::size_t n_structural, std::size_t n_logical,
                                    double epsilon = 0.5, std::uint64_t seed = 42) {
    auto s = logsad::pushpins_like_spec();
    s.grid_side = 8;
    s.dim = 8;
    s.classes = {{"pushpin", 5, {}}};
    s.n_normal = n_normal;
    s.n_structural = n_structural;
    s.n_logical = n_logical;
    s.epsilon = epsilon;
    s.structural_patches = 2;
    s.seed = seed;
    return s;
}

inline logsad::PipelineConfig synth_config(const logsad::SynthSpec& spec, const std::filesystem::path& dir) {
    const auto out = logsad::generate_dataset(spec, dir);
    auto cfg = logsad::load_config(out.config);
    cfg.threads = 1;
    return cfg;
}

}  // namespace testutil
