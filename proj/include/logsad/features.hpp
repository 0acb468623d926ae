#pragma once

#include "logsad/manifest.hpp"
#include "logsad/tensor_io.hpp"

#include <array>
#include <span>
#include <vector>

namespace logsad {

// rows x cols float matrix, row-major.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
    Matrix(std::size_t r, std::size_t c, std::vector<float> values);

    std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

// H x W grid of d-dimensional patch vectors for one backbone stage.
struct FeatureGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    Matrix patches;  // (height * width) x d, row index = y * width + x

    std::size_t dim() const noexcept { return patches.cols; }
    std::size_t cells() const noexcept { return height * width; }
};

struct FeatureStack {
    std::array<FeatureGrid, kStageCount> stages;

    std::size_t height() const noexcept { return stages[0].height; }
    std::size_t width() const noexcept { return stages[0].width; }
    // Throws ValidationError if stages disagree on H, W or hold no patches.
    void check_shape() const;
    // Throws ValidationError if any patch norm is outside 1 +/- tolerance.
    void check_unit_norm(double tolerance = 1e-4) const;
};

// Binary mask on the stage grid, true = cell belongs to the region.
struct GridMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> cells;

    std::size_t count() const;
};

double l2_norm(std::span<const float> v);
double dot(std::span<const float> a, std::span<const float> b);
// 1 - cos(a, b). Throws ValidationError for a zero vector or mismatched dims.
double cosine_distance(std::span<const float> a, std::span<const float> b);
void normalize_in_place(std::span<float> v);

FeatureGrid grid_from_tensor(const Tensor& t);
Tensor tensor_from_grid(const FeatureGrid& g);
FeatureStack load_feature_stack(const ImageRecord& image);

// Cells with value > 0.5 are set.
GridMask mask_from_tensor(const Tensor& t);
Tensor tensor_from_mask(const GridMask& m);
GridMask load_mask(const std::filesystem::path& path);

}  // namespace logsad
