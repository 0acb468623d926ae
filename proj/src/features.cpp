#include "logsad/features.hpp"

#include "logsad/errors.hpp"

#include <algorithm>
#include <cmath>

namespace logsad {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<float> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw ValidationError("matrix data does not match its shape");
}

void FeatureStack::check_shape() const {
    for (std::size_t k = 0; k < kStageCount; ++k) {
        const auto& s = stages[k];
        if (s.height == 0 || s.width == 0 || s.dim() == 0)
            throw ValidationError("stage " + std::to_string(k) + " is empty");
        if (s.height != stages[0].height || s.width != stages[0].width)
            throw ValidationError("stage " + std::to_string(k) + " grid differs from stage 0");
        if (s.patches.rows != s.cells()) throw ValidationError("stage " + std::to_string(k) + " row count mismatch");
    }
}

void FeatureStack::check_unit_norm(double tolerance) const {
    for (std::size_t k = 0; k < kStageCount; ++k) {
        const auto& p = stages[k].patches;
        for (std::size_t i = 0; i < p.rows; ++i) {
            const double n = l2_norm(p.row(i));
            if (std::abs(n - 1.0) > tolerance)
                throw ValidationError("stage " + std::to_string(k) + " patch " + std::to_string(i) +
                                      " has norm " + std::to_string(n));
        }
    }
}

std::size_t GridMask::count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c != 0; }));
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine distance of a zero vector");
    return std::clamp(1.0 - dot(a, b) / (na * nb), 0.0, 2.0);
}

void normalize_in_place(std::span<float> v) {
    const double n = l2_norm(v);
    if (n == 0.0) throw ValidationError("cannot normalize a zero vector");
    for (auto& x : v) x = static_cast<float>(x / n);
}

FeatureGrid grid_from_tensor(const Tensor& t) {
    if (t.ndim() != 3) throw ValidationError("feature tensor must be [H, W, d], got ndim " + std::to_string(t.ndim()));
    FeatureGrid g;
    g.height = t.dims[0];
    g.width = t.dims[1];
    g.patches = Matrix(g.height * g.width, t.dims[2], t.data);
    return g;
}

Tensor tensor_from_grid(const FeatureGrid& g) {
    return Tensor({static_cast<std::uint32_t>(g.height), static_cast<std::uint32_t>(g.width),
                   static_cast<std::uint32_t>(g.dim())},
                  g.patches.data);
}

FeatureStack load_feature_stack(const ImageRecord& image) {
    FeatureStack stack;
    for (std::size_t k = 0; k < kStageCount; ++k) stack.stages[k] = grid_from_tensor(read_tensor(image.stage_feature_paths[k]));
    stack.check_shape();
    return stack;
}

GridMask mask_from_tensor(const Tensor& t) {
    if (t.ndim() != 2) throw ValidationError("mask tensor must be [H, W], got ndim " + std::to_string(t.ndim()));
    GridMask m;
    m.height = t.dims[0];
    m.width = t.dims[1];
    m.cells.resize(t.numel());
    std::transform(t.data.begin(), t.data.end(), m.cells.begin(), [](float v) { return v > 0.5f ? 1 : 0; });
    return m;
}

Tensor tensor_from_mask(const GridMask& m) {
    std::vector<float> data(m.cells.size());
    std::transform(m.cells.begin(), m.cells.end(), data.begin(), [](auto c) { return c ? 1.0f : 0.0f; });
    return Tensor({static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width)}, std::move(data));
}

GridMask load_mask(const std::filesystem::path& path) { return mask_from_tensor(read_tensor(path)); }

}  // namespace logsad
