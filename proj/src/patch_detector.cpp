#include "logsad/patch_detector.hpp"

#include "logsad/coreset.hpp"
#include "logsad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace logsad {

namespace {

// Exact when both ends are equal, so constant regions stay constant.
double lerp(double a, double b, double w) { return a + (b - a) * w; }

}  // namespace

MemoryBank::MemoryBank(std::array<Matrix, kStageCount> stages, std::vector<std::string> source_ids,
                       CoresetInfo coreset)
    : stages_(std::move(stages)), source_ids_(std::move(source_ids)), coreset_(std::move(coreset)) {
    for (std::size_t k = 0; k < kStageCount; ++k) {
        const auto& m = stages_[k];
        if (m.rows == 0 || m.cols == 0) throw ValidationError("memory bank stage " + std::to_string(k) + " is empty");
        auto& norms = norms_[k];
        norms.resize(m.rows);
        for (std::size_t i = 0; i < m.rows; ++i) {
            norms[i] = l2_norm(m.row(i));
            if (std::abs(norms[i] - 1.0) > 1e-4)
                throw ValidationError("memory bank stage " + std::to_string(k) + " row " + std::to_string(i) +
                                      " is not unit norm");
        }
    }
}

MemoryBank build_bank(const std::vector<FeatureStack>& features, double coreset_ratio, std::uint64_t seed,
                      std::vector<std::string> source_ids) {
    if (features.empty()) throw ValidationError("build_bank needs at least one feature stack");
    if (!(coreset_ratio > 0.0 && coreset_ratio <= 1.0)) throw ValidationError("coreset ratio must be in (0, 1]");
    for (const auto& f : features) {
        f.check_shape();
        for (std::size_t k = 0; k < kStageCount; ++k)
            if (f.stages[k].dim() != features[0].stages[k].dim())
                throw ValidationError("inconsistent feature dim at stage " + std::to_string(k));
    }

    CoresetInfo info;
    info.ratio = coreset_ratio;
    info.seed = seed;
    std::array<Matrix, kStageCount> stages;
    for (std::size_t k = 0; k < kStageCount; ++k) {
        std::size_t total = 0;
        for (const auto& f : features) total += f.stages[k].patches.rows;
        const std::size_t d = features[0].stages[k].dim();
        Matrix all(total, d);
        auto out = all.data.begin();
        for (const auto& f : features) out = std::copy(f.stages[k].patches.data.begin(), f.stages[k].patches.data.end(), out);

        if (coreset_ratio < 1.0) {
            const auto budget = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(coreset_ratio * static_cast<double>(total) - 1e-9)));
            auto picked = coreset_select(all, budget, seed);
            Matrix reduced(picked.size(), d);
            for (std::size_t r = 0; r < picked.size(); ++r) {
                auto src = all.row(picked[r]);
                std::copy(src.begin(), src.end(), reduced.row(r).begin());
            }
            stages[k] = std::move(reduced);
            info.selected[k] = std::move(picked);
        } else {
            stages[k] = std::move(all);
        }
    }
    return MemoryBank(std::move(stages), std::move(source_ids), std::move(info));
}

double AnomalyMap::max() const {
    if (values.empty()) throw ValidationError("max of an empty anomaly map");
    return *std::max_element(values.begin(), values.end());
}

std::vector<double> nearest_cosine_distances(const Matrix& query, const Matrix& bank,
                                             const std::vector<double>& bank_norms) {
    if (query.cols != bank.cols)
        throw ValidationError("query dim " + std::to_string(query.cols) + " does not match bank dim " +
                              std::to_string(bank.cols));
    if (bank.rows == 0) throw ValidationError("empty memory bank");
    std::vector<double> norms = bank_norms;
    if (norms.size() != bank.rows) {
        norms.resize(bank.rows);
        for (std::size_t j = 0; j < bank.rows; ++j) norms[j] = l2_norm(bank.row(j));
    }
    std::vector<double> out(query.rows);
    for (std::size_t i = 0; i < query.rows; ++i) {
        const auto u = query.row(i);
        const double nu = l2_norm(u);
        if (nu == 0.0) throw ValidationError("zero query patch at row " + std::to_string(i));
        // Max similarity is the min distance; take the distance once at the end.
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < bank.rows; ++j) best = std::max(best, dot(u, bank.row(j)) / (nu * norms[j]));
        out[i] = std::clamp(1.0 - best, 0.0, 2.0);
    }
    return out;
}

PatchResult patch_score(const FeatureStack& query, const MemoryBank& bank) {
    query.check_shape();
    PatchResult result;
    result.map.height = query.height();
    result.map.width = query.width();
    result.map.values.assign(query.height() * query.width(), 0.0);
    for (std::size_t k = 0; k < kStageCount; ++k) {
        const auto dist = nearest_cosine_distances(query.stages[k].patches, bank.stage(k), bank.row_norms(k));
        for (std::size_t c = 0; c < dist.size(); ++c) result.map.values[c] += dist[c];
    }
    for (auto& v : result.map.values) v /= static_cast<double>(kStageCount);
    result.score = result.map.max();
    return result;
}

AnomalyMap upsample_map(const AnomalyMap& map, std::size_t side) {
    if (map.height == 0 || map.width == 0) throw ValidationError("cannot resize an empty map");
    if (side < map.height || side < map.width)
        throw ValidationError("target side " + std::to_string(side) + " is smaller than the map");
    if (side == map.height && side == map.width) return map;

    // Source coordinate and blend weight per output index along one axis.
    struct Tap {
        std::size_t lo, hi;
        double w;
    };
    auto taps = [side](std::size_t in) {
        std::vector<Tap> t(side);
        const double scale = static_cast<double>(in) / static_cast<double>(side);
        for (std::size_t o = 0; o < side; ++o) {
            double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
            if (src < 0.0) src = 0.0;
            auto lo = static_cast<std::size_t>(std::floor(src));
            lo = std::min(lo, in - 1);
            const std::size_t hi = std::min(lo + 1, in - 1);
            t[o] = {lo, hi, src - static_cast<double>(lo)};
        }
        return t;
    };
    const auto ty = taps(map.height);
    const auto tx = taps(map.width);
    AnomalyMap out;
    out.height = side;
    out.width = side;
    out.values.resize(side * side);
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const auto& a = ty[y];
            const auto& b = tx[x];
            const double top = lerp(map.at(a.lo, b.lo), map.at(a.lo, b.hi), b.w);
            const double bottom = lerp(map.at(a.hi, b.lo), map.at(a.hi, b.hi), b.w);
            out.values[y * side + x] = lerp(top, bottom, a.w);
        }
    }
    return out;
}

}  // namespace logsad
