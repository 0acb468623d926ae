#include "logsad/coreset.hpp"

#include "logsad/errors.hpp"
#include "logsad/random.hpp"

#include <cmath>
#include <limits>

namespace logsad {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::size_t coreset_first_index(std::size_t n_points, std::uint64_t seed) {
    if (n_points == 0) throw ValidationError("coreset of an empty point set");
    Rng rng(seed);
    return rng.index(n_points);
}

std::vector<std::size_t> coreset_select_from(const Matrix& points, std::size_t budget, std::size_t first) {
    const std::size_t n = points.rows;
    if (budget < 1 || budget > n)
        throw ValidationError("coreset budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    if (first >= n) throw ValidationError("coreset first index out of range");

    std::vector<std::size_t> picked;
    picked.reserve(budget);
    // -1 marks selected points so they never win the argmax.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t current = first;
    for (;;) {
        picked.push_back(current);
        nearest[current] = -1.0;
        if (picked.size() == budget) break;
        const auto center = points.row(current);
        std::size_t best = n;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (nearest[i] < 0.0) continue;
            const double d = squared_distance(points.row(i), center);
            if (d < nearest[i]) nearest[i] = d;
            if (nearest[i] > best_dist) {
                best_dist = nearest[i];
                best = i;
            }
        }
        current = best;
    }
    return picked;
}

std::vector<std::size_t> coreset_select(const Matrix& points, std::size_t budget, std::uint64_t seed) {
    if (budget < 1 || budget > points.rows)
        throw ValidationError("coreset budget " + std::to_string(budget) + " outside [1, " +
                              std::to_string(points.rows) + "]");
    return coreset_select_from(points, budget, coreset_first_index(points.rows, seed));
}

double coverage_radius(const Matrix& points, const std::vector<std::size_t>& selected) {
    if (selected.empty()) throw ValidationError("coverage radius of an empty selection");
    double radius = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto s : selected) best = std::min(best, squared_distance(points.row(i), points.row(s)));
        radius = std::max(radius, best);
    }
    return std::sqrt(radius);
}

}  // namespace logsad
