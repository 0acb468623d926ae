#include "logsad/hungarian.hpp"

#include "logsad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace logsad {

CostMatrix::CostMatrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != r * c) throw ValidationError("cost matrix data does not match its shape");
}

CostMatrix CostMatrix::transposed() const {
    CostMatrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
}

namespace {

void check_costs(const CostMatrix& cost) {
    if (cost.rows == 0 || cost.cols == 0) throw ValidationError("assignment on an empty cost matrix");
    for (double v : cost.values)
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("cost matrix entries must be finite and non-negative");
}

// rows <= cols. Returns the column matched to each row.
std::vector<std::size_t> solve_wide(const CostMatrix& a) {
    const std::size_t n = a.rows;
    const std::size_t m = a.cols;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double value_of(const CostMatrix& a, const std::vector<std::size_t>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < row_to_col.size(); ++i) total += a(i, row_to_col[i]);
    return total;
}

double wide_value(const CostMatrix& a) {
    if (a.rows == 0) return 0.0;
    return value_of(a, solve_wide(a));
}

CostMatrix without(const CostMatrix& a, std::size_t first_row, const std::vector<char>& col_taken) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < a.cols; ++j)
        if (!col_taken[j]) cols.push_back(j);
    CostMatrix sub(a.rows - first_row, cols.size());
    for (std::size_t i = first_row; i < a.rows; ++i)
        for (std::size_t c = 0; c < cols.size(); ++c) sub(i - first_row, c) = a(i, cols[c]);
    return sub;
}

// Lexicographically smallest optimal row->col map on a wide matrix: fix rows
// in order, each to the smallest column that still admits an optimal completion.
std::vector<std::size_t> lexicographic_optimum(const CostMatrix& a) {
    const double best = wide_value(a);
    const double tol = 1e-10 * (1.0 + std::abs(best));
    std::vector<char> taken(a.cols, 0);
    std::vector<std::size_t> row_to_col(a.rows, 0);
    double fixed = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        bool placed = false;
        for (std::size_t j = 0; j < a.cols && !placed; ++j) {
            if (taken[j]) continue;
            taken[j] = 1;
            const double rest = wide_value(without(a, i + 1, taken));
            if (fixed + a(i, j) + rest <= best + tol) {
                row_to_col[i] = j;
                fixed += a(i, j);
                placed = true;
            } else {
                taken[j] = 0;
            }
        }
        // Unreachable for finite costs: the optimal column for row i always qualifies.
        if (!placed) throw RuntimeError("assignment tie-breaking failed to complete");
    }
    return row_to_col;
}

}  // namespace

double optimal_assignment_cost(const CostMatrix& cost) {
    check_costs(cost);
    return cost.rows <= cost.cols ? wide_value(cost) : wide_value(cost.transposed());
}

Assignment hungarian(const CostMatrix& cost) {
    check_costs(cost);
    const bool transpose = cost.rows > cost.cols;
    const CostMatrix wide = transpose ? cost.transposed() : cost;
    const auto row_to_col = lexicographic_optimum(wide);

    Assignment out;
    for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        if (transpose) out.pairs.emplace_back(row_to_col[i], i);
        else out.pairs.emplace_back(i, row_to_col[i]);
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (const auto& [r, c] : out.pairs) out.total += cost(r, c);
    return out;
}

}  // namespace logsad
