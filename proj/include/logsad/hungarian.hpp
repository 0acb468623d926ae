#pragma once

#include <utility>
#include <vector>

namespace logsad {

struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major

    CostMatrix() = default;
    CostMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    CostMatrix(std::size_t r, std::size_t c, std::vector<double> v);

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    CostMatrix transposed() const;
};

struct Assignment {
    // (row, col) pairs in the caller's indexing, sorted by row. Covers all
    // min(rows, cols) elements of the smaller side.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double total = 0.0;

    std::size_t size() const noexcept { return pairs.size(); }
    double mean() const { return pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size()); }
};

// Minimum total cost of matching every element of the smaller side. Only
// the optimal value; cheaper than hungarian() because no tie-breaking is done.
// Throws ValidationError on an empty matrix or negative/non-finite entries.
double optimal_assignment_cost(const CostMatrix& cost);

// Optimal assignment via Kuhn-Munkres with potentials. Among optimal
// assignments the lexicographically smallest is returned, where the
// sequence compared is, for each element of the smaller side in order
// (rows when rows <= cols, otherwise columns), the index it is matched to.
Assignment hungarian(const CostMatrix& cost);

}  // namespace logsad
