#pragma once

#include "logsad/features.hpp"
#include "logsad/patch_detector.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("logsad_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<float> v(d);
    double s = 0.0;
    for (auto& x : v) {
        x = static_cast<float>(n(rng));
        s += static_cast<double>(x) * x;
    }
    s = std::sqrt(s);
    for (auto& x : v) x = static_cast<float>(x / s);
    return v;
}

inline logsad::Matrix random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t d) {
    logsad::Matrix m(rows, d);
    for (std::size_t i = 0; i < rows; ++i) {
        auto v = random_unit(rng, d);
        std::copy(v.begin(), v.end(), m.row(i).begin());
    }
    return m;
}

inline std::vector<std::vector<float>> to_rows(const logsad::Matrix& m) {
    std::vector<std::vector<float>> out;
    for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

// Stack with the same grid shape on every stage; per-stage dims may differ.
inline logsad::FeatureStack random_stack(std::mt19937_64& rng, std::size_t h, std::size_t w,
                                         std::array<std::size_t, logsad::kStageCount> dims) {
    logsad::FeatureStack s;
    for (std::size_t k = 0; k < logsad::kStageCount; ++k) {
        s.stages[k].height = h;
        s.stages[k].width = w;
        s.stages[k].patches = random_unit_rows(rng, h * w, dims[k]);
    }
    return s;
}

// Same matrix on every stage.
inline logsad::FeatureStack uniform_stack(const logsad::Matrix& m, std::size_t h, std::size_t w) {
    logsad::FeatureStack s;
    for (auto& g : s.stages) {
        g.height = h;
        g.width = w;
        g.patches = m;
    }
    return s;
}

inline logsad::MemoryBank bank_of(const std::array<logsad::Matrix, logsad::kStageCount>& stages) {
    return logsad::MemoryBank(stages, {}, {});
}

}  // namespace testutil
