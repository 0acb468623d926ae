#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace logsad {

// Label -> unit-norm text embedding, already averaged over prompt templates.
class TextBank {
public:
    static constexpr double kNormTolerance = 1e-5;

    TextBank() = default;
    // Throws ValidationError on mixed dimensions or non-unit vectors.
    explicit TextBank(std::map<std::string, std::vector<float>> embeddings);

    bool contains(const std::string& label) const { return embeddings_.count(label) != 0; }
    const std::vector<float>& at(const std::string& label) const;
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return embeddings_.size(); }
    bool empty() const noexcept { return embeddings_.empty(); }
    const std::map<std::string, std::vector<float>>& entries() const noexcept { return embeddings_; }

private:
    std::map<std::string, std::vector<float>> embeddings_;
    std::size_t dim_ = 0;
};

// JSON document: {"dim": d, "embeddings": {"label": [..d floats..], ...}}
TextBank load_text_bank(const std::filesystem::path& source);
void save_text_bank(const TextBank& bank, const std::filesystem::path& destination);

}  // namespace logsad
