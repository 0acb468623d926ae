#pragma once

#include "logsad/patch_detector.hpp"

#include <filesystem>
#include <optional>

namespace logsad {

// Bank directory layout: stage0.lsad .. stage3.lsad ([n_k, d_k] tensors)
// plus bank.json holding provenance and coreset metadata.
struct BankMeta {
    std::string category;
    std::optional<std::size_t> k_shot;
};

void save_bank(const MemoryBank& bank, const BankMeta& meta, const std::filesystem::path& directory);

struct StoredBank {
    MemoryBank bank;
    BankMeta meta;
};

StoredBank load_bank(const std::filesystem::path& directory);

}  // namespace logsad
