#include "logsad/bank_store.hpp"

#include "logsad/errors.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace logsad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path stage_file(const fs::path& dir, std::size_t k) { return dir / ("stage" + std::to_string(k) + ".lsad"); }

}  // namespace

void save_bank(const MemoryBank& bank, const BankMeta& meta, const fs::path& directory) {
    fs::create_directories(directory);
    json selected = json::array();
    for (std::size_t k = 0; k < kStageCount; ++k) {
        const auto& m = bank.stage(k);
        write_tensor(Tensor({static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)}, m.data),
                     stage_file(directory, k));
        selected.push_back(bank.coreset().selected[k]);
    }
    json doc = {{"category", meta.category},
                {"k_shot", meta.k_shot ? json(*meta.k_shot) : json(nullptr)},
                {"source_image_ids", bank.source_ids()},
                {"coreset", {{"ratio", bank.coreset().ratio}, {"seed", bank.coreset().seed}, {"selected", selected}}}};
    std::ofstream out(directory / "bank.json", std::ios::trunc);
    if (!out) throw RuntimeError("cannot write bank sidecar in '" + directory.string() + "'");
    out << doc.dump(2) << '\n';
}

StoredBank load_bank(const fs::path& directory) {
    std::ifstream in(directory / "bank.json");
    if (!in) throw ValidationError("no bank.json in '" + directory.string() + "'");
    BankMeta meta;
    CoresetInfo info;
    std::vector<std::string> ids;
    try {
        const json doc = json::parse(in);
        meta.category = doc.value("category", std::string{});
        if (doc.contains("k_shot") && !doc.at("k_shot").is_null()) meta.k_shot = doc.at("k_shot").get<std::size_t>();
        ids = doc.at("source_image_ids").get<std::vector<std::string>>();
        const auto& c = doc.at("coreset");
        info.ratio = c.at("ratio").get<double>();
        info.seed = c.at("seed").get<std::uint64_t>();
        const auto& sel = c.at("selected");
        if (!sel.is_array() || sel.size() != kStageCount) throw ValidationError("bank.json: coreset.selected needs 4 entries");
        for (std::size_t k = 0; k < kStageCount; ++k) info.selected[k] = sel[k].get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw ValidationError("bank.json in '" + directory.string() + "' is malformed: " + e.what());
    }
    std::array<Matrix, kStageCount> stages;
    for (std::size_t k = 0; k < kStageCount; ++k) {
        auto t = read_tensor(stage_file(directory, k));
        if (t.ndim() != 2) throw ValidationError("bank stage tensor must be [n, d]");
        stages[k] = Matrix(t.dims[0], t.dims[1], std::move(t.data));
    }
    return {MemoryBank(std::move(stages), std::move(ids), std::move(info)), meta};
}

}  // namespace logsad
