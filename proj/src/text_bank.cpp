#include "logsad/text_bank.hpp"

#include "logsad/errors.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace logsad {

using nlohmann::json;

TextBank::TextBank(std::map<std::string, std::vector<float>> embeddings) : embeddings_(std::move(embeddings)) {
    std::vector<std::string> problems;
    bool first = true;
    for (const auto& [label, vec] : embeddings_) {
        if (first) {
            dim_ = vec.size();
            first = false;
        }
        if (vec.empty()) problems.push_back("text embedding '" + label + "' is empty");
        if (vec.size() != dim_) {
            problems.push_back("text embedding '" + label + "' has dim " + std::to_string(vec.size()) +
                               ", expected " + std::to_string(dim_));
            continue;
        }
        double sq = 0.0;
        for (float v : vec) sq += static_cast<double>(v) * v;
        if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance)
            problems.push_back("text embedding '" + label + "' is not unit norm (" + std::to_string(std::sqrt(sq)) + ")");
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
}

const std::vector<float>& TextBank::at(const std::string& label) const {
    auto it = embeddings_.find(label);
    if (it == embeddings_.end()) throw ValidationError("label '" + label + "' missing from text bank");
    return it->second;
}

TextBank load_text_bank(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open text bank '" + source.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("text bank '" + source.string() + "' is not valid JSON: " + e.what());
    }
    auto emb = doc.find("embeddings");
    if (!doc.is_object() || emb == doc.end() || !emb->is_object())
        throw ValidationError("text bank '" + source.string() + "' lacks an 'embeddings' object");
    std::map<std::string, std::vector<float>> entries;
    std::vector<std::string> problems;
    for (auto it = emb->begin(); it != emb->end(); ++it) {
        if (!it.value().is_array()) {
            problems.push_back("text embedding '" + it.key() + "' must be an array of numbers");
            continue;
        }
        std::vector<float> vec;
        for (const auto& x : it.value()) {
            if (!x.is_number()) {
                problems.push_back("text embedding '" + it.key() + "' holds a non-number");
                break;
            }
            vec.push_back(x.get<float>());
        }
        entries.emplace(it.key(), std::move(vec));
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    TextBank bank(std::move(entries));
    if (auto d = doc.find("dim"); d != doc.end() && d->is_number_unsigned() && !bank.empty() &&
                                  d->get<std::size_t>() != bank.dim())
        throw ValidationError("text bank declares dim " + std::to_string(d->get<std::size_t>()) +
                              " but embeddings have dim " + std::to_string(bank.dim()));
    return bank;
}

void save_text_bank(const TextBank& bank, const std::filesystem::path& destination) {
    json emb = json::object();
    for (const auto& [label, vec] : bank.entries()) emb[label] = vec;
    json doc = {{"dim", bank.dim()}, {"embeddings", emb}};
    std::ofstream out(destination, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write text bank '" + destination.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace logsad
