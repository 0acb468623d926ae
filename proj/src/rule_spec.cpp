#include "logsad/rule_spec.hpp"

#include "logsad/errors.hpp"
#include "logsad/text_bank.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace logsad {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Reads rule parameters, recording problems instead of throwing so one pass
// reports everything wrong with a rule.
class Reader {
public:
    Reader(const json& obj, std::string where, std::vector<std::string>& problems)
        : obj_(obj), where_(std::move(where)), problems_(problems) {}

    std::string str(const char* key) {
        auto it = obj_.find(key);
        if (it == obj_.end() || !it->is_string()) {
            fail(std::string("missing string '") + key + "'");
            return {};
        }
        return it->get<std::string>();
    }

    int integer(const char* key) {
        auto it = obj_.find(key);
        if (it == obj_.end() || !it->is_number_integer()) {
            fail(std::string("missing integer '") + key + "'");
            return 0;
        }
        return it->get<int>();
    }

    double number(const char* key, double fallback, bool required) {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            if (required) fail(std::string("missing number '") + key + "'");
            return fallback;
        }
        if (!it->is_number()) {
            fail(std::string("'") + key + "' must be a number");
            return fallback;
        }
        return it->get<double>();
    }

    std::vector<std::string> labels(const char* key) {
        std::vector<std::string> out;
        auto it = obj_.find(key);
        if (it == obj_.end() || !it->is_array() || it->empty()) {
            fail(std::string("'") + key + "' must be a non-empty array of labels");
            return out;
        }
        for (const auto& v : *it) {
            if (!v.is_string()) {
                fail(std::string("'") + key + "' must hold strings");
                return {};
            }
            out.push_back(v.get<std::string>());
        }
        return out;
    }

    std::map<std::string, int> counts(const char* key) {
        std::map<std::string, int> out;
        auto it = obj_.find(key);
        if (it == obj_.end() || !it->is_object()) {
            fail(std::string("'") + key + "' must be an object of label -> count");
            return out;
        }
        for (auto e = it->begin(); e != it->end(); ++e) {
            if (!e.value().is_number_integer() || e.value().get<int>() < 0) {
                fail(std::string("'") + key + "." + e.key() + "' must be a non-negative integer");
                continue;
            }
            out[e.key()] = e.value().get<int>();
        }
        return out;
    }

    void fail(const std::string& what) { problems_.push_back(where_ + ": " + what); }

private:
    const json& obj_;
    std::string where_;
    std::vector<std::string>& problems_;
};

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

Rule parse_rule(const json& obj, const std::string& where, std::vector<std::string>& problems) {
    Reader r(obj, where, problems);
    Rule rule;
    rule.id = r.str("id");
    rule.min_area = r.number("min_area", kDefaultMinArea, false);
    rule.min_area_explicit = obj.contains("min_area");
    if (!(rule.min_area >= 0.0 && rule.min_area < 1.0)) r.fail("min_area must be in [0, 1)");
    const std::string kind = r.str("kind");
    if (kind == "count_eq") {
        CountEq p{r.str("class"), r.integer("k")};
        if (p.k < 0) r.fail("k must be >= 0");
        rule.params = p;
    } else if (kind == "zs_consistency") {
        ZsConsistency p{r.str("class_a"), r.labels("vocab_a"), r.str("class_b"), r.labels("vocab_b"), {}};
        auto it = obj.find("allowed_pairs");
        if (it == obj.end() || !it->is_array()) {
            r.fail("'allowed_pairs' must be an array of [label_a, label_b]");
        } else {
            for (const auto& pair : *it) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
                    r.fail("'allowed_pairs' entries must be [label_a, label_b]");
                    continue;
                }
                std::pair<std::string, std::string> pr{pair[0].get<std::string>(), pair[1].get<std::string>()};
                if (!contains(p.vocab_a, pr.first) || !contains(p.vocab_b, pr.second))
                    r.fail("allowed pair (" + pr.first + "," + pr.second + ") is not in vocab_a x vocab_b");
                p.allowed_pairs.push_back(std::move(pr));
            }
        }
        rule.params = std::move(p);
    } else if (kind == "attr_count_consistency") {
        AttrCountConsistency p{r.str("attr_class"), r.labels("vocab"), r.str("count_class"), r.counts("map")};
        for (const auto& [label, n] : p.counts)
            if (!contains(p.vocab, label)) r.fail("map label '" + label + "' is not in vocab");
        rule.params = std::move(p);
    } else if (kind == "histogram_match") {
        HistogramMatch p{r.str("class"), r.labels("vocab"), r.counts("reference")};
        for (const auto& [label, n] : p.reference)
            if (!contains(p.vocab, label)) r.fail("reference label '" + label + "' is not in vocab");
        rule.params = std::move(p);
    } else if (kind == "region_count_eq") {
        RegionCountEq p;
        p.class_name = r.str("class");
        const std::string axis = r.str("axis");
        if (axis == "x") p.axis = Axis::x;
        else if (axis == "y") p.axis = Axis::y;
        else if (!axis.empty()) r.fail("axis must be 'x' or 'y'");
        p.split_fraction = r.number("split_fraction", 0.5, true);
        if (!(p.split_fraction > 0.0 && p.split_fraction < 1.0)) r.fail("split_fraction must be in (0, 1)");
        rule.params = std::move(p);
    } else if (!kind.empty()) {
        r.fail("unknown rule kind '" + kind + "'");
    }
    return rule;
}

json rule_to_json(const Rule& rule) {
    json j = {{"id", rule.id}, {"kind", kind_name(rule.params)}};
    if (rule.min_area_explicit) j["min_area"] = rule.min_area;
    std::visit(overloaded{
                   [&](const CountEq& p) {
                       j["class"] = p.class_name;
                       j["k"] = p.k;
                   },
                   [&](const ZsConsistency& p) {
                       j["class_a"] = p.class_a;
                       j["vocab_a"] = p.vocab_a;
                       j["class_b"] = p.class_b;
                       j["vocab_b"] = p.vocab_b;
                       json pairs = json::array();
                       for (const auto& [a, b] : p.allowed_pairs) pairs.push_back({a, b});
                       j["allowed_pairs"] = pairs;
                   },
                   [&](const AttrCountConsistency& p) {
                       j["attr_class"] = p.attr_class;
                       j["vocab"] = p.vocab;
                       j["count_class"] = p.count_class;
                       j["map"] = p.counts;
                   },
                   [&](const HistogramMatch& p) {
                       j["class"] = p.class_name;
                       j["vocab"] = p.vocab;
                       j["reference"] = p.reference;
                   },
                   [&](const RegionCountEq& p) {
                       j["class"] = p.class_name;
                       j["axis"] = p.axis == Axis::x ? "x" : "y";
                       j["split_fraction"] = p.split_fraction;
                   },
               },
               rule.params);
    return j;
}

}  // namespace

const char* kind_name(const RuleParams& params) noexcept {
    return std::visit(overloaded{
                          [](const CountEq&) { return "count_eq"; },
                          [](const ZsConsistency&) { return "zs_consistency"; },
                          [](const AttrCountConsistency&) { return "attr_count_consistency"; },
                          [](const HistogramMatch&) { return "histogram_match"; },
                          [](const RegionCountEq&) { return "region_count_eq"; },
                      },
                      params);
}

std::vector<std::string> referenced_classes(const Rule& rule) {
    return std::visit(overloaded{
                          [](const CountEq& p) { return std::vector<std::string>{p.class_name}; },
                          [](const ZsConsistency& p) { return std::vector<std::string>{p.class_a, p.class_b}; },
                          [](const AttrCountConsistency& p) {
                              return std::vector<std::string>{p.attr_class, p.count_class};
                          },
                          [](const HistogramMatch& p) { return std::vector<std::string>{p.class_name}; },
                          [](const RegionCountEq& p) { return std::vector<std::string>{p.class_name}; },
                      },
                      rule.params);
}

std::vector<std::string> referenced_labels(const Rule& rule) {
    return std::visit(overloaded{
                          [](const CountEq&) { return std::vector<std::string>{}; },
                          [](const ZsConsistency& p) {
                              auto v = p.vocab_a;
                              v.insert(v.end(), p.vocab_b.begin(), p.vocab_b.end());
                              return v;
                          },
                          [](const AttrCountConsistency& p) { return p.vocab; },
                          [](const HistogramMatch& p) { return p.vocab; },
                          [](const RegionCountEq&) { return std::vector<std::string>{}; },
                      },
                      rule.params);
}

bool RuleSpec::declares(const std::string& class_name) const { return contains(interests, class_name); }

RuleSpec parse_rulespec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("rule file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("rule file root must be an object");
    std::vector<std::string> problems;
    RuleSpec spec;
    Reader top(doc, "rulespec", problems);
    spec.category = top.str("category");
    if (auto it = doc.find("interests"); it == doc.end() || !it->is_array()) {
        top.fail("missing array 'interests'");
    } else {
        for (const auto& v : *it) {
            if (!v.is_string()) {
                top.fail("'interests' must hold strings");
                continue;
            }
            spec.interests.push_back(v.get<std::string>());
        }
    }
    auto rules = doc.find("rules");
    if (rules == doc.end() || !rules->is_array()) {
        top.fail("missing array 'rules'");
    } else {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < rules->size(); ++i) {
            const auto& obj = (*rules)[i];
            const std::string where = "rules[" + std::to_string(i) + "]";
            if (!obj.is_object()) {
                problems.push_back(where + ": must be an object");
                continue;
            }
            const std::size_t before = problems.size();
            Rule rule = parse_rule(obj, where, problems);
            if (problems.size() != before) continue;
            if (!ids.insert(rule.id).second) problems.push_back(where + ": duplicate rule id '" + rule.id + "'");
            for (const auto& cls : referenced_classes(rule))
                if (!spec.declares(cls))
                    problems.push_back(where + " (" + rule.id + "): references undeclared interest '" + cls + "'");
            spec.rules.push_back(std::move(rule));
        }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return spec;
}

RuleSpec load_rulespec(const std::filesystem::path& source) {
    std::ifstream in(source);
    if (!in) throw ValidationError("cannot open rule file '" + source.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_rulespec(buf.str());
}

void save_rulespec(const RuleSpec& spec, const std::filesystem::path& destination) {
    json rules = json::array();
    for (const auto& r : spec.rules) rules.push_back(rule_to_json(r));
    json doc = {{"category", spec.category}, {"interests", spec.interests}, {"rules", rules}};
    std::ofstream out(destination, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write rule file '" + destination.string() + "'");
    out << doc.dump(2) << '\n';
}

std::vector<std::string> check_rules_against_bank(const RuleSpec& spec, const TextBank& bank) {
    std::vector<std::string> problems;
    for (const auto& rule : spec.rules)
        for (const auto& label : referenced_labels(rule))
            if (!bank.contains(label))
                problems.push_back("rule '" + rule.id + "': label '" + label + "' missing from text bank");
    return problems;
}

bool rules_need_text_bank(const RuleSpec& spec) {
    return std::any_of(spec.rules.begin(), spec.rules.end(),
                       [](const Rule& r) { return !referenced_labels(r).empty(); });
}

void apply_default_min_area(RuleSpec& spec, double min_area) {
    if (!(min_area >= 0.0 && min_area < 1.0)) throw ValidationError("min_area must be in [0, 1)");
    for (auto& r : spec.rules)
        if (!r.min_area_explicit) r.min_area = min_area;
}

}  // namespace logsad
