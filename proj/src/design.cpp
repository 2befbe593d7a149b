#include "choiceforge/design.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace choiceforge {

using nlohmann::json;

std::optional<std::string> Attribute::label_for(double code) const {
    for (const auto& l : levels)
        if (l.code == code) return l.label;
    return std::nullopt;
}

bool Attribute::has_code(double code) const {
    return label_for(code).has_value();
}

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
    if (attributes_.empty()) throw DesignError("schema has no attributes");
    std::unordered_set<std::string> names;
    std::size_t price_count = 0;
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        const auto& a = attributes_[i];
        if (!names.insert(a.name).second)
            throw DesignError("duplicate attribute name: " + a.name);
        if (a.levels.size() < 2)
            throw DesignError("attribute needs >= 2 levels: " + a.name);
        std::set<double> codes;
        for (const auto& l : a.levels)
            if (!codes.insert(l.code).second)
                throw DesignError("duplicate level code in attribute: " + a.name);
        if (a.is_price) {
            price_index_ = i;
            ++price_count;
        }
    }
    if (price_count != 1)
        throw DesignError("schema must have exactly one price attribute");
}

std::optional<std::size_t> AttributeSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i)
        if (attributes_[i].name == name) return i;
    return std::nullopt;
}

std::size_t AttributeSchema::factorial_size() const {
    std::size_t n = 1;
    for (const auto& a : attributes_) n *= a.levels.size();
    return n;
}

AttributeSchema AttributeSchema::hotel_default() {
    std::vector<Attribute> attrs{
        {"view", {{0, "city"}, {1, "harbour"}}, true, false},
        {"floor", {{10, "10th"}, {18, "18th"}, {26, "26th"}}, true, false},
        {"access club", {{0, "does not have"}, {1, "has"}}, true, false},
        {"free mini bar",
         {{0, "soft drinks and snacks"}, {1, "soft drinks, snacks, wine and beer"}},
         true,
         false},
        {"guest smartphone",
         {{0, "not available"}, {1, "available with free voice and data"}},
         true,
         false},
        {"cancellation",
         {{0, "non-refundable"}, {1, "refundable up to 24 hours prior"}},
         true,
         false},
        {"price per night",
         {{1600, "1600"}, {2000, "2000"}, {2400, "2400"}, {2800, "2800"}, {3200, "3200"}},
         false,
         true},
    };
    return AttributeSchema(std::move(attrs));
}

AttributeSchema AttributeSchema::from_json_text(const std::string& text) {
    json j = json::parse(text);
    std::vector<Attribute> attrs;
    for (const auto& ja : j.at("attributes")) {
        Attribute a;
        a.name = ja.at("name").get<std::string>();
        for (const auto& jl : ja.at("levels"))
            a.levels.push_back({jl.at("code").get<double>(), jl.at("label").get<std::string>()});
        a.desirable = ja.at("desirable").get<bool>();
        a.is_price = ja.at("is_price").get<bool>();
        attrs.push_back(std::move(a));
    }
    return AttributeSchema(std::move(attrs));
}

std::string AttributeSchema::to_json_text() const {
    json j;
    j["attributes"] = json::array();
    for (const auto& a : attributes_) {
        json ja;
        ja["name"] = a.name;
        ja["levels"] = json::array();
        for (const auto& l : a.levels) ja["levels"].push_back({{"code", l.code}, {"label", l.label}});
        ja["desirable"] = a.desirable;
        ja["is_price"] = a.is_price;
        j["attributes"].push_back(std::move(ja));
    }
    return j.dump(2);
}

std::vector<Alternative> enumerate_alternatives(const AttributeSchema& schema) {
    std::vector<Alternative> out;
    out.reserve(schema.factorial_size());
    Alternative current;
    current.codes.resize(schema.size());
    // depth-first over attribute positions keeps the order lexicographic
    auto recurse = [&](auto&& self, std::size_t depth) -> void {
        if (depth == schema.size()) {
            out.push_back(current);
            return;
        }
        for (const auto& level : schema.at(depth).levels) {
            current.codes[depth] = level.code;
            self(self, depth + 1);
        }
    };
    recurse(recurse, 0);
    return out;
}

std::vector<Dilemma> pair_dilemmas(const std::vector<Alternative>& alternatives,
                                   std::uint64_t seed) {
    if (alternatives.size() % 2 != 0) throw OddCountError();
    {
        std::set<std::vector<double>> seen;
        for (const auto& a : alternatives)
            if (!seen.insert(a.codes).second) throw DuplicateAlternativeError();
    }
    std::vector<Alternative> shuffled = alternatives;
    std::mt19937_64 rng(seed);
    // Fisher-Yates; std::shuffle is implementation-defined across platforms
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> dist(0, i);
        std::swap(shuffled[i], shuffled[dist(rng)]);
    }
    std::vector<Dilemma> out;
    out.reserve(shuffled.size() / 2);
    for (std::size_t i = 0; i + 1 < shuffled.size(); i += 2)
        out.push_back({static_cast<int>(i / 2), shuffled[i], shuffled[i + 1]});
    return out;
}

std::vector<Dilemma> swap_orders(const std::vector<Dilemma>& dilemmas) {
    std::vector<Dilemma> out;
    out.reserve(dilemmas.size());
    for (const auto& d : dilemmas) out.push_back({d.id, d.alt_b, d.alt_a});
    return out;
}

std::string dilemmas_to_json_text(const std::vector<Dilemma>& dilemmas) {
    json j = json::array();
    for (const auto& d : dilemmas)
        j.push_back({{"id", d.id}, {"alt_a", d.alt_a.codes}, {"alt_b", d.alt_b.codes}});
    return j.dump(2);
}

std::vector<Dilemma> dilemmas_from_json_text(const std::string& text) {
    json j = json::parse(text);
    std::vector<Dilemma> out;
    for (const auto& jd : j) {
        Dilemma d;
        d.id = jd.at("id").get<int>();
        d.alt_a.codes = jd.at("alt_a").get<std::vector<double>>();
        d.alt_b.codes = jd.at("alt_b").get<std::vector<double>>();
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace choiceforge
