#include <algorithm>
#include <random>
#include <set>

#include <doctest.h>

#include "choiceforge/design.hpp"

using namespace choiceforge;

namespace {

AttributeSchema tiny_schema(std::vector<std::size_t> level_counts) {
    std::vector<Attribute> attrs;
    for (std::size_t i = 0; i < level_counts.size(); ++i) {
        Attribute a;
        a.name = "attr" + std::to_string(i);
        for (std::size_t l = 0; l < level_counts[i]; ++l)
            a.levels.push_back({static_cast<double>(l), "level" + std::to_string(l)});
        a.is_price = i == 0;  // first attribute doubles as the price
        a.desirable = i != 0;
        attrs.push_back(std::move(a));
    }
    return AttributeSchema(std::move(attrs));
}

std::multiset<std::vector<double>> slot_multiset(const std::vector<Dilemma>& dilemmas) {
    std::multiset<std::vector<double>> out;
    for (const auto& d : dilemmas) {
        out.insert(d.alt_a.codes);
        out.insert(d.alt_b.codes);
    }
    return out;
}

}  // namespace

TEST_CASE("default schema matches the default hotel attribute table") {
    auto schema = AttributeSchema::hotel_default();
    REQUIRE(schema.size() == 7);
    CHECK(schema.price_attribute().name == "price per night");
    CHECK(schema.at(0).name == "view");
    CHECK(schema.at(0).levels.size() == 2);
    CHECK(schema.at(1).name == "floor");
    std::vector<double> floors;
    for (const auto& l : schema.at(1).levels) floors.push_back(l.code);
    CHECK(floors == std::vector<double>{10, 18, 26});
    std::vector<double> prices;
    for (const auto& l : schema.price_attribute().levels) prices.push_back(l.code);
    CHECK(prices == std::vector<double>{1600, 2000, 2400, 2800, 3200});
    CHECK(schema.factorial_size() == 480);
}

TEST_CASE("schema validation rejects malformed inputs") {
    CHECK_THROWS_AS(AttributeSchema({{"only", {{0, "a"}, {1, "b"}}, true, false}}), DesignError);
    CHECK_THROWS_AS(AttributeSchema({{"p", {{0, "a"}}, false, true}}), DesignError);
    CHECK_THROWS_AS(AttributeSchema({{"p", {{0, "a"}, {0, "b"}}, false, true}}), DesignError);
    CHECK_THROWS_AS(AttributeSchema({{"p", {{0, "a"}, {1, "b"}}, false, true},
                                     {"p", {{0, "a"}, {1, "b"}}, true, false}}),
                    DesignError);
}

TEST_CASE("schema JSON round trip") {
    auto schema = AttributeSchema::hotel_default();
    auto back = AttributeSchema::from_json_text(schema.to_json_text());
    REQUIRE(back.size() == schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        CHECK(back.at(i).name == schema.at(i).name);
        CHECK(back.at(i).levels.size() == schema.at(i).levels.size());
        CHECK(back.at(i).is_price == schema.at(i).is_price);
    }
}

TEST_CASE("enumerate_alternatives covers the full factorial") {
    SUBCASE("hotel schema yields 480") {
        auto alts = enumerate_alternatives(AttributeSchema::hotel_default());
        CHECK(alts.size() == 480);
        std::set<std::vector<double>> unique;
        for (const auto& a : alts) unique.insert(a.codes);
        CHECK(unique.size() == 480);
    }
    SUBCASE("one binary attribute yields 2") {
        CHECK(enumerate_alternatives(tiny_schema({2})).size() == 2);
    }
    SUBCASE("2x3 yields 6") { CHECK(enumerate_alternatives(tiny_schema({2, 3})).size() == 6); }
    SUBCASE("order is lexicographic") {
        auto alts = enumerate_alternatives(tiny_schema({2, 3}));
        CHECK(alts.front().codes == std::vector<double>{0, 0});
        CHECK(alts[1].codes == std::vector<double>{0, 1});
        CHECK(alts.back().codes == std::vector<double>{1, 2});
    }
}

TEST_CASE("enumeration length equals the product of level counts") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<std::size_t> n_attrs(1, 4), n_levels(2, 4);
        std::vector<std::size_t> counts;
        std::size_t expected = 1;
        std::size_t k = n_attrs(rng);
        for (std::size_t i = 0; i < k; ++i) {
            counts.push_back(n_levels(rng));
            expected *= counts.back();
        }
        CHECK(enumerate_alternatives(tiny_schema(counts)).size() == expected);
    }
}

TEST_CASE("pair_dilemmas forms a perfect matching") {
    auto alts = enumerate_alternatives(AttributeSchema::hotel_default());
    auto dilemmas = pair_dilemmas(alts, 42);
    REQUIRE(dilemmas.size() == 240);

    std::multiset<std::vector<double>> inputs;
    for (const auto& a : alts) inputs.insert(a.codes);
    CHECK(slot_multiset(dilemmas) == inputs);

    for (const auto& d : dilemmas) CHECK(d.alt_a.codes != d.alt_b.codes);
}

TEST_CASE("pair_dilemmas is seed-deterministic and seed-sensitive") {
    auto alts = enumerate_alternatives(AttributeSchema::hotel_default());
    auto a = pair_dilemmas(alts, 42);
    auto b = pair_dilemmas(alts, 42);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        identical = identical && a[i].alt_a == b[i].alt_a && a[i].alt_b == b[i].alt_b;
    CHECK(identical);

    auto c = pair_dilemmas(alts, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        differs = differs || !(a[i].alt_a == c[i].alt_a) || !(a[i].alt_b == c[i].alt_b);
    CHECK(differs);
}

TEST_CASE("pair_dilemmas error cases") {
    auto alts = enumerate_alternatives(tiny_schema({2, 2}));
    SUBCASE("two alternatives give the single possible matching") {
        std::vector<Alternative> two{alts[0], alts[1]};
        auto d = pair_dilemmas(two, 1);
        REQUIRE(d.size() == 1);
        CHECK(slot_multiset(d) == std::multiset<std::vector<double>>{alts[0].codes, alts[1].codes});
    }
    SUBCASE("odd count") {
        std::vector<Alternative> three{alts[0], alts[1], alts[2]};
        CHECK_THROWS_AS(pair_dilemmas(three, 1), OddCountError);
    }
    SUBCASE("duplicates") {
        std::vector<Alternative> dup{alts[0], alts[0]};
        CHECK_THROWS_AS(pair_dilemmas(dup, 1), DuplicateAlternativeError);
    }
}

TEST_CASE("swap_orders is an involution preserving ids and slots") {
    auto alts = enumerate_alternatives(AttributeSchema::hotel_default());
    auto dilemmas = pair_dilemmas(alts, 9);
    auto swapped = swap_orders(dilemmas);
    REQUIRE(swapped.size() == dilemmas.size());
    CHECK(slot_multiset(swapped) == slot_multiset(dilemmas));
    for (std::size_t i = 0; i < dilemmas.size(); ++i) {
        CHECK(swapped[i].id == dilemmas[i].id);
        CHECK(swapped[i].alt_a == dilemmas[i].alt_b);
        CHECK(swapped[i].alt_b == dilemmas[i].alt_a);
    }
    auto back = swap_orders(swapped);
    for (std::size_t i = 0; i < dilemmas.size(); ++i) {
        CHECK(back[i].alt_a == dilemmas[i].alt_a);
        CHECK(back[i].alt_b == dilemmas[i].alt_b);
    }
}

TEST_CASE("dilemma JSON round trip") {
    auto alts = enumerate_alternatives(tiny_schema({2, 3}));
    auto dilemmas = pair_dilemmas(alts, 5);
    auto back = dilemmas_from_json_text(dilemmas_to_json_text(dilemmas));
    REQUIRE(back.size() == dilemmas.size());
    for (std::size_t i = 0; i < dilemmas.size(); ++i) {
        CHECK(back[i].id == dilemmas[i].id);
        CHECK(back[i].alt_a == dilemmas[i].alt_a);
        CHECK(back[i].alt_b == dilemmas[i].alt_b);
    }
}
