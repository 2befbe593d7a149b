#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace choiceforge {

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OddCountError : DesignError {
    OddCountError() : DesignError("cannot pair an odd number of alternatives") {}
};
struct DuplicateAlternativeError : DesignError {
    DuplicateAlternativeError() : DesignError("alternative list contains duplicates") {}
};

struct Level {
    double code = 0.0;
    std::string label;
};

struct Attribute {
    std::string name;
    std::vector<Level> levels;
    bool desirable = true;
    bool is_price = false;

    /// Display label for a level code, if the code is legal for this attribute.
    std::optional<std::string> label_for(double code) const;
    bool has_code(double code) const;
};

/// Ordered attribute list defining the choice experiment. Validated on
/// construction: unique names, >= 2 distinct-coded levels each, exactly one
/// price attribute.
class AttributeSchema {
  public:
    explicit AttributeSchema(std::vector<Attribute> attributes);

    const std::vector<Attribute>& attributes() const { return attributes_; }
    std::size_t size() const { return attributes_.size(); }
    const Attribute& at(std::size_t i) const { return attributes_.at(i); }
    std::size_t price_index() const { return price_index_; }
    const Attribute& price_attribute() const { return attributes_[price_index_]; }
    std::optional<std::size_t> index_of(const std::string& name) const;

    /// Number of cells in the full factorial.
    std::size_t factorial_size() const;

    static AttributeSchema hotel_default();
    static AttributeSchema from_json_text(const std::string& text);
    std::string to_json_text() const;

  private:
    std::vector<Attribute> attributes_;
    std::size_t price_index_ = 0;
};

/// One fully specified option: a level code per schema attribute, in schema
/// order.
struct Alternative {
    std::vector<double> codes;

    double code(std::size_t attr_index) const { return codes.at(attr_index); }
    bool operator==(const Alternative&) const = default;
    bool operator<(const Alternative& o) const { return codes < o.codes; }
};

struct Dilemma {
    int id = 0;
    Alternative alt_a;
    Alternative alt_b;
};

/// Cartesian product of all level sets, lexicographic over schema attribute
/// order and level order.
std::vector<Alternative> enumerate_alternatives(const AttributeSchema& schema);

/// Seeded uniform-random perfect matching: Fisher-Yates shuffle, then adjacent
/// pairing. Every alternative appears in exactly one dilemma slot.
std::vector<Dilemma> pair_dilemmas(const std::vector<Alternative>& alternatives,
                                   std::uint64_t seed);

/// Exchange alt_a and alt_b in every dilemma, ids preserved.
std::vector<Dilemma> swap_orders(const std::vector<Dilemma>& dilemmas);

std::string dilemmas_to_json_text(const std::vector<Dilemma>& dilemmas);
std::vector<Dilemma> dilemmas_from_json_text(const std::string& text);

}  // namespace choiceforge
