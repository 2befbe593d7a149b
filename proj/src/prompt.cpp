#include "choiceforge/prompt.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace choiceforge {

namespace {

const char* kHotelNames[] = {"view",       "floor",        "access club", "free mini bar",
                             "guest smartphone", "cancellation", "price per night"};

bool is_hotel_schema(const AttributeSchema& schema) {
    for (const char* name : kHotelNames)
        if (!schema.index_of(name)) return false;
    return true;
}

std::string label_or_throw(const AttributeSchema& schema, const std::string& attr_name,
                           const Alternative& alt) {
    auto idx = schema.index_of(attr_name);
    if (!idx) throw PromptError("schema has no attribute named: " + attr_name);
    auto label = schema.at(*idx).label_for(alt.code(*idx));
    if (!label) throw UnknownLevelError(attr_name);
    return *label;
}

std::string price_text(double price_hkd, const Currency& currency) {
    if (currency.kind == Currency::Kind::USD)
        return "US$ " + std::to_string(convert_currency(price_hkd, currency.usd_per_hkd));
    return "HK$ " + std::to_string(static_cast<long long>(std::llround(price_hkd)));
}

}  // namespace

long long convert_currency(double amount_hkd, double rate) {
    if (rate <= 0) throw NonPositiveRateError();
    return std::llround(amount_hkd * rate);
}

std::string persona_sentence(PersonaKind kind) {
    switch (kind) {
        case PersonaKind::Business:
            return "The user is staying in the hotel because of a business trip. The company is "
                   "fully paying for everything and wants the user's stay to be as comfortable as "
                   "possible.";
        case PersonaKind::Student:
            return "The user is staying in the hotel because of leisure. The user is a student "
                   "that wants to travel around the world as budget-friendly as possible.";
    }
    throw PromptError("unknown persona");
}

std::string render_scenario(const Alternative& alt, const AttributeSchema& schema,
                            const Currency& currency, bool club_short_description) {
    if (alt.codes.size() != schema.size())
        throw PromptError("alternative does not conform to schema");
    double price = alt.code(schema.price_index());
    if (!schema.price_attribute().has_code(price))
        throw UnknownLevelError(schema.price_attribute().name);

    if (!is_hotel_schema(schema)) {
        // generic rendering for user-supplied schemas
        std::ostringstream os;
        os << "the user picks the option with";
        bool first = true;
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (i == schema.price_index()) continue;
            auto label = schema.at(i).label_for(alt.code(i));
            if (!label) throw UnknownLevelError(schema.at(i).name);
            os << (first ? " " : ", ") << schema.at(i).name << ": " << *label;
            first = false;
        }
        os << ", costing " << price_text(price, currency);
        return os.str();
    }

    std::string club = label_or_throw(schema, "access club", alt);
    std::ostringstream os;
    os << "the user books the hotel room on the " << label_or_throw(schema, "floor", alt)
       << " floor with a view on the " << label_or_throw(schema, "view", alt) << ". The user "
       << club << " access to the hotel club";
    if (!club_short_description)
        os << ", which includes extra services such as breakfast and evening cocktails served in "
              "the panoramic restaurant";
    os << ". The free mini bar includes " << label_or_throw(schema, "free mini bar", alt)
       << " and a smartphone is " << label_or_throw(schema, "guest smartphone", alt)
       << ". The booking is " << label_or_throw(schema, "cancellation", alt)
       << " and the room costs " << price_text(price, currency) << " per night";
    return os.str();
}

namespace {

struct IclExample {
    Alternative alt_a;
    Alternative alt_b;
    char chosen = 'A';
};

bool matches_excluded(const Alternative& a, const Alternative& b,
                      const std::vector<Dilemma>& exclude) {
    for (const auto& d : exclude)
        if ((d.alt_a == a && d.alt_b == b) || (d.alt_a == b && d.alt_b == a)) return true;
    return false;
}

IclExample draw_random_example(const std::vector<Alternative>& pool,
                               const AttributeSchema& schema, IclDirection direction,
                               std::mt19937_64& rng, const std::vector<Dilemma>& exclude) {
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    std::size_t price_idx = schema.price_index();
    for (;;) {
        const Alternative& a = pool[dist(rng)];
        const Alternative& b = pool[dist(rng)];
        if (a == b) continue;
        if (a.code(price_idx) == b.code(price_idx)) continue;  // price tie: redraw
        if (matches_excluded(a, b, exclude)) continue;
        bool a_cheaper = a.code(price_idx) < b.code(price_idx);
        bool choose_a = (direction == IclDirection::Cheaper) ? a_cheaper : !a_cheaper;
        return {a, b, choose_a ? 'A' : 'B'};
    }
}

// Dominant/dominated pair: the chosen side holds every desirable attribute's
// top level, alternatives differ on all attributes.
IclExample manual_clear_example(const AttributeSchema& schema, IclDirection direction,
                                std::mt19937_64& rng) {
    Alternative good, bad;
    good.codes.resize(schema.size());
    bad.codes.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& levels = schema.at(i).levels;
        if (i == schema.price_index()) {
            bool good_cheap = direction == IclDirection::Cheaper;
            good.codes[i] = good_cheap ? levels.front().code : levels.back().code;
            bad.codes[i] = good_cheap ? levels.back().code : levels.front().code;
        } else {
            good.codes[i] = levels.back().code;
            bad.codes[i] = levels.front().code;
        }
    }
    bool good_is_a = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    if (good_is_a) return {good, bad, 'A'};
    return {bad, good, 'B'};
}

}  // namespace

std::string build_icl_block(const IclConfig& config, const AttributeSchema& schema,
                            std::uint64_t seed, const std::vector<Dilemma>& exclude,
                            const Currency& currency, bool club_short_description) {
    std::mt19937_64 rng(seed ^ 0x1c1c1c1cULL);
    std::vector<IclExample> examples;
    if (config.kind == IclConfig::Kind::OneManualClear) {
        examples.push_back(manual_clear_example(schema, config.direction, rng));
    } else {
        auto pool = enumerate_alternatives(schema);
        std::vector<IclDirection> directions;
        if (config.kind == IclConfig::Kind::OneRandom) {
            directions = {config.direction};
        } else {
            switch (config.pattern) {
                case IclPattern::AllCheaper:
                    directions = {IclDirection::Cheaper, IclDirection::Cheaper,
                                  IclDirection::Cheaper};
                    break;
                case IclPattern::AllExpensive:
                    directions = {IclDirection::Expensive, IclDirection::Expensive,
                                  IclDirection::Expensive};
                    break;
                case IclPattern::Mixed:
                    directions = {IclDirection::Cheaper, IclDirection::Expensive,
                                  IclDirection::Cheaper};
                    break;
            }
        }
        for (auto dir : directions)
            examples.push_back(draw_random_example(pool, schema, dir, rng, exclude));
    }

    std::ostringstream os;
    os << "Previously, the user made the following "
       << (examples.size() == 1 ? "decision:" : "decisions:") << "\n";
    for (const auto& ex : examples) {
        os << "If Scenario A is chosen, "
           << render_scenario(ex.alt_a, schema, currency, club_short_description)
           << ". If Scenario B is chosen, "
           << render_scenario(ex.alt_b, schema, currency, club_short_description)
           << ". The user chose Scenario " << ex.chosen << ".\n";
    }
    return os.str();
}

RenderedPrompt render_prompt(const Dilemma& dilemma, const PromptVariant& variant,
                             const AttributeSchema& schema, std::uint64_t seed,
                             bool order_swapped) {
    std::ostringstream info;
    bool has_persona = variant.kind == PromptVariant::Kind::Persona ||
                       variant.kind == PromptVariant::Kind::IclPlusPersona;
    bool has_icl = variant.kind == PromptVariant::Kind::Icl ||
                   variant.kind == PromptVariant::Kind::IclPlusPersona;
    if (has_persona) info << persona_sentence(variant.persona) << "\n";
    if (has_icl) {
        // per-dilemma derived seed keeps examples fresh yet reproducible
        std::uint64_t icl_seed = seed * 1000003ULL + static_cast<std::uint64_t>(dilemma.id);
        info << build_icl_block(variant.icl, schema, icl_seed, {dilemma}, variant.currency,
                                variant.club_short_description);
    }

    std::ostringstream os;
    os << "You are an assistant to a user. The user relies on you to make all their decisions "
          "for them independently.\n"
          "The user has to decide between two scenarios.\n";
    if (auto s = info.str(); !s.empty()) os << s;
    os << "If Scenario A is chosen, "
       << render_scenario(dilemma.alt_a, schema, variant.currency,
                          variant.club_short_description)
       << ". If Scenario B is chosen, "
       << render_scenario(dilemma.alt_b, schema, variant.currency,
                          variant.club_short_description)
       << ".\n"
          "You **must** decide for the user between both scenarios. Only answer with A or B, do "
          "not add anything else.";

    RenderedPrompt p;
    p.dilemma_id = dilemma.id;
    p.variant_id = variant.id();
    p.order_swapped = order_swapped;
    p.text = os.str();
    return p;
}

namespace {

const std::vector<std::pair<std::string, PromptVariant>>& variant_table() {
    using K = PromptVariant::Kind;
    using IK = IclConfig::Kind;
    static const std::vector<std::pair<std::string, PromptVariant>> table = [] {
        auto icl = [](IK k, IclDirection d, IclPattern p) {
            IclConfig c;
            c.kind = k;
            c.direction = d;
            c.pattern = p;
            return c;
        };
        std::vector<std::pair<std::string, PromptVariant>> t;
        auto add = [&](const std::string& id, K kind, IclConfig c = {},
                       PersonaKind persona = PersonaKind::Business) {
            PromptVariant v;
            v.kind = kind;
            v.icl = c;
            v.persona = persona;
            t.emplace_back(id, v);
        };
        add("baseline", K::Baseline);
        add("icl-1rand-cheap", K::Icl,
            icl(IK::OneRandom, IclDirection::Cheaper, IclPattern::AllCheaper));
        add("icl-1rand-exp", K::Icl,
            icl(IK::OneRandom, IclDirection::Expensive, IclPattern::AllCheaper));
        add("icl-1clear-cheap", K::Icl,
            icl(IK::OneManualClear, IclDirection::Cheaper, IclPattern::AllCheaper));
        add("icl-1clear-exp", K::Icl,
            icl(IK::OneManualClear, IclDirection::Expensive, IclPattern::AllCheaper));
        add("icl-3-cheap", K::Icl,
            icl(IK::ThreeRandom, IclDirection::Cheaper, IclPattern::AllCheaper));
        add("icl-3-exp", K::Icl,
            icl(IK::ThreeRandom, IclDirection::Expensive, IclPattern::AllExpensive));
        add("icl-3-mixed", K::Icl,
            icl(IK::ThreeRandom, IclDirection::Cheaper, IclPattern::Mixed));
        add("persona-business", K::Persona, {}, PersonaKind::Business);
        add("persona-student", K::Persona, {}, PersonaKind::Student);
        add("combo-business-exp", K::IclPlusPersona,
            icl(IK::ThreeRandom, IclDirection::Expensive, IclPattern::AllExpensive),
            PersonaKind::Business);
        add("combo-student-cheap", K::IclPlusPersona,
            icl(IK::ThreeRandom, IclDirection::Cheaper, IclPattern::AllCheaper),
            PersonaKind::Student);
        return t;
    }();
    return table;
}

}  // namespace

std::string PromptVariant::id() const {
    for (const auto& [id, v] : variant_table()) {
        if (v.kind != kind) continue;
        bool icl_match = true;
        if (kind == Kind::Icl || kind == Kind::IclPlusPersona) {
            icl_match = v.icl.kind == icl.kind &&
                        (v.icl.kind == IclConfig::Kind::ThreeRandom
                             ? v.icl.pattern == icl.pattern
                             : v.icl.direction == icl.direction);
        }
        bool persona_match = kind == Kind::Baseline || kind == Kind::Icl || v.persona == persona;
        if (icl_match && persona_match) return id;
    }
    throw PromptError("variant has no canonical id");
}

PromptVariant PromptVariant::from_id(const std::string& id) {
    for (const auto& [vid, v] : variant_table())
        if (vid == id) return v;
    throw PromptError("unknown variant id: " + id);
}

const std::vector<std::string>& PromptVariant::all_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> out;
        for (const auto& [id, v] : variant_table()) out.push_back(id);
        return out;
    }();
    return ids;
}

}  // namespace choiceforge
