#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "choiceforge/design.hpp"

namespace choiceforge {

struct PromptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownLevelError : PromptError {
    explicit UnknownLevelError(const std::string& attr)
        : PromptError("no display label for level of attribute: " + attr) {}
};
struct NonPositiveRateError : PromptError {
    NonPositiveRateError() : PromptError("currency conversion rate must be > 0") {}
};

enum class IclDirection { Cheaper, Expensive };
enum class IclPattern { AllCheaper, AllExpensive, Mixed };
enum class PersonaKind { Business, Student };

struct IclConfig {
    enum class Kind { OneRandom, OneManualClear, ThreeRandom };
    Kind kind = Kind::OneRandom;
    IclDirection direction = IclDirection::Cheaper;  // OneRandom / OneManualClear
    IclPattern pattern = IclPattern::AllCheaper;     // ThreeRandom

    std::size_t example_count() const { return kind == Kind::ThreeRandom ? 3 : 1; }
};

struct Currency {
    enum class Kind { HKD, USD };
    Kind kind = Kind::HKD;
    double usd_per_hkd = 0.13;

    static Currency hkd() { return {Kind::HKD, 0.0}; }
    static Currency usd(double rate) {
        if (rate <= 0) throw NonPositiveRateError();
        return {Kind::USD, rate};
    }
};

struct PromptVariant {
    enum class Kind { Baseline, Icl, Persona, IclPlusPersona };
    Kind kind = Kind::Baseline;
    IclConfig icl;            // Icl / IclPlusPersona
    PersonaKind persona = PersonaKind::Business;  // Persona / IclPlusPersona
    Currency currency = Currency::hkd();
    bool club_short_description = false;

    /// Canonical id used in configs and reports, e.g. "icl-3-cheap".
    std::string id() const;
    /// Inverse of id(); currency and the club toggle are orthogonal and left
    /// at their defaults.
    static PromptVariant from_id(const std::string& id);
    static const std::vector<std::string>& all_ids();
};

struct RenderedPrompt {
    int dilemma_id = 0;
    std::string variant_id;
    bool order_swapped = false;
    std::string text;
};

/// amount_hkd * rate, rounded to the nearest integer for display.
long long convert_currency(double amount_hkd, double rate);

/// Fills the scenario sentence template for one alternative.
std::string render_scenario(const Alternative& alt, const AttributeSchema& schema,
                            const Currency& currency, bool club_short_description = false);

/// ICL example block: rendered prior decisions ending in "The user chose
/// Scenario X." The exclude list holds dilemmas whose alternative pairs the
/// examples must not duplicate (normally the target dilemma).
std::string build_icl_block(const IclConfig& config, const AttributeSchema& schema,
                            std::uint64_t seed, const std::vector<Dilemma>& exclude,
                            const Currency& currency = Currency::hkd(),
                            bool club_short_description = false);

/// Full prompt: assistant framing, optional user-information block, both
/// scenarios, closing instruction. Pure in (dilemma, variant, schema, seed).
RenderedPrompt render_prompt(const Dilemma& dilemma, const PromptVariant& variant,
                             const AttributeSchema& schema, std::uint64_t seed,
                             bool order_swapped = false);

std::string persona_sentence(PersonaKind kind);

}  // namespace choiceforge
