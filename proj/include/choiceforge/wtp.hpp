#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "choiceforge/estimator.hpp"

namespace choiceforge {

struct WtpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PricePositiveError : WtpError {
    PricePositiveError() : WtpError("price coefficient is non-negative; WTP undefined") {}
};
struct UnfitError : WtpError {
    explicit UnfitError(const std::string& why) : WtpError("fit unusable for WTP: " + why) {}
};
struct NonPositiveCpiError : WtpError {
    NonPositiveCpiError() : WtpError("CPI values must be > 0") {}
};

enum class BenchmarkSegment { Overall, Business, Leisure };

std::string segment_name(BenchmarkSegment s);
BenchmarkSegment segment_from_name(const std::string& s);

/// Human WTP values (HKD) per non-price attribute for three traveler
/// segments, plus the CPI pair used for inflation adjustment.
struct BenchmarkTable {
    std::map<std::string, double> overall;
    std::map<std::string, double> business;
    std::map<std::string, double> leisure;
    double cpi_from = 92.8;
    double cpi_to = 109.4;

    const std::map<std::string, double>& segment(BenchmarkSegment s) const;

    /// The embedded hotel benchmark.
    static BenchmarkTable embedded();
    static BenchmarkTable from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct WtpFlags {
    bool positive_price_coefficient = false;
    bool separation = false;
    bool not_converged = false;

    bool any() const { return positive_price_coefficient || separation || not_converged; }
};

struct DeviationReport {
    std::map<std::string, double> per_attribute;  // |model - human|
    double mean_abs = 0.0;
    double median_abs = 0.0;
    bool adjusted = false;
    std::string segment;
};

struct WtpReport {
    std::map<std::string, double> wtp_hkd;  // non-price attributes only
    WtpFlags flags;
    std::optional<DeviationReport> deviations;

    std::string to_json_text() const;
    static WtpReport from_json_text(const std::string& text);
    /// One row per attribute: attribute,wtp_hkd[,abs_deviation].
    std::string to_csv_text() const;
};

/// WTP_k = -(beta_k * sigma_price) / (beta_price * sigma_k) in HKD. A fit
/// with separation, non-convergence, or a non-negative price coefficient
/// yields a flags-only report.
WtpReport compute_wtp(const MnlFit& fit, const ChoiceDataset& data);

/// wtp * cpi_to / cpi_from.
double adjust_inflation(double wtp_hkd, double cpi_from, double cpi_to);

/// Absolute deviations of a model WTP report against one benchmark segment,
/// optionally inflation-adjusting the benchmark first.
DeviationReport deviation_report(const WtpReport& model_wtp, const BenchmarkTable& table,
                                 BenchmarkSegment segment, bool adjust);

}  // namespace choiceforge
