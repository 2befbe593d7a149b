#include "choiceforge/wtp.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace choiceforge {

using nlohmann::json;

std::string segment_name(BenchmarkSegment s) {
    switch (s) {
        case BenchmarkSegment::Overall: return "overall";
        case BenchmarkSegment::Business: return "business";
        case BenchmarkSegment::Leisure: return "leisure";
    }
    return "overall";
}

BenchmarkSegment segment_from_name(const std::string& s) {
    if (s == "overall") return BenchmarkSegment::Overall;
    if (s == "business") return BenchmarkSegment::Business;
    if (s == "leisure") return BenchmarkSegment::Leisure;
    throw WtpError("unknown benchmark segment: " + s);
}

const std::map<std::string, double>& BenchmarkTable::segment(BenchmarkSegment s) const {
    switch (s) {
        case BenchmarkSegment::Business: return business;
        case BenchmarkSegment::Leisure: return leisure;
        case BenchmarkSegment::Overall: break;
    }
    return overall;
}

BenchmarkTable BenchmarkTable::embedded() {
    BenchmarkTable t;
    t.overall = {{"view", 771},          {"floor", 22},           {"access club", 437},
                 {"free mini bar", 226}, {"guest smartphone", 164}, {"cancellation", 122}};
    t.business = {{"view", 906},          {"floor", 26},           {"access club", 513},
                  {"free mini bar", 266}, {"guest smartphone", 192}, {"cancellation", 144}};
    t.leisure = {{"view", 726},          {"floor", 20},           {"access club", 411},
                 {"free mini bar", 213}, {"guest smartphone", 154}, {"cancellation", 115}};
    t.cpi_from = 92.8;
    t.cpi_to = 109.4;
    return t;
}

BenchmarkTable BenchmarkTable::from_json_text(const std::string& text) {
    json j = json::parse(text);
    BenchmarkTable t;
    t.overall = j.at("overall").get<std::map<std::string, double>>();
    t.business = j.at("business").get<std::map<std::string, double>>();
    t.leisure = j.at("leisure").get<std::map<std::string, double>>();
    t.cpi_from = j.at("cpi_from").get<double>();
    t.cpi_to = j.at("cpi_to").get<double>();
    if (t.cpi_from <= 0 || t.cpi_to <= 0) throw NonPositiveCpiError();
    return t;
}

std::string BenchmarkTable::to_json_text() const {
    json j{{"overall", overall},
           {"business", business},
           {"leisure", leisure},
           {"cpi_from", cpi_from},
           {"cpi_to", cpi_to}};
    return j.dump(2);
}

WtpReport compute_wtp(const MnlFit& fit, const ChoiceDataset& data) {
    WtpReport report;
    report.flags.separation = fit.status == FitStatus::SeparationDetected;
    report.flags.not_converged =
        fit.status == FitStatus::NotConverged || (!fit.converged && !report.flags.separation);
    if (report.flags.separation || report.flags.not_converged) return report;

    const auto price = static_cast<Eigen::Index>(data.price_index);
    const double beta_price = fit.beta(price);
    if (beta_price >= 0) {
        report.flags.positive_price_coefficient = true;
        return report;
    }
    const double sigma_price = data.feature_sd(price);
    for (std::size_t k = 0; k < data.n_features(); ++k) {
        if (k == data.price_index) continue;
        const auto ki = static_cast<Eigen::Index>(k);
        report.wtp_hkd[data.feature_names[k]] =
            -(fit.beta(ki) * sigma_price) / (beta_price * data.feature_sd(ki));
    }
    return report;
}

double adjust_inflation(double wtp_hkd, double cpi_from, double cpi_to) {
    if (cpi_from <= 0 || cpi_to <= 0) throw NonPositiveCpiError();
    return wtp_hkd * cpi_to / cpi_from;
}

DeviationReport deviation_report(const WtpReport& model_wtp, const BenchmarkTable& table,
                                 BenchmarkSegment segment, bool adjust) {
    if (model_wtp.flags.any()) throw UnfitError("report carries a disqualifying flag");
    DeviationReport dev;
    dev.adjusted = adjust;
    dev.segment = segment_name(segment);
    std::vector<double> abs_devs;
    for (const auto& [attr, human] : table.segment(segment)) {
        auto it = model_wtp.wtp_hkd.find(attr);
        if (it == model_wtp.wtp_hkd.end())
            throw WtpError("model WTP missing benchmark attribute: " + attr);
        double target = adjust ? adjust_inflation(human, table.cpi_from, table.cpi_to) : human;
        double d = std::abs(it->second - target);
        dev.per_attribute[attr] = d;
        abs_devs.push_back(d);
    }
    if (abs_devs.empty()) throw WtpError("benchmark segment is empty");
    double sum = 0;
    for (double d : abs_devs) sum += d;
    dev.mean_abs = sum / static_cast<double>(abs_devs.size());
    std::sort(abs_devs.begin(), abs_devs.end());
    std::size_t n = abs_devs.size();
    dev.median_abs =
        n % 2 == 1 ? abs_devs[n / 2] : 0.5 * (abs_devs[n / 2 - 1] + abs_devs[n / 2]);
    return dev;
}

std::string WtpReport::to_json_text() const {
    json j;
    j["wtp_hkd"] = wtp_hkd;
    j["flags"] = {{"positive_price_coefficient", flags.positive_price_coefficient},
                  {"separation", flags.separation},
                  {"not_converged", flags.not_converged}};
    if (deviations) {
        j["deviations"] = {{"per_attribute", deviations->per_attribute},
                           {"mean_abs", deviations->mean_abs},
                           {"median_abs", deviations->median_abs},
                           {"adjusted", deviations->adjusted},
                           {"segment", deviations->segment}};
    } else {
        j["deviations"] = nullptr;
    }
    return j.dump(2);
}

WtpReport WtpReport::from_json_text(const std::string& text) {
    json j = json::parse(text);
    WtpReport r;
    r.wtp_hkd = j.at("wtp_hkd").get<std::map<std::string, double>>();
    r.flags.positive_price_coefficient = j.at("flags").at("positive_price_coefficient").get<bool>();
    r.flags.separation = j.at("flags").at("separation").get<bool>();
    r.flags.not_converged = j.at("flags").at("not_converged").get<bool>();
    if (!j.at("deviations").is_null()) {
        DeviationReport d;
        d.per_attribute = j["deviations"].at("per_attribute").get<std::map<std::string, double>>();
        d.mean_abs = j["deviations"].at("mean_abs").get<double>();
        d.median_abs = j["deviations"].at("median_abs").get<double>();
        d.adjusted = j["deviations"].at("adjusted").get<bool>();
        d.segment = j["deviations"].at("segment").get<std::string>();
        r.deviations = std::move(d);
    }
    return r;
}

std::string WtpReport::to_csv_text() const {
    std::ostringstream os;
    bool with_dev = deviations.has_value();
    os << "attribute,wtp_hkd" << (with_dev ? ",abs_deviation" : "") << "\n";
    for (const auto& [attr, v] : wtp_hkd) {
        os << attr << ',' << v;
        if (with_dev) {
            os << ',';
            auto it = deviations->per_attribute.find(attr);
            if (it != deviations->per_attribute.end()) os << it->second;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace choiceforge
