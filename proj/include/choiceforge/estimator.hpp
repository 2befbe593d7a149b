#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "choiceforge/agents.hpp"
#include "choiceforge/design.hpp"

namespace choiceforge {

struct EstimatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDatasetError : EstimatorError {
    EmptyDatasetError() : EstimatorError("no usable choice records") {}
};
struct ConstantFeatureError : EstimatorError {
    std::string feature;
    explicit ConstantFeatureError(std::string f)
        : EstimatorError("feature has zero variance: " + f), feature(std::move(f)) {}
};

/// Per-dilemma feature pairs, standardized over the stacked 2N alternative
/// rows (sample sd, denominator n-1).
struct ChoiceDataset {
    Eigen::MatrixXd x_a;  // N x K, standardized
    Eigen::MatrixXd x_b;
    std::vector<bool> chose_b;  // choice indicator per row
    std::vector<std::string> feature_names;
    std::size_t price_index = 0;
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_sd;
    std::size_t excluded_invalid = 0;

    std::size_t n_rows() const { return static_cast<std::size_t>(x_a.rows()); }
    std::size_t n_features() const { return static_cast<std::size_t>(x_a.cols()); }
};

/// Joins records to dilemma codes (honouring order_swapped so features follow
/// the presented A/B), drops Invalid records, standardizes.
ChoiceDataset build_dataset(const std::vector<ChoiceRecord>& records,
                            const std::vector<Dilemma>& dilemmas,
                            const AttributeSchema& schema);

/// Dataset from raw feature pairs; standardize=false keeps the raw scale
/// (used by the raw-vs-standardized WTP cross-check).
ChoiceDataset make_dataset(const Eigen::MatrixXd& x_a, const Eigen::MatrixXd& x_b,
                           const std::vector<bool>& chose_b,
                           std::vector<std::string> feature_names, std::size_t price_index,
                           bool standardize = true);

struct LlGrad {
    double ll = 0.0;
    Eigen::VectorXd grad;  // d ll / d(asc, beta)
};

/// theta = (asc, beta...); U_A = beta.x_A, U_B = asc + beta.x_B. Exact
/// analytic gradient, overflow-safe probabilities.
LlGrad log_likelihood_and_gradient(const Eigen::VectorXd& theta, const ChoiceDataset& data);

struct SeparationInfo {
    std::string feature;    // attribute name, or "asc"
    std::string direction;  // "lower" | "higher"
};

/// First feature whose chosen-minus-other difference is one-signed (ties
/// allowed, at least one strict) across all rows.
std::optional<SeparationInfo> detect_separation(const ChoiceDataset& data);

struct NullFit {
    double asc_null = 0.0;
    double ll_null = 0.0;
    bool degenerate = false;  // all choices identical; asc_null infinite
};

NullFit fit_null(const ChoiceDataset& data);

enum class FitStatus { Ok, NotConverged, SeparationDetected, SingularHessian };

struct MnlFit {
    FitStatus status = FitStatus::Ok;
    double asc = 0.0;
    Eigen::VectorXd beta;  // standardized scale, feature order of the dataset
    std::vector<std::string> feature_names;
    Eigen::VectorXd std_errors;  // leading entry is the ASC; NaN when unavailable
    Eigen::VectorXd z_values;
    Eigen::VectorXd p_values;
    double asc_se = 0.0, asc_z = 0.0, asc_p = 1.0;
    double ll_model = 0.0;
    double ll_null = 0.0;
    double pseudo_r2 = 0.0;
    bool converged = false;
    double grad_norm = 0.0;
    int iterations = 0;
    std::size_t n_obs = 0;
    std::size_t excluded_invalid = 0;
    std::optional<SeparationInfo> separation;

    bool usable() const { return status == FitStatus::Ok && converged; }
    std::string to_json_text() const;
    static MnlFit from_json_text(const std::string& text);
};

struct FitOptions {
    int max_iter = 500;
    double grad_tol = 1e-6;           // infinity norm
    double divergence_bound = 50.0;   // |coef| beyond this flags separation
    double hessian_step = 1e-6;
    std::optional<Eigen::VectorXd> theta0;  // default: zero vector
};

/// BFGS from theta = 0 with backtracking line search; standard errors from
/// the inverse observed information (central finite differences of the
/// analytic gradient).
MnlFit fit_mnl(const ChoiceDataset& data, const FitOptions& opts = {});

}  // namespace choiceforge
