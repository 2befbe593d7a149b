#include "choiceforge/estimator.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include <json.hpp>

namespace choiceforge {

using nlohmann::json;

ChoiceDataset make_dataset(const Eigen::MatrixXd& x_a, const Eigen::MatrixXd& x_b,
                           const std::vector<bool>& chose_b,
                           std::vector<std::string> feature_names, std::size_t price_index,
                           bool standardize) {
    const auto n = x_a.rows();
    const auto k = x_a.cols();
    if (n == 0) throw EmptyDatasetError();
    if (x_b.rows() != n || x_b.cols() != k || static_cast<Eigen::Index>(chose_b.size()) != n)
        throw EstimatorError("inconsistent dataset dimensions");

    ChoiceDataset d;
    d.chose_b = chose_b;
    d.feature_names = std::move(feature_names);
    d.price_index = price_index;
    d.feature_mean = Eigen::VectorXd::Zero(k);
    d.feature_sd = Eigen::VectorXd::Ones(k);

    if (standardize) {
        const double rows = 2.0 * static_cast<double>(n);
        d.feature_mean = (x_a.colwise().sum() + x_b.colwise().sum()).transpose() / rows;
        for (Eigen::Index j = 0; j < k; ++j) {
            double ss = (x_a.col(j).array() - d.feature_mean(j)).square().sum() +
                        (x_b.col(j).array() - d.feature_mean(j)).square().sum();
            double var = ss / (rows - 1.0);
            if (var <= 0.0) throw ConstantFeatureError(d.feature_names[j]);
            d.feature_sd(j) = std::sqrt(var);
        }
        d.x_a = (x_a.rowwise() - d.feature_mean.transpose()).array().rowwise() /
                d.feature_sd.transpose().array();
        d.x_b = (x_b.rowwise() - d.feature_mean.transpose()).array().rowwise() /
                d.feature_sd.transpose().array();
    } else {
        d.x_a = x_a;
        d.x_b = x_b;
    }
    return d;
}

ChoiceDataset build_dataset(const std::vector<ChoiceRecord>& records,
                            const std::vector<Dilemma>& dilemmas,
                            const AttributeSchema& schema) {
    std::unordered_map<int, const Dilemma*> by_id;
    for (const auto& d : dilemmas) by_id[d.id] = &d;

    std::size_t excluded = 0;
    std::vector<const ChoiceRecord*> kept;
    for (const auto& r : records) {
        if (r.choice == Choice::Invalid) {
            ++excluded;
            continue;
        }
        if (!by_id.count(r.dilemma_id))
            throw EstimatorError("record references unknown dilemma id " +
                                 std::to_string(r.dilemma_id));
        kept.push_back(&r);
    }
    if (kept.empty()) throw EmptyDatasetError();

    const auto k = static_cast<Eigen::Index>(schema.size());
    Eigen::MatrixXd x_a(kept.size(), k), x_b(kept.size(), k);
    std::vector<bool> chose_b(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& r = *kept[i];
        const Dilemma& d = *by_id[r.dilemma_id];
        // features follow the presented A/B
        const Alternative& pres_a = r.order_swapped ? d.alt_b : d.alt_a;
        const Alternative& pres_b = r.order_swapped ? d.alt_a : d.alt_b;
        for (Eigen::Index j = 0; j < k; ++j) {
            x_a(i, j) = pres_a.code(j);
            x_b(i, j) = pres_b.code(j);
        }
        chose_b[i] = r.choice == Choice::B;
    }

    std::vector<std::string> names;
    for (const auto& a : schema.attributes()) names.push_back(a.name);
    auto out = make_dataset(x_a, x_b, chose_b, std::move(names), schema.price_index());
    out.excluded_invalid = excluded;
    return out;
}

LlGrad log_likelihood_and_gradient(const Eigen::VectorXd& theta, const ChoiceDataset& data) {
    const auto k = static_cast<Eigen::Index>(data.n_features());
    if (theta.size() != k + 1) throw EstimatorError("theta dimension mismatch");
    const double asc = theta(0);
    const Eigen::VectorXd beta = theta.tail(k);

    LlGrad out;
    out.grad = Eigen::VectorXd::Zero(k + 1);
    const Eigen::MatrixXd diff = data.x_b - data.x_a;
    const Eigen::VectorXd delta = (diff * beta).array() + asc;  // U_B - U_A per row

    // overflow-safe log(1+e^x)
    const auto softplus = [](double x) {
        return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    };
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
        const double d = delta(i);
        // log P(B) = -log(1+e^{-d}), log P(A) = -log(1+e^{d})
        out.ll += data.chose_b[i] ? -softplus(-d) : -softplus(d);
        const double p_b = 1.0 / (1.0 + std::exp(-d));
        const double resid = (data.chose_b[i] ? 1.0 : 0.0) - p_b;
        out.grad(0) += resid;
        out.grad.tail(k) += resid * diff.row(i).transpose();
    }
    return out;
}

std::optional<SeparationInfo> detect_separation(const ChoiceDataset& data) {
    // a unanimous choice is perfectly predicted by the position constant alone
    bool any_a = false, any_b = false;
    for (bool b : data.chose_b) (b ? any_b : any_a) = true;
    if (!any_a || !any_b)
        return SeparationInfo{"asc", any_b ? "higher" : "lower"};

    for (std::size_t j = 0; j < data.n_features(); ++j) {
        bool all_le = true, all_ge = true, any_strict = false;
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
            double chosen = data.chose_b[i] ? data.x_b(i, j) : data.x_a(i, j);
            double other = data.chose_b[i] ? data.x_a(i, j) : data.x_b(i, j);
            double diff = chosen - other;
            if (diff > 0) all_le = false;
            if (diff < 0) all_ge = false;
            if (diff != 0) any_strict = true;
            if (!all_le && !all_ge) break;
        }
        if (any_strict && all_le) return SeparationInfo{data.feature_names[j], "lower"};
        if (any_strict && all_ge) return SeparationInfo{data.feature_names[j], "higher"};
    }
    return std::nullopt;
}

NullFit fit_null(const ChoiceDataset& data) {
    const double n = static_cast<double>(data.n_rows());
    double n_b = 0;
    for (bool b : data.chose_b) n_b += b ? 1.0 : 0.0;
    const double n_a = n - n_b;
    NullFit f;
    if (n_a == 0 || n_b == 0) {
        f.degenerate = true;
        f.ll_null = 0.0;
        f.asc_null = (n_b > 0) ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
        return f;
    }
    f.asc_null = std::log(n_b / n_a);
    f.ll_null = n_b * std::log(n_b / n) + n_a * std::log(n_a / n);
    return f;
}

namespace {

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

void fill_null_and_r2(MnlFit& fit, const ChoiceDataset& data) {
    NullFit nf = fit_null(data);
    fit.ll_null = nf.ll_null;
    if (nf.degenerate || nf.ll_null == 0.0) {
        fit.pseudo_r2 = 0.0;
    } else {
        fit.pseudo_r2 = 1.0 - fit.ll_model / fit.ll_null;
    }
}

}  // namespace

MnlFit fit_mnl(const ChoiceDataset& data, const FitOptions& opts) {
    if (data.n_rows() == 0) throw EmptyDatasetError();
    const auto k = static_cast<Eigen::Index>(data.n_features());
    const Eigen::Index dim = k + 1;

    MnlFit fit;
    fit.feature_names = data.feature_names;
    fit.n_obs = data.n_rows();
    fit.excluded_invalid = data.excluded_invalid;
    fit.beta = Eigen::VectorXd::Zero(k);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.std_errors = Eigen::VectorXd::Constant(dim, nan);
    fit.z_values = Eigen::VectorXd::Constant(dim, nan);
    fit.p_values = Eigen::VectorXd::Constant(dim, nan);

    if (auto sep = detect_separation(data)) {
        fit.status = FitStatus::SeparationDetected;
        fit.separation = sep;
        return fit;
    }

    Eigen::VectorXd theta = opts.theta0.value_or(Eigen::VectorXd::Zero(dim));
    if (theta.size() != dim) throw EstimatorError("theta0 dimension mismatch");
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(dim, dim);
    LlGrad cur = log_likelihood_and_gradient(theta, data);
    bool first_update = true;

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        if (cur.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            fit.converged = true;
            break;
        }
        Eigen::VectorXd direction = h_inv * cur.grad;  // ascent direction
        double slope = cur.grad.dot(direction);
        if (slope <= 0) {  // reset on loss of curvature
            h_inv.setIdentity();
            direction = cur.grad;
            slope = cur.grad.squaredNorm();
        }
        // cap the trial step so one iteration cannot overshoot into the
        // saturated region where curvature information vanishes
        const double kStepCap = 10.0;
        double dir_norm = direction.lpNorm<Eigen::Infinity>();
        double alpha = dir_norm > kStepCap ? kStepCap / dir_norm : 1.0;
        LlGrad next;
        Eigen::VectorXd theta_next;
        bool stepped = false;
        // near the optimum the Armijo gain drops below the rounding floor of
        // ll, so also accept steps that shrink the gradient without
        // measurably worsening ll
        const double ll_floor = cur.ll - 1e-10 * (1.0 + std::abs(cur.ll));
        const double g_norm = cur.grad.lpNorm<Eigen::Infinity>();
        while (alpha > 1e-14) {
            theta_next = theta + alpha * direction;
            next = log_likelihood_and_gradient(theta_next, data);
            if (next.ll >= cur.ll + 1e-4 * alpha * slope ||
                (next.ll >= ll_floor && next.grad.lpNorm<Eigen::Infinity>() < g_norm)) {
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!stepped) break;

        Eigen::VectorXd s = theta_next - theta;
        Eigen::VectorXd y = next.grad - cur.grad;  // note: gradient of ll, y.s < 0 for concave ll
        double sy = s.dot(-y);                     // curvature of -ll
        if (sy > 1e-12) {
            // BFGS update of the inverse Hessian of -ll
            Eigen::VectorXd yneg = -y;
            if (first_update) {
                // Barzilai-Borwein initial scaling
                h_inv *= sy / yneg.squaredNorm();
                first_update = false;
            }
            Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
            Eigen::MatrixXd left = eye - (s * yneg.transpose()) / sy;
            h_inv = left * h_inv * left.transpose() + (s * s.transpose()) / sy;
        }
        theta = theta_next;
        cur = next;
    }

    fit.iterations = iter;
    fit.grad_norm = cur.grad.lpNorm<Eigen::Infinity>();
    fit.asc = theta(0);
    fit.beta = theta.tail(k);
    fit.ll_model = cur.ll;

    // a final iterate beyond the divergence bound means the likelihood keeps
    // improving toward an infinite coefficient: quasi-separated data
    Eigen::Index worst;
    if (theta.cwiseAbs().maxCoeff(&worst) > opts.divergence_bound) {
        fit.status = FitStatus::SeparationDetected;
        fit.separation = SeparationInfo{
            worst == 0 ? "asc" : data.feature_names[static_cast<std::size_t>(worst) - 1],
            theta(worst) > 0 ? "higher" : "lower"};
        fit.converged = false;
        return fit;
    }
    if (fit.grad_norm <= opts.grad_tol) fit.converged = true;
    fill_null_and_r2(fit, data);
    if (!fit.converged) {
        fit.status = FitStatus::NotConverged;
        return fit;
    }

    // observed information via central differences of the analytic gradient
    const double h = opts.hessian_step;
    Eigen::MatrixXd hessian(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(i) += h;
        tm(i) -= h;
        hessian.col(i) =
            (log_likelihood_and_gradient(tp, data).grad - log_likelihood_and_gradient(tm, data).grad) /
            (2.0 * h);
    }
    hessian = 0.5 * (hessian + hessian.transpose());
    Eigen::MatrixXd info = -hessian;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) {
        fit.status = FitStatus::SingularHessian;
        return fit;
    }
    Eigen::MatrixXd cov = lu.inverse();
    for (Eigen::Index i = 0; i < dim; ++i) {
        double v = cov(i, i);
        fit.std_errors(i) = v > 0 ? std::sqrt(v) : nan;
        fit.z_values(i) = theta(i) / fit.std_errors(i);
        fit.p_values(i) = two_sided_p(fit.z_values(i));
    }
    fit.asc_se = fit.std_errors(0);
    fit.asc_z = fit.z_values(0);
    fit.asc_p = fit.p_values(0);
    return fit;
}

namespace {

const char* status_name(FitStatus s) {
    switch (s) {
        case FitStatus::Ok: return "ok";
        case FitStatus::NotConverged: return "not_converged";
        case FitStatus::SeparationDetected: return "separation";
        case FitStatus::SingularHessian: return "singular_hessian";
    }
    return "unknown";
}

FitStatus status_from_name(const std::string& s) {
    if (s == "ok") return FitStatus::Ok;
    if (s == "not_converged") return FitStatus::NotConverged;
    if (s == "separation") return FitStatus::SeparationDetected;
    if (s == "singular_hessian") return FitStatus::SingularHessian;
    throw EstimatorError("unknown fit status: " + s);
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double from_finite_or_null(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

}  // namespace

std::string MnlFit::to_json_text() const {
    json j;
    j["status"] = status_name(status);
    j["converged"] = converged;
    j["n_obs"] = n_obs;
    j["excluded_invalid"] = excluded_invalid;
    j["iterations"] = iterations;
    j["grad_norm"] = grad_norm;
    j["asc"] = {{"coef", asc},
                {"se", finite_or_null(asc_se)},
                {"z", finite_or_null(asc_z)},
                {"p", finite_or_null(asc_p)}};
    j["coefficients"] = json::object();
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        j["coefficients"][feature_names[i]] = {
            {"coef", beta(static_cast<Eigen::Index>(i))},
            {"se", finite_or_null(std_errors(static_cast<Eigen::Index>(i) + 1))},
            {"z", finite_or_null(z_values(static_cast<Eigen::Index>(i) + 1))},
            {"p", finite_or_null(p_values(static_cast<Eigen::Index>(i) + 1))}};
    }
    j["feature_order"] = feature_names;
    j["ll_model"] = ll_model;
    j["ll_null"] = ll_null;
    j["pseudo_r2"] = pseudo_r2;
    if (separation)
        j["separation"] = {{"feature", separation->feature}, {"direction", separation->direction}};
    else
        j["separation"] = nullptr;
    return j.dump(2);
}

MnlFit MnlFit::from_json_text(const std::string& text) {
    json j = json::parse(text);
    MnlFit f;
    f.status = status_from_name(j.at("status").get<std::string>());
    f.converged = j.at("converged").get<bool>();
    f.n_obs = j.at("n_obs").get<std::size_t>();
    f.excluded_invalid = j.at("excluded_invalid").get<std::size_t>();
    f.iterations = j.at("iterations").get<int>();
    f.grad_norm = j.at("grad_norm").get<double>();
    f.feature_names = j.at("feature_order").get<std::vector<std::string>>();
    const auto k = static_cast<Eigen::Index>(f.feature_names.size());
    f.beta.resize(k);
    f.std_errors.resize(k + 1);
    f.z_values.resize(k + 1);
    f.p_values.resize(k + 1);
    f.asc = j.at("asc").at("coef").get<double>();
    f.asc_se = from_finite_or_null(j.at("asc").at("se"));
    f.asc_z = from_finite_or_null(j.at("asc").at("z"));
    f.asc_p = from_finite_or_null(j.at("asc").at("p"));
    f.std_errors(0) = f.asc_se;
    f.z_values(0) = f.asc_z;
    f.p_values(0) = f.asc_p;
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& jc = j.at("coefficients").at(f.feature_names[static_cast<std::size_t>(i)]);
        f.beta(i) = jc.at("coef").get<double>();
        f.std_errors(i + 1) = from_finite_or_null(jc.at("se"));
        f.z_values(i + 1) = from_finite_or_null(jc.at("z"));
        f.p_values(i + 1) = from_finite_or_null(jc.at("p"));
    }
    f.ll_model = j.at("ll_model").get<double>();
    f.ll_null = j.at("ll_null").get<double>();
    f.pseudo_r2 = j.at("pseudo_r2").get<double>();
    if (!j.at("separation").is_null())
        f.separation = SeparationInfo{j["separation"].at("feature").get<std::string>(),
                                      j["separation"].at("direction").get<std::string>()};
    return f;
}

}  // namespace choiceforge
