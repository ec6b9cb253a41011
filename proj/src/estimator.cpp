#include "lageb/estimator.hpp"

#include "lageb/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace lageb {

namespace {

// Neumaier-compensated accumulator over a flat array of running sums.
class CompensatedSums {
public:
    explicit CompensatedSums(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    void add(std::size_t i, double v) {
        const double s = sum_[i];
        const double t = s + v;
        if (std::abs(s) >= std::abs(v)) {
            comp_[i] += (s - t) + v;
        } else {
            comp_[i] += (v - t) + s;
        }
        sum_[i] = t;
    }

    double total(std::size_t i) const { return sum_[i] + comp_[i]; }
    std::size_t size() const { return sum_.size(); }

private:
    std::vector<double> sum_;
    std::vector<double> comp_;
};

void check_data(std::span<const double> data) {
    if (data.empty()) {
        throw InputError("moment estimation requires at least one observation");
    }
    for (double x : data) {
        if (!std::isfinite(x) || x < 0.0) {
            throw InputError("observations must be finite and nonnegative");
        }
    }
}

// Chunked reduction of per-row contributions: row(i, out) writes `width`
// values for observation i; returns the column means.
template <typename RowFn>
std::vector<double> chunked_mean(std::size_t n, std::size_t width, RowFn&& row) {
    CompensatedSums global(width);
    std::vector<double> buf(width);
    for (std::size_t start = 0; start < n; start += kAccumulationChunk) {
        const std::size_t stop = std::min(n, start + kAccumulationChunk);
        CompensatedSums local(width);
        for (std::size_t i = start; i < stop; ++i) {
            row(i, buf);
            for (std::size_t j = 0; j < width; ++j) {
                local.add(j, buf[j]);
            }
        }
        for (std::size_t j = 0; j < width; ++j) {
            global.add(j, local.total(j));
        }
    }
    std::vector<double> mean(width);
    for (std::size_t j = 0; j < width; ++j) {
        mean[j] = global.total(j) / static_cast<double>(n);
    }
    return mean;
}

} // namespace

void EstimatorConfig::validate() const {
    basis.validate();
    if (!(std::isfinite(delta) && delta > 0.0)) {
        throw InputError("ridge shift delta must be positive");
    }
    if (!(std::isfinite(r_star) && r_star > 0.0)) {
        throw InputError("r_star must be positive");
    }
    if (!(std::isfinite(rate_constant) && rate_constant > 0.0)) {
        throw InputError("rate_constant must be positive");
    }
}

bool FittedEstimator::operator==(const FittedEstimator& other) const {
    return basis == other.basis && delta_used == other.delta_used && n_obs == other.n_obs &&
           coeffs.size() == other.coeffs.size() && coeffs == other.coeffs;
}

Eigen::MatrixXd build_a_hat(std::span<const double> data, const BasisSpec& spec) {
    spec.validate();
    check_data(data);
    const auto M = static_cast<std::size_t>(spec.M);
    const std::size_t width = M * (M + 1) / 2;
    std::vector<double> phi(M);
    const std::vector<double> upper = chunked_mean(data.size(), width, [&](std::size_t i, std::span<double> out) {
        basis_values(spec.a, data[i], phi);
        std::size_t idx = 0;
        for (std::size_t l = 0; l < M; ++l) {
            if (!std::isfinite(phi[l])) {
                throw NumericalError("non-finite basis value at x = " + std::to_string(data[i]));
            }
            for (std::size_t k = l; k < M; ++k) {
                out[idx++] = phi[l] * phi[k];
            }
        }
    });
    Eigen::MatrixXd A(spec.M, spec.M);
    std::size_t idx = 0;
    for (std::size_t l = 0; l < M; ++l) {
        for (std::size_t k = l; k < M; ++k) {
            const auto li = static_cast<Eigen::Index>(l);
            const auto ki = static_cast<Eigen::Index>(k);
            A(li, ki) = upper[idx];
            A(ki, li) = upper[idx];
            ++idx;
        }
    }
    return A;
}

Eigen::VectorXd build_c_hat(std::span<const double> data, const MixingModel& model, int M) {
    check_data(data);
    if (M < 1) {
        throw InputError("build_c_hat requires M >= 1");
    }
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const Eigen::MatrixXd U = model.u_matrix(sorted, M);
    const std::vector<double> mean =
        chunked_mean(sorted.size(), static_cast<std::size_t>(M), [&](std::size_t i, std::span<double> out) {
            for (int k = 0; k < M; ++k) {
                const double v = U(static_cast<Eigen::Index>(i), k);
                if (!std::isfinite(v)) {
                    throw NumericalError("non-finite U_k value");
                }
                out[static_cast<std::size_t>(k)] = v;
            }
        });
    return Eigen::Map<const Eigen::VectorXd>(mean.data(), M);
}

Eigen::VectorXd solve_coeffs(const MomentMatrices& mm, double delta) {
    if (!(std::isfinite(delta) && delta > 0.0)) {
        throw InputError("solve_coeffs requires delta > 0");
    }
    const Eigen::Index M = mm.a_hat.rows();
    if (mm.a_hat.cols() != M || mm.c_hat.size() != M) {
        throw InputError("moment matrix and vector sizes disagree");
    }
    Eigen::MatrixXd shifted = mm.a_hat;
    shifted.diagonal().array() += delta;
    const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Cholesky factorization of the ridge-shifted moment matrix failed");
    }
    Eigen::VectorXd theta = llt.solve(mm.c_hat);

    // One refinement step with the residual formed in extended precision.
    using LongVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const LongVec residual_ld =
        mm.c_hat.cast<long double>() - shifted.cast<long double>() * theta.cast<long double>();
    theta += llt.solve(residual_ld.cast<double>());

    const LongVec final_residual =
        mm.c_hat.cast<long double>() - shifted.cast<long double>() * theta.cast<long double>();
    const double residual_norm = static_cast<double>(final_residual.norm());
    if (!theta.allFinite() || residual_norm > 1e-10 * mm.c_hat.norm()) {
        throw NumericalError("ridge solve residual " + std::to_string(residual_norm) +
                             " exceeds 1e-10 * ||c_hat||");
    }
    return theta;
}

int choose_m(std::size_t n_obs, double r_star, double beta_exponent, double rate_constant) {
    if (n_obs < 2) {
        throw InputError("choose_m requires at least 2 observations");
    }
    if (!(r_star > 0.0) || !(beta_exponent >= 0.0) || !(rate_constant > 0.0)) {
        throw InputError("choose_m requires r_star > 0, beta >= 0, rate_constant > 0");
    }
    const double n = static_cast<double>(n_obs);
    const double exponent = 1.0 / (std::max(beta_exponent, 1.0) + 2.0 * r_star + 1.0);
    const double scheduled = std::round(rate_constant * std::pow(n, exponent));
    const double cap = std::floor(std::sqrt(n / 4.0));
    return static_cast<int>(std::max(1.0, std::min(scheduled, cap)));
}

double delta_of(std::size_t n_obs, int M) {
    if (n_obs == 0 || M < 1) {
        throw InputError("delta_of requires N >= 1 and M >= 1");
    }
    return static_cast<double>(M) / std::sqrt(static_cast<double>(n_obs));
}

double theoretical_rate(double r_star, double beta_exponent) {
    return -2.0 * r_star / (std::max(beta_exponent, 1.0) + 2.0 * r_star + 1.0);
}

EstimatorConfig scheduled_config(std::size_t n_obs, const MixingModel& model, double r_star,
                                 double rate_constant) {
    EstimatorConfig cfg;
    cfg.r_star = r_star;
    cfg.rate_constant = rate_constant;
    cfg.basis.a = model.recommended_a();
    cfg.basis.M = n_obs >= 2 ? choose_m(n_obs, r_star, model.beta_exponent(), rate_constant) : 1;
    cfg.delta = delta_of(n_obs, cfg.basis.M);
    return cfg;
}

FittedEstimator fit(std::span<const double> data, const MixingModel& model,
                    const EstimatorConfig& config) {
    config.validate();
    if (config.basis.a != model.recommended_a()) {
        throw InputError("basis parameter a = " + std::to_string(config.basis.a) +
                         " does not match the " + std::string(model.name()) +
                         " model's a = " + std::to_string(model.recommended_a()));
    }
    check_data(data);
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());

    MomentMatrices mm;
    mm.a_hat = build_a_hat(sorted, config.basis);
    mm.c_hat = build_c_hat(sorted, model, config.basis.M);
    mm.n_obs = sorted.size();

    FittedEstimator out;
    out.coeffs = solve_coeffs(mm, config.delta);
    out.basis = config.basis;
    out.delta_used = config.delta;
    out.n_obs = mm.n_obs;
    return out;
}

double predict(const FittedEstimator& fitted, double y) {
    return eval_series(std::span<const double>(fitted.coeffs.data(),
                                               static_cast<std::size_t>(fitted.coeffs.size())),
                       fitted.basis, y);
}

nlohmann::ordered_json to_json(const FittedEstimator& fitted) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kEstimatorSchemaVersion;
    doc["a"] = fitted.basis.a;
    doc["M"] = fitted.basis.M;
    doc["delta"] = fitted.delta_used;
    doc["n_obs"] = fitted.n_obs;
    doc["coeffs"] = std::vector<double>(fitted.coeffs.data(),
                                        fitted.coeffs.data() + fitted.coeffs.size());
    return doc;
}

FittedEstimator estimator_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) {
            throw InputError("estimator document must be a JSON object");
        }
        for (const auto& [key, value] : doc.items()) {
            static const std::vector<std::string> known = {"schema_version", "a",      "M",
                                                           "delta",          "n_obs", "coeffs"};
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw InputError("unknown estimator field '" + key + "'");
            }
        }
        if (doc.at("schema_version").get<int>() != kEstimatorSchemaVersion) {
            throw InputError("unsupported estimator schema_version");
        }
        FittedEstimator out;
        out.basis.a = doc.at("a").get<double>();
        out.basis.M = doc.at("M").get<int>();
        out.basis.validate();
        out.delta_used = doc.at("delta").get<double>();
        out.n_obs = doc.at("n_obs").get<std::size_t>();
        const auto coeffs = doc.at("coeffs").get<std::vector<double>>();
        if (coeffs.size() != static_cast<std::size_t>(out.basis.M)) {
            throw InputError("estimator coeffs length does not equal M");
        }
        out.coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), out.basis.M);
        if (!out.coeffs.allFinite() || !(out.delta_used > 0.0)) {
            throw InputError("estimator has non-finite coefficients or nonpositive delta");
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed estimator document: ") + e.what());
    }
}

} // namespace lageb
