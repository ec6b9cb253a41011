#pragma once

#include "lageb/laguerre.hpp"
#include "lageb/mixing.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>

namespace lageb {

struct EstimatorConfig {
    BasisSpec basis;
    double delta = 0.0;         // ridge shift added to the moment matrix
    double r_star = 1.0;        // smoothness of p and Psi near the query point
    double rate_constant = 1.0; // multiplier in the truncation-level schedule

    void validate() const;
};

/// Sample moment estimates: a_hat(l, k) = mean phi_l(X) phi_k(X),
/// c_hat(k) = mean U_k(X).
struct MomentMatrices {
    Eigen::MatrixXd a_hat;
    Eigen::VectorXd c_hat;
    std::size_t n_obs = 0;
};

struct FittedEstimator {
    Eigen::VectorXd coeffs;
    BasisSpec basis;
    double delta_used = 0.0;
    std::size_t n_obs = 0;

    bool operator==(const FittedEstimator& other) const;
};

/// Rows are accumulated in fixed-size chunks with compensated summation, and
/// chunk partials are combined in chunk order.
inline constexpr std::size_t kAccumulationChunk = 4096;

/// (1/N) G^T G with G(i, l) = phi_l(X_i); exactly symmetric.
Eigen::MatrixXd build_a_hat(std::span<const double> data, const BasisSpec& spec);

/// (1/N) sum_i U_k(X_i) for k < M.
Eigen::VectorXd build_c_hat(std::span<const double> data, const MixingModel& model, int M);

/// (a_hat + delta I)^{-1} c_hat by Cholesky with one step of extended-precision
/// refinement. Throws NumericalError if the residual exceeds 1e-10 ||c_hat||.
Eigen::VectorXd solve_coeffs(const MomentMatrices& mm, double delta);

/// max(1, round(c N^{1/((beta v 1) + 2 r* + 1)})), capped at sqrt(N / 4).
int choose_m(std::size_t n_obs, double r_star, double beta_exponent, double rate_constant);

/// M / sqrt(N).
double delta_of(std::size_t n_obs, int M);

/// Convergence exponent of the pointwise risk, -2 r* / ((beta v 1) + 2 r* + 1).
double theoretical_rate(double r_star, double beta_exponent);

/// Builds the moments from the data (in sorted order, so the result does not
/// depend on the input order) and solves the ridge system.
FittedEstimator fit(std::span<const double> data, const MixingModel& model,
                    const EstimatorConfig& config);

/// Estimator config using the truncation and ridge schedules for N observations.
EstimatorConfig scheduled_config(std::size_t n_obs, const MixingModel& model, double r_star,
                                 double rate_constant);

double predict(const FittedEstimator& fitted, double y);

inline constexpr int kEstimatorSchemaVersion = 1;

nlohmann::ordered_json to_json(const FittedEstimator& fitted);
/// Throws InputError on a malformed document.
FittedEstimator estimator_from_json(const nlohmann::json& doc);

} // namespace lageb
