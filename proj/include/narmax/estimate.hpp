// Parameter estimation: ordinary Least Squares and Extended Least Squares.
//
// LS solves the one-step-ahead regression with a column-pivoted Householder
// QR (never the normal equations); the system is declared singular when a
// pivot ratio falls below 1e-10. ELS augments the regressors with lagged
// residual columns to de-bias the parameters under colored noise; the
// returned coefficients cover the process genes only.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "narmax/model.hpp"

namespace narmax {

struct SingularMatrixError : std::runtime_error {
    SingularMatrixError(Eigen::Index rank, Eigen::Index cols)
        : std::runtime_error("singular regressor matrix: numerical rank " +
                             std::to_string(rank) + " < " + std::to_string(cols) + " columns"),
          rank(rank), cols(cols) {}
    Eigen::Index rank;
    Eigen::Index cols;
};

/// Pivot-ratio threshold below which the normal system counts as singular.
inline constexpr double kSingularityThreshold = 1e-10;

/// Least-squares solve of an already-built regressor matrix.
Eigen::VectorXd lsSolve(const RegressorMatrix& reg);

/// theta minimizing the squared one-step-ahead residual.
Eigen::VectorXd ls(const PrimitiveSet& pset, const Model& model, const Dataset& data);

struct ElsConfig {
    int n_xi = 1;        // max residual lag, >= 1
    int max_iters = 20;  // augmentation passes, >= 1
    double tol = 1e-8;   // L-inf convergence threshold on theta
};

struct ElsResult {
    Eigen::VectorXd theta; // process-term coefficients only
    bool converged = false;
    int iterations = 0;
};

/// Extended least squares: iteratively re-estimates with regressors augmented
/// by lagged residuals xi[k-1..k-n_xi] (zero-padded before they exist).
/// Non-convergence is flagged on the result, not an error.
ElsResult els(const PrimitiveSet& pset, const Model& model, const Dataset& data,
              const ElsConfig& cfg = {});

} // namespace narmax
