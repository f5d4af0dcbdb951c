// Forward Regression Orthogonal Estimator with the Error Reduction Ratio.
//
// Candidates are distinct polynomial monomials over lagged variables,
// deduplicated up to commutativity of mul. Selection runs classical forward
// orthogonal least squares with modified Gram-Schmidt; ties in ERR break
// toward the lowest candidate index. All candidates share one target vector
// aligned at the global candidate-set max lag.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "narmax/model.hpp"

namespace narmax {

struct FroeConfig {
    int degree = 1;     // max total polynomial degree, >= 1
    int ny = 0;         // max output lag in the candidate set
    int nu = 0;         // max input lag in the candidate set
    int maxTerms = 0;   // selection cap; 0 means unbounded
    double rho = 0.9999; // stop once cumulative ERR reaches this
};

struct ErrReport {
    std::vector<std::size_t> selected;   // candidate indices in selection order
    std::vector<std::string> terms;      // printed form of the selected terms
    std::vector<double> err;             // individual ERR values, in [0, 1]
    std::vector<double> cumulativeErr;   // non-decreasing, <= 1
    Eigen::VectorXd theta;               // back-substituted coefficients
};

/// All distinct monomials of total degree in [1, cfg.degree] over
/// y[k-1..k-ny] and, for every input variable, u[k-1..k-nu].
std::vector<ExprTree> enumerateCandidates(const PrimitiveSet& pset, const FroeConfig& cfg);

/// Forward selection by ERR over the given candidates. Stops at maxTerms,
/// at cumulative ERR >= rho, or when the remaining candidates are numerically
/// zero after orthogonalization (early stop, not an error).
ErrReport froe(const PrimitiveSet& pset, const Dataset& data,
               const std::vector<ExprTree>& candidates, const FroeConfig& cfg);

} // namespace narmax
