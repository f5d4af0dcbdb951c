// Model prediction in three modes and their mean-squared-error scores.
//
// One-step-ahead uses measured past values only; free-run feeds the model its
// own past predictions; multiple shooting restarts free-run from measured
// data at fixed window boundaries. Scores average squared errors over
// predicted samples only (initial conditions excluded) so the three modes
// stay comparable. A non-finite value in a recursive mode raises
// DivergenceError at the predictor level and maps to +inf at the score level.

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "narmax/model.hpp"

namespace narmax {

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(std::size_t step)
        : std::runtime_error("simulation diverged at step " + std::to_string(step)),
          step(step) {}
    std::size_t step;
};

struct ShootingConfig {
    std::size_t window = 0; // samples per segment; must be >= model max lag + 1
};

/// One-step-ahead predictions for k in [L, N); entry i is time L + i.
std::vector<double> predictOsa(const PrimitiveSet& pset, const Model& model,
                               const Eigen::VectorXd& theta, const Dataset& data);

/// Free-run simulation from explicit initial conditions. y0 supplies the
/// first L_y samples (the model's max output lag); inputs are measured series
/// in the primitive set's input order, sharing the output's time axis. The
/// result is y0 followed by one prediction per step; with steps < 0 the run
/// continues while every input read stays in range (a model reading no
/// inputs runs for the input length).
std::vector<double> predictFreeRun(const PrimitiveSet& pset, const Model& model,
                                   const Eigen::VectorXd& theta,
                                   const std::vector<double>& y0,
                                   const std::vector<std::vector<double>>& inputs,
                                   std::ptrdiff_t steps = -1);

/// Multiple-shooting predictions aligned to the dataset: a full-length series
/// where each window [s, s+w) starts from measured y and is simulated
/// recursively; non-predicted entries (window initial conditions and the
/// pre-lag prefix) carry the measured output. window = N degenerates to
/// free-run from measured initial conditions; window = L+1 to one-step-ahead.
std::vector<double> predictShooting(const PrimitiveSet& pset, const Model& model,
                                    const Eigen::VectorXd& theta, const Dataset& data,
                                    const ShootingConfig& cfg);

/// Indices of predicted (scored) samples for a shooting run on N samples.
std::vector<std::size_t> shootingPredictedIndices(const Model& model, std::size_t n,
                                                  std::size_t window);

double scoreOsa(const PrimitiveSet& pset, const Model& model,
                const Eigen::VectorXd& theta, const Dataset& data);
double scoreFreeRun(const PrimitiveSet& pset, const Model& model,
                    const Eigen::VectorXd& theta, const Dataset& data);
double scoreShooting(const PrimitiveSet& pset, const Model& model,
                     const Eigen::VectorXd& theta, const Dataset& data,
                     const ShootingConfig& cfg);

/// Mean squared residual of an already-built regressor matrix at theta;
/// equals scoreOsa by the regressor identity.
double meanSquaredResidual(const RegressorMatrix& reg, const Eigen::VectorXd& theta);

} // namespace narmax
