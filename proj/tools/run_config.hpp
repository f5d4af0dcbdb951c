// Declarative run configuration: a single text file of [section] key = value
// lines describing the dataset, primitive set, objective, estimator and
// evolution settings of an identification run.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "narmax/estimate.hpp"
#include "narmax/evolve.hpp"
#include "narmax/froe.hpp"

namespace narmax::cli {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Objective { Osa, FreeRun, Shooting, Multi };
enum class EstimatorKind { Ls, Els };

struct RunConfig {
    // [data]
    std::string csvPath;
    std::string outputColumn;
    std::vector<std::string> inputColumns;

    // [pset]
    int maxDelay = 1;
    std::vector<std::string> extraFunctions; // resolved via PrimitiveSet::builtin

    // [objective]
    Objective objective = Objective::Osa;
    std::optional<std::size_t> shootingWindow;

    // [estimator]
    EstimatorKind estimator = EstimatorKind::Ls;
    ElsConfig els;

    // [evolve]
    EvolveConfig evolve;

    // [froe]
    FroeConfig froe;

    // [output]
    std::string modelPath = "model.json";
    std::string logPath = "log.csv";
    std::string reportPath = "report.txt";
};

RunConfig loadRunConfig(const std::string& path);

} // namespace narmax::cli
