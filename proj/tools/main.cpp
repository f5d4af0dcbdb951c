// Command-line front end: identify (MGGP mono/multi), froe (baseline
// structure selection), simulate (osa / freerun / shooting validation) and
// generate (built-in benchmark systems).
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "narmax/estimate.hpp"
#include "narmax/evolve.hpp"
#include "narmax/froe.hpp"
#include "narmax/simulate.hpp"

#include "csv_io.hpp"
#include "run_config.hpp"

namespace {

using namespace narmax;
using cli::ConfigError;
using cli::EstimatorKind;
using cli::loadRunConfig;
using cli::Objective;
using cli::RunConfig;
using nlohmann::json;

PrimitiveSet buildPset(const RunConfig& rc) {
    std::vector<FunctionDef> extra;
    for (const auto& name : rc.extraFunctions) {
        try {
            extra.push_back(PrimitiveSet::builtin(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("pset.functions: ") + e.what());
        }
    }
    PrimitiveSet pset = makePset(rc.maxDelay, 1 + static_cast<int>(rc.inputColumns.size()), extra);
    std::map<std::string, std::string> mapping;
    mapping["ARG0"] = rc.outputColumn;
    for (std::size_t i = 0; i < rc.inputColumns.size(); ++i)
        mapping["ARG" + std::to_string(i + 1)] = rc.inputColumns[i];
    try {
        return renameArguments(pset, mapping);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("data column names: ") + e.what());
    }
}

Dataset loadDataset(const PrimitiveSet& pset, const RunConfig& rc) {
    const cli::CsvTable table = cli::readCsv(rc.csvPath);
    std::vector<std::vector<double>> columns;
    columns.reserve(pset.variables().size());
    for (const auto& name : pset.variables()) columns.push_back(table.column(name));
    return makeDataset(pset, std::move(columns));
}

Eigen::VectorXd estimateTheta(const PrimitiveSet& pset, const Model& model,
                              const Dataset& data, const RunConfig& rc) {
    if (rc.estimator == EstimatorKind::Els) return els(pset, model, data, rc.els).theta;
    return ls(pset, model, data);
}

std::size_t shootingWindowFor(const Model& model, const RunConfig& rc) {
    const std::size_t lag = static_cast<std::size_t>(model.lag().maxLag());
    if (rc.shootingWindow) return *rc.shootingWindow;
    return std::max<std::size_t>(10 * lag, lag + 1);
}

// Below this fraction of the output power an MSE is indistinguishable from an
// exact fit in double precision (rounding of the score itself dominates);
// snapping such scores to zero lets parsimony decide between perfect models
// instead of rounding noise.
constexpr double kMeasurementFloor = 1e-20;

Evaluator makeEvaluator(const PrimitiveSet& pset, const Dataset& data, const RunConfig& rc) {
    const bool multi = rc.objective == Objective::Multi;
    double power = 0.0;
    for (double v : data.output()) power += v * v;
    power /= std::max<std::size_t>(data.length(), 1);
    const double floor = kMeasurementFloor * std::max(1.0, power);
    return [&pset, &data, rc, multi, floor](const Model& ind) -> Fitness {
        const double inf = std::numeric_limits<double>::infinity();
        Fitness failed{multi ? std::vector<double>{inf, inf} : std::vector<double>{inf},
                       multi ? std::vector<double>{-1.0, -1.0} : std::vector<double>{-1.0}};
        try {
            const RegressorMatrix reg = buildRegressors(pset, ind, data);
            const Eigen::VectorXd theta = rc.estimator == EstimatorKind::Els
                                              ? els(pset, ind, data, rc.els).theta
                                              : lsSolve(reg);
            double primary = 0.0;
            switch (rc.objective) {
            case Objective::Osa:
            case Objective::Multi:
                primary = meanSquaredResidual(reg, theta);
                break;
            case Objective::FreeRun:
                primary = scoreFreeRun(pset, ind, theta, data);
                break;
            case Objective::Shooting: {
                const std::size_t w = shootingWindowFor(ind, rc);
                if (w < static_cast<std::size_t>(ind.lag().maxLag()) + 1) return failed;
                primary = scoreShooting(pset, ind, theta, data, {w});
                break;
            }
            }
            if (primary < floor) primary = 0.0;
            if (multi)
                return {{primary, static_cast<double>(ind.termCount())}, {-1.0, -1.0}};
            return {{primary}, {-1.0}};
        } catch (const SingularMatrixError&) {
            return failed;
        } catch (const DivergenceError&) {
            return failed;
        } catch (const DataError&) {
            return failed; // e.g. an individual whose lag exceeds the series
        }
    };
}

json psetToJson(const PrimitiveSet& pset) {
    json j;
    j["max_delay"] = pset.maxDelay();
    j["variables"] = pset.variables();
    j["functions"] = json::array();
    for (const auto& f : pset.functions())
        j["functions"].push_back({{"name", f.name}, {"arity", f.arity}});
    return j;
}

PrimitiveSet psetFromJson(const json& j) {
    const int maxDelay = j.at("max_delay").get<int>();
    const auto variables = j.at("variables").get<std::vector<std::string>>();
    std::vector<FunctionDef> extra;
    for (const auto& f : j.at("functions")) {
        const std::string name = f.at("name").get<std::string>();
        if (name == "mul") continue; // always present
        FunctionDef def = PrimitiveSet::builtin(name);
        if (def.arity != f.at("arity").get<int>())
            throw ConfigError("function '" + name + "' arity mismatch in model file");
        extra.push_back(std::move(def));
    }
    PrimitiveSet pset = makePset(maxDelay, static_cast<int>(variables.size()), extra);
    std::map<std::string, std::string> mapping;
    for (std::size_t i = 0; i < variables.size(); ++i)
        mapping["ARG" + std::to_string(i)] = variables[i];
    return renameArguments(pset, mapping);
}

void writeModelFile(const std::string& path, const PrimitiveSet& pset, const Model& model) {
    json j;
    j["pset"] = psetToJson(pset);
    j["terms"] = termStrings(pset, model);
    j["theta"] = json::array();
    if (model.theta())
        for (Eigen::Index i = 0; i < model.theta()->size(); ++i)
            j["theta"].push_back((*model.theta())(i));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct LoadedModel {
    PrimitiveSet pset;
    Model model;
};

LoadedModel loadModelFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    try {
        json j = json::parse(in);
        PrimitiveSet pset = psetFromJson(j.at("pset"));
        Model model = createModel(pset, j.at("terms").get<std::vector<std::string>>());
        if (j.contains("theta") && !j.at("theta").empty()) {
            const auto th = j.at("theta").get<std::vector<double>>();
            if (th.size() != model.termCount())
                throw ConfigError("model file theta length does not match terms");
            model.setTheta(Eigen::Map<const Eigen::VectorXd>(
                th.data(), static_cast<Eigen::Index>(th.size())));
        }
        return {std::move(pset), std::move(model)};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("malformed model file '" + path + "': " + e.what());
    }
}

void writeLogCsv(const std::string& path, const EvolutionLog& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    const std::size_t arity = log.empty() ? 1 : log.front().best.size();
    out << "gen,evals";
    for (std::size_t o = 0; o < arity; ++o) {
        const std::string suffix = o == 0 ? "" : std::to_string(o + 1);
        out << ",best" << suffix << ",mean" << suffix;
    }
    out << "\n";
    for (const auto& s : log) {
        out << s.generation << "," << s.evaluations;
        for (std::size_t o = 0; o < arity; ++o)
            out << "," << cli::formatCell(s.best[o]) << "," << cli::formatCell(s.mean[o]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void writeText(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// --- identify ----------------------------------------------------------------

int cmdIdentify(const std::string& configPath, std::optional<std::uint64_t> seed,
                std::optional<int> workers, bool verbose) {
    RunConfig rc = loadRunConfig(configPath);
    if (seed) rc.evolve.seed = *seed;
    if (workers) rc.evolve.workers = *workers;
    if (verbose) rc.evolve.verbose = true;

    const PrimitiveSet pset = buildPset(rc);
    const Dataset data = loadDataset(pset, rc);
    const Evaluator evaluate = makeEvaluator(pset, data, rc);

    const bool multi = rc.objective == Objective::Multi;
    const EvolveResult result = multi ? runMO(pset, rc.evolve, evaluate)
                                      : run(pset, rc.evolve, evaluate);
    if (result.hallOfFame.empty())
        throw std::runtime_error("evolution returned an empty hall of fame (elite = 0?)");

    // representative model: mono keeps hof[0]; multi takes the front member
    // with the best first objective, fewest terms on ties
    std::size_t pick = 0;
    if (multi) {
        for (std::size_t i = 1; i < result.hallOfFame.size(); ++i) {
            const auto& a = result.hallOfFame[i].fitness();
            const auto& b = result.hallOfFame[pick].fitness();
            if (a.values[0] < b.values[0] ||
                (a.values[0] == b.values[0] && a.values[1] < b.values[1]))
                pick = i;
        }
    }
    Model best = result.hallOfFame[pick];
    best.setTheta(estimateTheta(pset, best, data, rc));

    writeModelFile(rc.modelPath, pset, best);
    writeLogCsv(rc.logPath, result.log);

    std::string report;
    report += "identified model (" + std::to_string(best.termCount()) + " terms)\n";
    const auto terms = termStrings(pset, best);
    for (std::size_t i = 0; i < terms.size(); ++i)
        report += "  theta[" + std::to_string(i) + "] = " +
                  cli::formatCell((*best.theta())(static_cast<Eigen::Index>(i))) + "  " +
                  terms[i] + "\n";
    report += "osa mse = " +
              cli::formatCell(scoreOsa(pset, best, *best.theta(), data)) + "\n";
    if (multi) {
        report += "pareto front (" + std::to_string(result.hallOfFame.size()) + " models)\n";
        for (const auto& m : result.hallOfFame) {
            report += "  mse=" + cli::formatCell(m.fitness().values[0]) +
                      " terms=" + cli::formatCell(m.fitness().values[1]) + ":";
            for (const auto& t : termStrings(pset, m)) report += " " + t;
            report += "\n";
        }
    }
    writeText(rc.reportPath, report);
    std::cout << report;
    return 0;
}

// --- froe ----------------------------------------------------------------------

int cmdFroe(const std::string& configPath) {
    const RunConfig rc = loadRunConfig(configPath);
    const PrimitiveSet pset = buildPset(rc);
    const Dataset data = loadDataset(pset, rc);

    std::vector<ExprTree> candidates;
    try {
        candidates = enumerateCandidates(pset, rc.froe);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("froe: ") + e.what());
    }
    if (candidates.empty())
        throw ConfigError("froe: empty candidate set (ny and nu are both 0?)");

    const ErrReport report = froe(pset, data, candidates, rc.froe);
    if (report.selected.empty())
        throw std::runtime_error("froe selected no terms (zero output variance?)");

    std::string text = "froe selection over " + std::to_string(candidates.size()) +
                       " candidates\n";
    text += "  #  term                          ERR           cumulative    theta\n";
    for (std::size_t i = 0; i < report.selected.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-3zu%-30s%-14.6g%-14.8g%s\n", i + 1,
                      report.terms[i].c_str(), report.err[i], report.cumulativeErr[i],
                      cli::formatCell(report.theta(static_cast<Eigen::Index>(i))).c_str());
        text += line;
    }
    writeText(rc.reportPath, text);
    std::cout << text;

    Model selected = createModel(pset, report.terms);
    selected.setTheta(report.theta);
    writeModelFile(rc.modelPath, pset, selected);
    return 0;
}

// --- simulate --------------------------------------------------------------------

int cmdSimulate(const std::string& modelPath, const std::string& dataPath,
                const std::string& mode, std::optional<std::size_t> window,
                const std::string& outPath) {
    LoadedModel lm = loadModelFile(modelPath);
    if (!lm.model.theta())
        throw ConfigError("model file '" + modelPath + "' carries no theta");
    const Eigen::VectorXd& theta = *lm.model.theta();

    const cli::CsvTable table = cli::readCsv(dataPath);
    std::vector<std::vector<double>> columns;
    for (const auto& name : lm.pset.variables()) columns.push_back(table.column(name));
    const Dataset data = makeDataset(lm.pset, std::move(columns));

    const std::size_t n = data.length();
    const std::size_t lag = static_cast<std::size_t>(lm.model.lag().maxLag());
    std::vector<std::size_t> indices;
    std::vector<double> yhat(n, 0.0);

    if (mode == "osa") {
        const auto pred = predictOsa(lm.pset, lm.model, theta, data);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            indices.push_back(lag + i);
            yhat[lag + i] = pred[i];
        }
    } else if (mode == "freerun") {
        const auto pred = predictShooting(lm.pset, lm.model, theta, data, {n});
        indices = shootingPredictedIndices(lm.model, n, n);
        yhat = pred;
    } else if (mode == "shooting") {
        std::size_t w = window ? *window : std::max<std::size_t>(10 * lag, lag + 1);
        if (w < lag + 1)
            throw ConfigError("window must be >= model max lag + 1 = " + std::to_string(lag + 1));
        const auto pred = predictShooting(lm.pset, lm.model, theta, data, {w});
        indices = shootingPredictedIndices(lm.model, n, w);
        yhat = pred;
    } else {
        throw ConfigError("mode must be osa|freerun|shooting");
    }

    std::vector<double> kCol, yCol, predCol;
    double sse = 0.0;
    for (std::size_t k : indices) {
        kCol.push_back(static_cast<double>(k));
        yCol.push_back(data.output()[k]);
        predCol.push_back(yhat[k]);
        const double e = data.output()[k] - yhat[k];
        sse += e * e;
    }
    cli::writeCsv(outPath, {"k", lm.pset.variables()[0], "yhat"}, {kCol, yCol, predCol});

    const double mse = indices.empty() ? 0.0 : sse / static_cast<double>(indices.size());
    std::cout << "MSE " << cli::formatCell(mse) << "\n";
    return 0;
}

// --- generate --------------------------------------------------------------------

int cmdGenerate(const std::string& system, long n, double noise, double ma,
                std::uint64_t seed, const std::string& outPath) {
    if (system != "piroddi")
        throw ConfigError("unknown system '" + system + "' (built-in: piroddi)");
    if (n < 0) throw ConfigError("sample count must be >= 0");

    const std::size_t size = static_cast<std::size_t>(n);
    Rng rng(seed);
    std::vector<double> u(size), e(size, 0.0), y(size, 0.0);
    for (auto& v : u) v = rng.gaussian();
    if (noise > 0.0)
        for (auto& v : e) v = noise * rng.gaussian();

    for (std::size_t k = 2; k < size; ++k)
        y[k] = 0.75 * y[k - 2] + 0.25 * u[k - 1] - 0.2 * y[k - 2] * u[k - 1] +
               ma * e[k - 1] + e[k];

    cli::writeCsv(outPath, {"u", "y"}, {u, y});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NARX/NARMAX system identification by multi-gene genetic programming"};
    app.require_subcommand(1);

    std::string configPath, modelPath, dataPath, outPath, mode = "osa", system = "piroddi";
    std::optional<std::uint64_t> seedOpt;
    std::optional<int> workersOpt;
    std::optional<std::size_t> windowOpt;
    bool verbose = false;
    long sampleCount = 500;
    double noise = 0.0, ma = 0.3;
    std::uint64_t genSeed = 0;

    CLI::App* identify = app.add_subcommand("identify", "evolve a model structure from data");
    identify->add_option("--config", configPath, "run configuration file")->required();
    identify->add_option("--seed", seedOpt, "override [evolve] seed");
    identify->add_option("--workers", workersOpt, "parallel evaluation lanes");
    identify->add_flag("--verbose", verbose, "per-generation progress on stdout");

    CLI::App* froeCmd = app.add_subcommand("froe", "FROE/ERR baseline structure selection");
    froeCmd->add_option("--config", configPath, "run configuration file")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "simulate a stored model over data");
    simulate->add_option("--model", modelPath, "model file from identify/froe")->required();
    simulate->add_option("--data", dataPath, "CSV with the model's variables")->required();
    simulate->add_option("--mode", mode, "osa|freerun|shooting");
    simulate->add_option("--window", windowOpt, "shooting window (default 10x max lag)");
    simulate->add_option("--out", outPath, "prediction CSV path")->required();

    CLI::App* generate = app.add_subcommand("generate", "write a built-in benchmark dataset");
    generate->add_option("--system", system, "built-in system name (piroddi)");
    generate->add_option("--n", sampleCount, "number of samples");
    generate->add_option("--noise", noise, "equation-error standard deviation");
    generate->add_option("--ma", ma, "moving-average coefficient on the noise");
    generate->add_option("--seed", genSeed, "generator seed");
    generate->add_option("--out", outPath, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // command-line problems are configuration errors
    }

    try {
        if (identify->parsed()) return cmdIdentify(configPath, seedOpt, workersOpt, verbose);
        if (froeCmd->parsed()) return cmdFroe(configPath);
        if (simulate->parsed()) return cmdSimulate(modelPath, dataPath, mode, windowOpt, outPath);
        if (generate->parsed()) return cmdGenerate(system, sampleCount, noise, ma, genSeed, outPath);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
