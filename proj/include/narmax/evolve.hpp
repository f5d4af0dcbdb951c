// Multi-gene genetic programming engine.
//
// Individuals are multi-gene models. Variation acts on two levels: high-level
// crossover exchanges whole genes between parents (one-point style), while
// low-level crossover exchanges GP subtrees between one gene of each parent.
// Mutation is either an inner subtree mutation or an outer whole-gene
// replacement, chosen with equal probability. The mono-objective loop applies
// tournament selection and elitism; the multi-objective loop follows NSGA-II
// (fast non-dominated sorting plus crowding distance), keeping a configured
// fraction of the combined parent/offspring pool and refilling with fresh
// random individuals.
//
// All random draws happen on the coordinating thread; fitness evaluation may
// fan out to workers, with results merged in individual order, so a run is a
// pure function of (config, seed, evaluate).

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "narmax/model.hpp"

namespace narmax {

struct EvolveConfig {
    int popSize = 100;
    double cxpb = 0.9;       // per-pair recombination probability
    double mtpb = 0.1;       // per-individual mutation probability (non-recombined only)
    int nGen = 50;
    int maxHeight = 3;       // height cap for every gene
    int maxTerms = 5;        // gene-count cap for every individual
    int elite = 1;           // mono-objective hall-of-fame / injection size
    double popPercent = 1.0; // multi-objective survivor fraction of popSize
    int tournamentSize = 2;
    std::uint64_t seed = 0;
    bool verbose = false;
    int workers = 1;         // parallel fitness evaluation lanes
};

/// Per-generation summary; one record per generation plus generation 0.
struct GenerationStats {
    int generation = 0;
    std::size_t evaluations = 0;
    std::vector<double> best; // per objective, in the weighted-best sense
    std::vector<double> mean;
    std::vector<double> minValue;
    std::vector<double> maxValue;
};

using EvolutionLog = std::vector<GenerationStats>;
using Evaluator = std::function<Fitness(const Model&)>;

struct EvolveResult {
    std::vector<Model> hallOfFame; // mono: best-ever, sorted; multi: final first front
    EvolutionLog log;
};

/// popSize individuals with gene counts uniform in [1, maxTerms], each gene a
/// ramped half-and-half random tree of height <= maxHeight.
std::vector<Model> initPopulation(const PrimitiveSet& pset, const EvolveConfig& cfg, Rng& rng);

/// Index of the best of k uniform draws with replacement (weighted scalar
/// fitness; ties keep the first draw). All individuals must be evaluated.
std::size_t tournamentSelect(const std::vector<Model>& population, int k, Rng& rng);

/// Gene-list tail exchange at one cut point per parent. Offspring are
/// truncated to maxTerms from the tail and never left empty; their fitness is
/// cleared.
std::pair<Model, Model> crossoverHighLevel(const PrimitiveSet& pset, const Model& a,
                                           const Model& b, int maxTerms, Rng& rng);

/// Subtree exchange between one uniformly chosen gene of each parent. When a
/// result would exceed maxHeight the exchange is redrawn a few times, after
/// which the parents come back unchanged. Gene counts are preserved.
std::pair<Model, Model> crossoverLowLevel(const PrimitiveSet& pset, const Model& a,
                                          const Model& b, int maxHeight, Rng& rng);

/// Inner (subtree) or outer (whole-gene) mutation with equal probability;
/// gene count preserved, fitness cleared, heights stay within maxHeight.
Model mutate(const PrimitiveSet& pset, const Model& individual, int maxHeight, Rng& rng);

/// Fast non-dominated sort; fronts hold indices in ascending order.
std::vector<std::vector<std::size_t>> nonDominatedSort(const std::vector<Fitness>& fitnesses);

/// Crowding distances aligned with the front's index order; extreme points
/// per objective get +inf.
std::vector<double> crowdingDistances(const std::vector<Fitness>& fitnesses,
                                      const std::vector<std::size_t>& front);

/// Mono-objective evolution: tournament selection, two-level crossover,
/// two mutations, elitism by hall-of-fame injection.
EvolveResult run(const PrimitiveSet& pset, const EvolveConfig& cfg, const Evaluator& evaluate);

/// Multi-objective evolution under the NSGA-II scheme.
EvolveResult runMO(const PrimitiveSet& pset, const EvolveConfig& cfg, const Evaluator& evaluate);

} // namespace narmax
