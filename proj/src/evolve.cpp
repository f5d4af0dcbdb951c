#include "narmax/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <thread>

namespace narmax {

namespace {

constexpr int kLowLevelRetries = 3;

void validate(const EvolveConfig& cfg) {
    if (cfg.popSize < 1) throw std::invalid_argument("popSize must be >= 1");
    if (cfg.cxpb < 0.0 || cfg.cxpb > 1.0) throw std::invalid_argument("CXPB must be in [0, 1]");
    if (cfg.mtpb < 0.0 || cfg.mtpb > 1.0) throw std::invalid_argument("MTPB must be in [0, 1]");
    if (cfg.nGen < 0) throw std::invalid_argument("n_gen must be >= 0");
    if (cfg.maxHeight < 0) throw std::invalid_argument("maxHeight must be >= 0");
    if (cfg.maxTerms < 1) throw std::invalid_argument("maxTerms must be >= 1");
    if (cfg.elite < 0 || cfg.elite > cfg.popSize)
        throw std::invalid_argument("elite must be in [0, popSize]");
    if (!(cfg.popPercent > 0.0 && cfg.popPercent <= 1.0))
        throw std::invalid_argument("popPercent must be in (0, 1]");
    if (cfg.tournamentSize < 1) throw std::invalid_argument("tournament size must be >= 1");
    if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
}

Model randomIndividual(const PrimitiveSet& pset, const EvolveConfig& cfg, Rng& rng) {
    const int terms = rng.uniformInt(1, cfg.maxTerms);
    std::vector<ExprTree> genes;
    genes.reserve(static_cast<std::size_t>(terms));
    for (int g = 0; g < terms; ++g) genes.push_back(randomTree(pset, cfg.maxHeight, rng));
    return Model(pset, std::move(genes));
}

/// Evaluates every individual without a valid fitness; returns the count.
/// Results are merged in individual order, so worker count never changes the
/// outcome.
std::size_t evaluatePending(std::vector<Model>& pop, const Evaluator& evaluate, int workers) {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (!pop[i].fitness().valid()) pending.push_back(i);
    if (pending.empty()) return 0;

    if (workers <= 1 || pending.size() < 2) {
        for (std::size_t i : pending) pop[i].setFitness(evaluate(pop[i]));
        return pending.size();
    }

    std::vector<Fitness> results(pending.size());
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::size_t lanes = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                    pending.size());
    for (std::size_t t = 0; t < lanes; ++t) {
        threads.emplace_back([&, t] {
            try {
                for (std::size_t j = t; j < pending.size(); j += lanes)
                    results[j] = evaluate(pop[pending[j]]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (std::size_t j = 0; j < pending.size(); ++j)
        pop[pending[j]].setFitness(std::move(results[j]));
    return pending.size();
}

void checkObjectiveArity(const std::vector<Model>& pop, std::size_t expected) {
    for (const auto& ind : pop) {
        const Fitness& f = ind.fitness();
        if (!f.valid()) throw std::invalid_argument("unevaluated individual encountered");
        if (f.values.size() != expected || f.weights.size() != expected)
            throw std::invalid_argument("objective arity mismatch");
    }
}

GenerationStats makeStats(int gen, std::size_t evals, const std::vector<Model>& pop) {
    GenerationStats s;
    s.generation = gen;
    s.evaluations = evals;
    const std::size_t arity = pop.front().fitness().values.size();
    s.best.assign(arity, 0.0);
    s.mean.assign(arity, 0.0);
    s.minValue.assign(arity, std::numeric_limits<double>::infinity());
    s.maxValue.assign(arity, -std::numeric_limits<double>::infinity());
    std::vector<double> bestWeighted(arity, -std::numeric_limits<double>::infinity());
    for (const auto& ind : pop) {
        const Fitness& f = ind.fitness();
        for (std::size_t o = 0; o < arity; ++o) {
            const double v = f.values[o];
            s.mean[o] += v;
            if (v < s.minValue[o]) s.minValue[o] = v;
            if (v > s.maxValue[o]) s.maxValue[o] = v;
            if (f.weighted(o) > bestWeighted[o]) {
                bestWeighted[o] = f.weighted(o);
                s.best[o] = v;
            }
        }
    }
    for (auto& v : s.mean) v /= static_cast<double>(pop.size());
    return s;
}

void reportProgress(const GenerationStats& s) {
    std::cout << "gen " << s.generation << ": evals=" << s.evaluations << " best=";
    for (std::size_t o = 0; o < s.best.size(); ++o)
        std::cout << (o ? "," : "") << s.best[o];
    std::cout << " mean=";
    for (std::size_t o = 0; o < s.mean.size(); ++o)
        std::cout << (o ? "," : "") << s.mean[o];
    std::cout << "\n";
}

/// Semantic identity for hall-of-fame deduplication: the gene multiset, so
/// permutations of the same linear combination count as one model.
std::string modelKey(const PrimitiveSet& pset, const Model& m) {
    std::vector<std::string> terms = termStrings(pset, m);
    std::sort(terms.begin(), terms.end());
    std::string key;
    for (const auto& t : terms) {
        key += t;
        key += '|';
    }
    return key;
}

class HallOfFame {
public:
    explicit HallOfFame(std::size_t capacity) : capacity_(capacity) {}

    // Strict fitness order; exact ties prefer fewer terms (lexicographic
    // parsimony pressure, decisive only when scores coincide bit-for-bit).
    static bool precedes(const Model& a, const Model& b) {
        const double wa = a.fitness().weighted(0), wb = b.fitness().weighted(0);
        if (wa != wb) return wa > wb;
        return a.termCount() < b.termCount();
    }

    void update(const PrimitiveSet& pset, const std::vector<Model>& pop) {
        if (capacity_ == 0) return;
        for (const auto& ind : pop) {
            if (members_.size() == capacity_ && !precedes(ind, members_.back())) continue;
            const std::string key = modelKey(pset, ind);
            if (std::find(keys_.begin(), keys_.end(), key) != keys_.end()) continue;
            std::size_t at = 0;
            while (at < members_.size() && !precedes(ind, members_[at])) ++at;
            members_.insert(members_.begin() + static_cast<std::ptrdiff_t>(at), ind);
            keys_.insert(keys_.begin() + static_cast<std::ptrdiff_t>(at), key);
            if (members_.size() > capacity_) {
                members_.pop_back();
                keys_.pop_back();
            }
        }
    }

    const std::vector<Model>& members() const { return members_; }

private:
    std::size_t capacity_;
    std::vector<Model> members_;
    std::vector<std::string> keys_;
};

/// CXPB pairing plus MTPB mutation of the non-recombined, as in the
/// mono-objective flowchart; shared by both optimization paths.
std::size_t varyAndEvaluate(const PrimitiveSet& pset, const EvolveConfig& cfg,
                            std::vector<Model>& offspring, Rng& rng,
                            const Evaluator& evaluate) {
    std::vector<bool> recombined(offspring.size(), false);
    for (std::size_t i = 0; i + 1 < offspring.size(); i += 2) {
        if (!rng.bernoulli(cfg.cxpb)) continue;
        recombined[i] = recombined[i + 1] = true;
        if (rng.bernoulli(0.5)) {
            auto [a, b] = crossoverHighLevel(pset, offspring[i], offspring[i + 1],
                                             cfg.maxTerms, rng);
            offspring[i] = std::move(a);
            offspring[i + 1] = std::move(b);
        } else {
            auto [a, b] = crossoverLowLevel(pset, offspring[i], offspring[i + 1],
                                            cfg.maxHeight, rng);
            offspring[i] = std::move(a);
            offspring[i + 1] = std::move(b);
        }
    }
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        if (recombined[i]) continue;
        if (rng.bernoulli(cfg.mtpb))
            offspring[i] = mutate(pset, offspring[i], cfg.maxHeight, rng);
    }
    return evaluatePending(offspring, evaluate, cfg.workers);
}

} // namespace

std::vector<Model> initPopulation(const PrimitiveSet& pset, const EvolveConfig& cfg, Rng& rng) {
    validate(cfg);
    std::vector<Model> pop;
    pop.reserve(static_cast<std::size_t>(cfg.popSize));
    for (int i = 0; i < cfg.popSize; ++i) pop.push_back(randomIndividual(pset, cfg, rng));
    return pop;
}

std::size_t tournamentSelect(const std::vector<Model>& population, int k, Rng& rng) {
    if (population.empty()) throw std::invalid_argument("empty population");
    std::size_t best = rng.uniformIndex(population.size());
    if (!population[best].fitness().valid())
        throw std::invalid_argument("unevaluated individual encountered");
    for (int draw = 1; draw < k; ++draw) {
        const std::size_t c = rng.uniformIndex(population.size());
        if (!population[c].fitness().valid())
            throw std::invalid_argument("unevaluated individual encountered");
        if (population[c].fitness().betterThan(population[best].fitness())) best = c;
    }
    return best;
}

std::pair<Model, Model> crossoverHighLevel(const PrimitiveSet& pset, const Model& a,
                                           const Model& b, int maxTerms, Rng& rng) {
    const std::size_t la = a.termCount(), lb = b.termCount();
    std::size_t cutA, cutB;
    do {
        cutA = static_cast<std::size_t>(rng.uniformInt(0, static_cast<int>(la)));
        cutB = static_cast<std::size_t>(rng.uniformInt(0, static_cast<int>(lb)));
    } while ((cutA == 0 && cutB == lb) || (cutB == 0 && cutA == la)); // no empty offspring

    auto splice = [&](const Model& head, std::size_t cutHead, const Model& tail,
                      std::size_t cutTail) {
        std::vector<ExprTree> genes(head.genes().begin(),
                                    head.genes().begin() + static_cast<std::ptrdiff_t>(cutHead));
        genes.insert(genes.end(), tail.genes().begin() + static_cast<std::ptrdiff_t>(cutTail),
                     tail.genes().end());
        if (genes.size() > static_cast<std::size_t>(maxTerms))
            genes.resize(static_cast<std::size_t>(maxTerms));
        return Model(pset, std::move(genes));
    };
    return {splice(a, cutA, b, cutB), splice(b, cutB, a, cutA)};
}

std::pair<Model, Model> crossoverLowLevel(const PrimitiveSet& pset, const Model& a,
                                          const Model& b, int maxHeight, Rng& rng) {
    for (int attempt = 0; attempt <= kLowLevelRetries; ++attempt) {
        const std::size_t ga = rng.uniformIndex(a.termCount());
        const std::size_t gb = rng.uniformIndex(b.termCount());
        const ExprTree& ta = a.genes()[ga];
        const ExprTree& tb = b.genes()[gb];
        const std::size_t na = rng.uniformIndex(ta.size());
        const std::size_t nb = rng.uniformIndex(tb.size());

        const ExprTree newA = ta.withSubtree(na, tb.subtree(nb));
        const ExprTree newB = tb.withSubtree(nb, ta.subtree(na));
        if (newA.height() > maxHeight || newB.height() > maxHeight) continue;

        std::vector<ExprTree> genesA = a.genes();
        std::vector<ExprTree> genesB = b.genes();
        genesA[ga] = newA;
        genesB[gb] = newB;
        return {Model(pset, std::move(genesA)), Model(pset, std::move(genesB))};
    }
    return {a, b}; // exchange kept violating the height cap
}

Model mutate(const PrimitiveSet& pset, const Model& individual, int maxHeight, Rng& rng) {
    std::vector<ExprTree> genes = individual.genes();
    const std::size_t g = rng.uniformIndex(genes.size());
    if (rng.bernoulli(0.5)) {
        // inner: replace a random subtree, height budget shrunk by its depth
        const ExprTree& tree = genes[g];
        const std::size_t node = rng.uniformIndex(tree.size());
        const int depth = tree.nodeDepths()[node];
        const int budget = std::max(0, maxHeight - depth);
        genes[g] = tree.withSubtree(node, randomTree(pset, budget, rng));
    } else {
        // outer: swap the gene for an entirely new basis function
        genes[g] = randomTree(pset, maxHeight, rng);
    }
    return Model(pset, std::move(genes));
}

std::vector<std::vector<std::size_t>> nonDominatedSort(const std::vector<Fitness>& fitnesses) {
    const std::size_t n = fitnesses.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominationCount(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (fitnesses[i].dominates(fitnesses[j])) {
                dominated[i].push_back(j);
                ++dominationCount[j];
            } else if (fitnesses[j].dominates(fitnesses[i])) {
                dominated[j].push_back(i);
                ++dominationCount[i];
            }
        }
    }
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (dominationCount[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated[i])
                if (--dominationCount[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowdingDistances(const std::vector<Fitness>& fitnesses,
                                      const std::vector<std::size_t>& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    const std::size_t arity = fitnesses[front[0]].values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t o = 0; o < arity; ++o) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return fitnesses[front[x]].values[o] < fitnesses[front[y]].values[o];
        });
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double lo = fitnesses[front[order.front()]].values[o];
        const double hi = fitnesses[front[order.back()]].values[o];
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range)) continue;
        for (std::size_t r = 1; r + 1 < n; ++r) {
            const double prev = fitnesses[front[order[r - 1]]].values[o];
            const double next = fitnesses[front[order[r + 1]]].values[o];
            if (std::isfinite(prev) && std::isfinite(next))
                dist[order[r]] += (next - prev) / range;
        }
    }
    return dist;
}

EvolveResult run(const PrimitiveSet& pset, const EvolveConfig& cfg, const Evaluator& evaluate) {
    validate(cfg);
    Rng rng(cfg.seed);
    std::vector<Model> pop = initPopulation(pset, cfg, rng);
    std::size_t evals = evaluatePending(pop, evaluate, cfg.workers);
    checkObjectiveArity(pop, 1);

    HallOfFame hof(static_cast<std::size_t>(cfg.elite));
    hof.update(pset, pop);

    EvolveResult result;
    result.log.push_back(makeStats(0, evals, pop));
    if (cfg.verbose) reportProgress(result.log.back());

    for (int gen = 1; gen <= cfg.nGen; ++gen) {
        std::vector<Model> offspring;
        offspring.reserve(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i)
            offspring.push_back(pop[tournamentSelect(pop, cfg.tournamentSize, rng)]);

        evals = varyAndEvaluate(pset, cfg, offspring, rng, evaluate);
        checkObjectiveArity(offspring, 1);

        // elitism: the best-ever individuals displace the worst offspring
        if (!hof.members().empty()) {
            std::vector<std::size_t> byWorst(offspring.size());
            for (std::size_t i = 0; i < byWorst.size(); ++i) byWorst[i] = i;
            std::stable_sort(byWorst.begin(), byWorst.end(), [&](std::size_t x, std::size_t y) {
                return offspring[y].fitness().betterThan(offspring[x].fitness());
            });
            const std::size_t inject = std::min(hof.members().size(), offspring.size());
            for (std::size_t e = 0; e < inject; ++e)
                offspring[byWorst[e]] = hof.members()[e];
        }

        pop = std::move(offspring);
        hof.update(pset, pop);
        result.log.push_back(makeStats(gen, evals, pop));
        if (cfg.verbose) reportProgress(result.log.back());
    }

    result.hallOfFame = hof.members();
    return result;
}

EvolveResult runMO(const PrimitiveSet& pset, const EvolveConfig& cfg, const Evaluator& evaluate) {
    validate(cfg);
    Rng rng(cfg.seed);
    std::vector<Model> pop = initPopulation(pset, cfg, rng);
    std::size_t evals = evaluatePending(pop, evaluate, cfg.workers);

    std::size_t arity = pop.front().fitness().values.size();
    checkObjectiveArity(pop, arity);

    // rank and crowding metadata for the crowded tournament
    std::vector<std::size_t> rank(pop.size());
    std::vector<double> crowd(pop.size());
    auto assignMeta = [&](const std::vector<Model>& p) {
        std::vector<Fitness> fits;
        fits.reserve(p.size());
        for (const auto& ind : p) fits.push_back(ind.fitness());
        const auto fronts = nonDominatedSort(fits);
        rank.assign(p.size(), 0);
        crowd.assign(p.size(), 0.0);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            const auto d = crowdingDistances(fits, fronts[f]);
            for (std::size_t i = 0; i < fronts[f].size(); ++i) {
                rank[fronts[f][i]] = f;
                crowd[fronts[f][i]] = d[i];
            }
        }
        return fronts;
    };
    assignMeta(pop);

    auto crowdedTournament = [&]() {
        std::size_t best = rng.uniformIndex(pop.size());
        for (int draw = 1; draw < cfg.tournamentSize; ++draw) {
            const std::size_t c = rng.uniformIndex(pop.size());
            if (rank[c] < rank[best] || (rank[c] == rank[best] && crowd[c] > crowd[best]))
                best = c;
        }
        return best;
    };

    EvolveResult result;
    result.log.push_back(makeStats(0, evals, pop));
    if (cfg.verbose) reportProgress(result.log.back());

    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(cfg.popPercent * static_cast<double>(cfg.popSize)));

    for (int gen = 1; gen <= cfg.nGen; ++gen) {
        std::vector<Model> offspring;
        offspring.reserve(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) offspring.push_back(pop[crowdedTournament()]);

        evals = varyAndEvaluate(pset, cfg, offspring, rng, evaluate);
        checkObjectiveArity(offspring, arity);

        // NSGA-II environmental selection over parents plus offspring
        std::vector<Model> combined = std::move(pop);
        combined.insert(combined.end(), std::make_move_iterator(offspring.begin()),
                        std::make_move_iterator(offspring.end()));
        std::vector<Fitness> fits;
        fits.reserve(combined.size());
        for (const auto& ind : combined) fits.push_back(ind.fitness());
        const auto fronts = nonDominatedSort(fits);

        std::vector<Model> survivors;
        survivors.reserve(keep);
        for (const auto& front : fronts) {
            if (survivors.size() >= keep) break;
            if (survivors.size() + front.size() <= keep) {
                for (std::size_t i : front) survivors.push_back(combined[i]);
            } else {
                const auto d = crowdingDistances(fits, front);
                std::vector<std::size_t> byCrowd(front.size());
                for (std::size_t i = 0; i < front.size(); ++i) byCrowd[i] = i;
                std::stable_sort(byCrowd.begin(), byCrowd.end(),
                                 [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
                for (std::size_t i = 0; i < byCrowd.size() && survivors.size() < keep; ++i)
                    survivors.push_back(combined[front[byCrowd[i]]]);
            }
        }

        // refill the non-kept share with fresh random individuals
        while (survivors.size() < static_cast<std::size_t>(cfg.popSize))
            survivors.push_back(randomIndividual(pset, cfg, rng));
        pop = std::move(survivors);
        evals += evaluatePending(pop, evaluate, cfg.workers);
        checkObjectiveArity(pop, arity);

        assignMeta(pop);
        result.log.push_back(makeStats(gen, evals, pop));
        if (cfg.verbose) reportProgress(result.log.back());
    }

    // hall of fame: the final first non-dominated front, deduplicated
    const auto fronts = assignMeta(pop);
    std::vector<std::string> seen;
    for (std::size_t i : fronts.front()) {
        const std::string key = modelKey(pset, pop[i]);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        result.hallOfFame.push_back(pop[i]);
    }
    return result;
}

} // namespace narmax
