#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "evogen/dataset.hpp"
#include "evogen/mlp.hpp"
#include "evogen/rng.hpp"

namespace evogen {

struct FitnessValue {
    double fitness = 0;
    double mse_gen = 0;
    double mse_real = 0;
    bool diverged = false;
};

// One candidate generated dataset: genes in normalized [0,1] space plus a
// fixed balanced label vector. Labels never change after creation.
struct Genome {
    std::vector<double> genes;  // n_generated x n_attributes, row-major
    std::vector<int> labels;
    int n_attributes = 0;
    int n_classes = 0;
    std::optional<FitnessValue> cached_fitness;

    int n_generated() const { return static_cast<int>(labels.size()); }

    Dataset as_dataset() const {
        Dataset d;
        d.features = genes;
        d.labels = labels;
        d.n_attributes = n_attributes;
        d.n_classes = n_classes;
        for (int j = 0; j < n_attributes; ++j) d.attribute_names.push_back("attr_" + std::to_string(j));
        return d;
    }
};

struct GaConfig {
    int population_size = 32;
    int generations = 200;
    double mutation_prob = 0.05;
    int elite_count = 2;
    double parent_fraction = 0.25;
    int n_generated = 150;
    std::optional<double> target_fitness;
    MlpConfig inner_mlp;
    std::uint64_t seed = 0;
};

struct GenerationRecord {
    int generation = 0;
    double best_fitness = 0;
    double best_mse_gen = 0;
    double best_mse_real = 0;
    double mean_fitness = 0;
};

using FitnessTrace = std::vector<GenerationRecord>;

constexpr double kFitnessEpsilon = 1e-9;

inline void validate_ga_config(const GaConfig& cfg) {
    if (cfg.population_size < 2) throw std::runtime_error("GaConfig: population_size must be >= 2");
    if (cfg.generations < 1) throw std::runtime_error("GaConfig: generations must be positive");
    if (!(cfg.mutation_prob > 0 && cfg.mutation_prob < 1)) throw std::runtime_error("GaConfig: mutation_prob in (0,1)");
    if (cfg.elite_count < 1) throw std::runtime_error("GaConfig: elite_count must be positive");
    if (cfg.elite_count >= cfg.population_size) throw std::runtime_error("GaConfig: elite_count < population_size");
    if (!(cfg.parent_fraction > 0 && cfg.parent_fraction <= 1)) {
        throw std::runtime_error("GaConfig: parent_fraction in (0,1]");
    }
    if (cfg.n_generated < 1) throw std::runtime_error("GaConfig: n_generated must be positive");
    validate_config(cfg.inner_mlp);
}

namespace detail {

inline void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace detail

// population_size genomes with i.i.d. uniform [0,1] genes and balanced
// round-robin labels (instance i gets class i mod n_classes).
inline std::vector<Genome> init_population(const GaConfig& cfg, int n_attributes, int n_classes) {
    validate_ga_config(cfg);
    std::vector<Genome> population(cfg.population_size);
    for (int i = 0; i < cfg.population_size; ++i) {
        Genome& g = population[i];
        g.n_attributes = n_attributes;
        g.n_classes = n_classes;
        g.genes.resize(static_cast<std::size_t>(cfg.n_generated) * n_attributes);
        g.labels.resize(cfg.n_generated);
        rng::Stream stream(rng::mix(cfg.seed, rng::kTagInitPop, static_cast<std::uint64_t>(i)));
        for (double& gene : g.genes) gene = stream.uniform();
        for (int r = 0; r < cfg.n_generated; ++r) g.labels[r] = r % n_classes;
    }
    return population;
}

// Point mutation: each gene is independently replaced by a fresh uniform
// [0,1] draw with probability p. Labels are untouched; any cached fitness is
// dropped on the result.
inline Genome mutate(const Genome& g, double p, rng::Stream& stream) {
    if (!(p > 0 && p < 1)) throw std::runtime_error("mutate: p must be in (0,1)");
    Genome out = g;
    out.cached_fitness.reset();
    for (double& gene : out.genes) {
        if (stream.uniform() < p) gene = stream.uniform();
    }
    return out;
}

// Trains a fresh inner network (seeded with eval_seed) on the genome and
// scores it on the genome's own data and on the real training/testing batch:
// fitness = 1 / (mse_gen + mse_real + epsilon). A diverging training run maps
// to fitness 0 with the diverged flag set.
inline FitnessValue fitness(const Genome& g, const Dataset& real_batch, const MlpConfig& inner_mlp,
                            std::uint64_t eval_seed) {
    if (real_batch.n_instances() == 0) throw std::runtime_error("fitness: empty real batch");
    if (g.n_attributes != real_batch.n_attributes || g.n_classes != real_batch.n_classes) {
        throw std::runtime_error("fitness: genome dimensions do not match real batch");
    }
    MlpConfig cfg = inner_mlp;
    cfg.seed = eval_seed;
    const Dataset gen_data = g.as_dataset();
    FitnessValue v;
    try {
        auto [trained, report] = train(init(cfg), gen_data);
        v.mse_gen = mse(trained, gen_data);
        v.mse_real = mse(trained, real_batch);
        v.fitness = 1.0 / (v.mse_gen + v.mse_real + kFitnessEpsilon);
    } catch (const TrainingDivergence&) {
        v.fitness = 0;
        v.mse_gen = std::numeric_limits<double>::infinity();
        v.mse_real = std::numeric_limits<double>::infinity();
        v.diverged = true;
    }
    return v;
}

struct StepResult {
    std::vector<Genome> next_population;
    GenerationRecord record;
    Genome best;  // fittest genome of the evaluated generation
};

// One generation: evaluate every genome lacking a cached fitness (in
// parallel; per-individual seeds keep results independent of scheduling),
// rank, carry elites over with their cache, and fill the rest with mutants of
// parents drawn uniformly from the top parent_fraction.
inline StepResult step(std::vector<Genome> population, const GaConfig& cfg, const Dataset& real_batch,
                       int generation_index, int n_threads = 0) {
    const int n = static_cast<int>(population.size());
    std::vector<int> pending;
    for (int i = 0; i < n; ++i) {
        if (!population[i].cached_fitness) pending.push_back(i);
    }
    detail::parallel_for(static_cast<int>(pending.size()), n_threads, [&](int k) {
        const int i = pending[k];
        const std::uint64_t eval_seed =
            rng::mix(cfg.seed, rng::kTagFitness, static_cast<std::uint64_t>(generation_index),
                     static_cast<std::uint64_t>(i));
        population[i].cached_fitness = fitness(population[i], real_batch, cfg.inner_mlp, eval_seed);
    });

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return population[a].cached_fitness->fitness > population[b].cached_fitness->fitness;
    });

    StepResult result;
    const Genome& best = population[order[0]];
    result.record.generation = generation_index;
    result.record.best_fitness = best.cached_fitness->fitness;
    result.record.best_mse_gen = best.cached_fitness->mse_gen;
    result.record.best_mse_real = best.cached_fitness->mse_real;
    double sum = 0;
    for (const Genome& g : population) sum += g.cached_fitness->fitness;
    result.record.mean_fitness = sum / n;
    result.best = best;

    const int parent_pool = std::max(1, static_cast<int>(std::ceil(cfg.parent_fraction * n)));
    rng::Stream select_stream(rng::mix(cfg.seed, rng::kTagSelect, static_cast<std::uint64_t>(generation_index)));
    rng::Stream mutate_stream(rng::mix(cfg.seed, rng::kTagMutate, static_cast<std::uint64_t>(generation_index)));

    result.next_population.reserve(n);
    for (int e = 0; e < cfg.elite_count; ++e) result.next_population.push_back(population[order[e]]);
    for (int s = cfg.elite_count; s < n; ++s) {
        const int parent = order[static_cast<int>(select_stream.uniform_int(parent_pool))];
        result.next_population.push_back(mutate(population[parent], cfg.mutation_prob, mutate_stream));
    }
    return result;
}

// Runs the genetic algorithm for cfg.generations generations (or until
// target_fitness is reached) and returns the fittest genome ever observed
// together with the full per-generation trace.
inline std::pair<Genome, FitnessTrace> evolve(const GaConfig& cfg, const Dataset& real_batch, int n_threads = 0) {
    validate_ga_config(cfg);
    if (real_batch.n_instances() == 0) throw std::runtime_error("evolve: empty real batch");
    std::vector<Genome> population = init_population(cfg, real_batch.n_attributes, real_batch.n_classes);
    FitnessTrace trace;
    trace.reserve(cfg.generations);
    Genome best;
    double best_fitness = -1;
    for (int g = 0; g < cfg.generations; ++g) {
        StepResult result = step(std::move(population), cfg, real_batch, g, n_threads);
        population = std::move(result.next_population);
        trace.push_back(result.record);
        if (result.record.best_fitness > best_fitness) {
            best_fitness = result.record.best_fitness;
            best = std::move(result.best);
        }
        if (cfg.target_fitness && result.record.best_fitness >= *cfg.target_fitness) break;
    }
    return {std::move(best), std::move(trace)};
}

// Maps genes back to original units through the recorded (min, max) pairs.
inline Dataset export_generated(const Genome& g, const std::vector<std::pair<double, double>>& norm_params,
                                const std::vector<std::string>& attribute_names = {}) {
    if (static_cast<int>(norm_params.size()) != g.n_attributes) {
        throw std::runtime_error("export_generated: norm_params do not cover the genome attributes");
    }
    Dataset d = g.as_dataset();
    if (!attribute_names.empty()) {
        if (static_cast<int>(attribute_names.size()) != g.n_attributes) {
            throw std::runtime_error("export_generated: attribute name count mismatch");
        }
        d.attribute_names = attribute_names;
    }
    d.norm_params = norm_params;
    return denormalize(d);
}

inline void write_trace_csv(const FitnessTrace& trace, std::ostream& out) {
    out << "generation,best_fitness,best_mse_gen,best_mse_real,mean_fitness\n";
    char buf[160];
    for (const auto& rec : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", rec.generation, rec.best_fitness,
                      rec.best_mse_gen, rec.best_mse_real, rec.mean_fitness);
        out << buf;
    }
}

inline void write_trace_csv(const FitnessTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    write_trace_csv(trace, out);
}

}  // namespace evogen
