#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "depsteer/opt/mutation.hpp"

namespace depsteer::opt {

struct GaOptions {
    std::size_t population = 10;
    double crossover_rate = 0.9;
    double mutation_rate = 0.2;  // per gene
    std::size_t tournament = 2;
};

struct GaState {
    std::vector<MutationConfig> population;
    std::vector<double> fitness;
    std::size_t generation = 0;
};

using FitnessFn = std::function<double(const MutationConfig&)>;

// Builds the starting population from `seeds`, topping up with uniform random
// configs when fewer than `options.population` are given.
GaState ga_init(const MutationSpace& space, std::span<const MutationConfig> seeds,
                const GaOptions& options, const FitnessFn& fitness,
                std::mt19937_64& rng);

// One generation: keep the single best member, then fill with children from
// tournament selection, single-point crossover and per-gene resampling.
// The best fitness never decreases across generations.
GaState ga_step(const GaState& state, const MutationSpace& space,
                const GaOptions& options, const FitnessFn& fitness,
                std::mt19937_64& rng);

MutationConfig random_config(const MutationSpace& space, std::mt19937_64& rng);

}  // namespace depsteer::opt
