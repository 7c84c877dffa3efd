#include "depsteer/opt/ga.hpp"

#include <stdexcept>
#include <utility>

namespace depsteer::opt {

namespace {

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t tournament_pick(const GaState& state, std::size_t rounds,
                            std::mt19937_64& rng) {
    const std::size_t n = state.population.size();
    std::size_t winner = rng() % n;
    for (std::size_t r = 1; r < rounds; ++r) {
        const std::size_t challenger = rng() % n;
        if (state.fitness[challenger] > state.fitness[winner]) winner = challenger;
    }
    return winner;
}

MutationConfig crossover(const MutationConfig& a, const MutationConfig& b,
                         std::mt19937_64& rng) {
    const std::size_t genes = a.choices.size();
    if (genes < 2) return a;
    const std::size_t cut = 1 + rng() % (genes - 1);
    MutationConfig child = a;
    for (std::size_t i = cut; i < genes; ++i) child.choices[i] = b.choices[i];
    return child;
}

void mutate(MutationConfig& config, const MutationSpace& space, double rate,
            std::mt19937_64& rng) {
    for (std::size_t i = 0; i < config.choices.size(); ++i) {
        if (unit(rng) < rate) {
            const auto count =
                static_cast<std::uint64_t>(space.categories()[i].variants.size());
            config.choices[i] = static_cast<int>(rng() % count);
        }
    }
}

void validate_options(const GaOptions& options) {
    if (options.population < 2) {
        throw std::invalid_argument("population must hold at least two members");
    }
    if (options.tournament < 1) {
        throw std::invalid_argument("tournament needs at least one round");
    }
    if (options.crossover_rate < 0.0 || options.crossover_rate > 1.0 ||
        options.mutation_rate < 0.0 || options.mutation_rate > 1.0) {
        throw std::invalid_argument("rates must lie in [0, 1]");
    }
}

}  // namespace

MutationConfig random_config(const MutationSpace& space, std::mt19937_64& rng) {
    MutationConfig config;
    config.choices.reserve(space.category_count());
    for (const auto& category : space.categories()) {
        config.choices.push_back(
            static_cast<int>(rng() % static_cast<std::uint64_t>(category.variants.size())));
    }
    return config;
}

GaState ga_init(const MutationSpace& space, std::span<const MutationConfig> seeds,
                const GaOptions& options, const FitnessFn& fitness,
                std::mt19937_64& rng) {
    validate_options(options);
    GaState state;
    for (const auto& seed : seeds) {
        if (state.population.size() >= options.population) break;
        validate_config(seed, space);
        state.population.push_back(seed);
    }
    while (state.population.size() < options.population) {
        state.population.push_back(random_config(space, rng));
    }
    state.fitness.reserve(state.population.size());
    for (const auto& member : state.population) {
        state.fitness.push_back(fitness(member));
    }
    return state;
}

GaState ga_step(const GaState& state, const MutationSpace& space,
                const GaOptions& options, const FitnessFn& fitness,
                std::mt19937_64& rng) {
    validate_options(options);
    if (state.population.empty() ||
        state.population.size() != state.fitness.size()) {
        throw std::invalid_argument("ga_step needs an evaluated population");
    }

    std::size_t elite = 0;
    for (std::size_t i = 1; i < state.fitness.size(); ++i) {
        if (state.fitness[i] > state.fitness[elite]) elite = i;
    }

    GaState next;
    next.generation = state.generation + 1;
    next.population.push_back(state.population[elite]);
    next.fitness.push_back(state.fitness[elite]);

    while (next.population.size() < options.population) {
        const auto& parent_a = state.population[tournament_pick(state, options.tournament, rng)];
        const auto& parent_b = state.population[tournament_pick(state, options.tournament, rng)];
        MutationConfig child =
            unit(rng) < options.crossover_rate ? crossover(parent_a, parent_b, rng) : parent_a;
        mutate(child, space, options.mutation_rate, rng);
        next.fitness.push_back(fitness(child));
        next.population.push_back(std::move(child));
    }
    return next;
}

}  // namespace depsteer::opt
