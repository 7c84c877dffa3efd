#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "depsteer/opt/mutation.hpp"

namespace depsteer::opt {

struct GpHyperparams {
    std::vector<double> lengthscales;  // one per input dimension
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
};

// Gaussian-process regressor with an anisotropic squared-exponential kernel
// (independent lengthscale per dimension). Observations are centered on their
// mean; the prior reverts to that mean away from data.
class GpSurrogate {
public:
    static GpSurrogate fit(std::vector<std::vector<double>> inputs,
                           std::vector<double> targets, GpHyperparams hyperparams);
    // Maximizes the log marginal likelihood over log-hyperparameters with a
    // multi-start compass search.
    static GpSurrogate fit_mle(std::vector<std::vector<double>> inputs,
                               std::vector<double> targets, std::uint64_t seed,
                               int starts = 4, int sweeps = 60);

    struct Posterior {
        double mean = 0.0;
        double variance = 0.0;
    };
    Posterior posterior(std::span<const double> input) const;

    double log_marginal_likelihood() const { return log_marginal_; }
    const GpHyperparams& hyperparams() const { return hyperparams_; }
    double best_observed() const;
    // Jitter added to the kernel diagonal before factorization succeeded.
    double jitter() const { return jitter_; }
    std::size_t observation_count() const { return targets_.size(); }

private:
    GpSurrogate() = default;
    void factorize();
    double kernel(std::span<const double> a, std::span<const double> b) const;

    std::vector<std::vector<double>> inputs_;
    std::vector<double> targets_;
    GpHyperparams hyperparams_;
    std::vector<double> inverse_lengthscale_sq_;
    std::vector<double> chol_;   // lower-triangular factor, row major
    std::vector<double> alpha_;  // K^-1 (y - mean)
    double target_mean_ = 0.0;
    double jitter_ = 0.0;
    double log_marginal_ = 0.0;
};

enum class Acquisition { ExpectedImprovement, UpperConfidenceBound };

// EI with exploration margin xi; degenerates to max(mean - best - xi, 0) at
// zero variance.
double expected_improvement(double mean, double variance, double best, double xi);
double upper_confidence_bound(double mean, double variance, double kappa);

struct BoProposeOptions {
    double xi = 0.01;
    Acquisition acquisition = Acquisition::ExpectedImprovement;
    double ucb_kappa = 2.0;
    // Candidate pool: the whole space when it fits, otherwise a seeded uniform
    // sample of this size.
    std::uint64_t candidate_cap = 4096;
    std::uint64_t seed = 0;
};

// Argmax of the acquisition over the candidate pool, preferring configs not in
// `visited`; ties break toward the lowest encoded index.
MutationConfig bo_propose(const GpSurrogate& surrogate, const MutationSpace& space,
                          const std::vector<MutationConfig>& visited,
                          const BoProposeOptions& options = {});

}  // namespace depsteer::opt
