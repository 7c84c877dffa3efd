#include "depsteer/opt/gp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

#include "depsteer/common.hpp"
#include "depsteer/kernels/vec_kernels.hpp"

namespace depsteer::opt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinLogParam = -6.0;
constexpr double kMaxLogParam = 7.0;

double standard_normal_pdf(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi);
}

double standard_normal_cdf(double u) {
    return 0.5 * std::erfc(-u / std::sqrt(2.0));
}

// In-place lower Cholesky of a row-major symmetric matrix. Returns false on a
// non-positive pivot.
bool cholesky(std::vector<double>& matrix, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = matrix[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                sum -= matrix[i * n + k] * matrix[j * n + k];
            }
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum)) return false;
                matrix[i * n + i] = std::sqrt(sum);
            } else {
                matrix[i * n + j] = sum / matrix[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) matrix[i * n + j] = 0.0;
    }
    return true;
}

void forward_solve(const std::vector<double>& chol, std::size_t n,
                   std::vector<double>& rhs) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = rhs[i];
        for (std::size_t k = 0; k < i; ++k) sum -= chol[i * n + k] * rhs[k];
        rhs[i] = sum / chol[i * n + i];
    }
}

void backward_solve(const std::vector<double>& chol, std::size_t n,
                    std::vector<double>& rhs) {
    for (std::size_t i = n; i-- > 0;) {
        double sum = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= chol[k * n + i] * rhs[k];
        rhs[i] = sum / chol[i * n + i];
    }
}

}  // namespace

double GpSurrogate::kernel(std::span<const double> a, std::span<const double> b) const {
    const double d2 = kernels::weighted_sqdist(a, b, inverse_lengthscale_sq_);
    return hyperparams_.signal_variance * std::exp(-0.5 * d2);
}

void GpSurrogate::factorize() {
    const std::size_t n = targets_.size();

    target_mean_ = 0.0;
    for (const double y : targets_) target_mean_ += y;
    target_mean_ /= static_cast<double>(n);

    inverse_lengthscale_sq_.resize(hyperparams_.lengthscales.size());
    for (std::size_t i = 0; i < hyperparams_.lengthscales.size(); ++i) {
        const double l = hyperparams_.lengthscales[i];
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw std::invalid_argument("lengthscales must be positive");
        }
        inverse_lengthscale_sq_[i] = 1.0 / (l * l);
    }

    std::vector<double> base(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = kernel(inputs_[i], inputs_[j]);
            base[i * n + j] = k;
            base[j * n + i] = k;
        }
        base[i * n + i] += hyperparams_.noise_variance;
    }

    jitter_ = 0.0;
    double jitter = 1e-8;
    chol_ = base;
    while (!cholesky(chol_, n)) {
        if (jitter > 1e-2) {
            throw EvaluationError("kernel matrix not positive definite");
        }
        chol_ = base;
        for (std::size_t i = 0; i < n; ++i) chol_[i * n + i] += jitter;
        jitter_ = jitter;
        jitter *= 10.0;
    }

    alpha_.resize(n);
    for (std::size_t i = 0; i < n; ++i) alpha_[i] = targets_[i] - target_mean_;
    forward_solve(chol_, n, alpha_);
    // log|K| accumulates while alpha still holds L^-1 (y - mean).
    double log_det = 0.0;
    for (std::size_t i = 0; i < n; ++i) log_det += std::log(chol_[i * n + i]);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += alpha_[i] * alpha_[i];
    backward_solve(chol_, n, alpha_);
    log_marginal_ = -0.5 * quad - log_det -
                    0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
}

GpSurrogate GpSurrogate::fit(std::vector<std::vector<double>> inputs,
                             std::vector<double> targets,
                             GpHyperparams hyperparams) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw std::invalid_argument("inputs and targets must be non-empty and equal length");
    }
    const std::size_t dim = inputs.front().size();
    if (dim == 0) throw std::invalid_argument("inputs must be non-empty vectors");
    for (const auto& row : inputs) {
        if (row.size() != dim) {
            throw std::invalid_argument("inputs must share one dimension");
        }
    }
    if (hyperparams.lengthscales.empty()) {
        hyperparams.lengthscales.assign(dim, 1.0);
    }
    if (hyperparams.lengthscales.size() != dim) {
        throw std::invalid_argument("lengthscale count must match input dimension");
    }
    if (!(hyperparams.signal_variance > 0.0) || !(hyperparams.noise_variance >= 0.0)) {
        throw std::invalid_argument("variances must be positive");
    }

    GpSurrogate model;
    model.inputs_ = std::move(inputs);
    model.targets_ = std::move(targets);
    model.hyperparams_ = std::move(hyperparams);
    model.factorize();
    return model;
}

GpSurrogate GpSurrogate::fit_mle(std::vector<std::vector<double>> inputs,
                                 std::vector<double> targets, std::uint64_t seed,
                                 int starts, int sweeps) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw std::invalid_argument("inputs and targets must be non-empty and equal length");
    }
    const std::size_t dim = inputs.front().size();
    if (dim == 0) throw std::invalid_argument("inputs must be non-empty vectors");

    double variance = 0.0;
    double mean = 0.0;
    for (const double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    for (const double y : targets) variance += (y - mean) * (y - mean);
    variance = std::max(variance / static_cast<double>(targets.size()), 1e-4);

    // theta = [log lengthscale (shared per dim), log signal var, log noise var]
    const std::size_t n_params = dim + 2;
    const auto objective = [&](const std::vector<double>& theta) -> double {
        GpHyperparams hp;
        hp.lengthscales.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) hp.lengthscales[i] = std::exp(theta[i]);
        hp.signal_variance = std::exp(theta[dim]);
        hp.noise_variance = std::exp(theta[dim + 1]);
        try {
            return GpSurrogate::fit(inputs, targets, std::move(hp)).log_marginal_;
        } catch (const EvaluationError&) {
            return -1e300;
        }
    };

    std::vector<double> best_theta;
    double best_value = -1e301;
    for (int s = 0; s < std::max(starts, 1); ++s) {
        std::vector<double> theta(n_params);
        if (s == 0) {
            std::fill(theta.begin(), theta.begin() + dim, 0.0);  // lengthscale 1
        } else if (s == 1) {
            std::fill(theta.begin(), theta.begin() + dim, std::log(3.0));
        } else {
            std::mt19937_64 rng(mix_seed(seed, "gp-mle-start", static_cast<std::uint64_t>(s)));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (std::size_t i = 0; i < dim; ++i) theta[i] = -1.0 + 3.0 * unit(rng);
        }
        theta[dim] = std::log(variance);
        theta[dim + 1] = std::log(variance * 1e-3 + 1e-8);

        double value = objective(theta);
        double step = 0.5;
        for (int sweep = 0; sweep < sweeps && step > 1e-3; ++sweep) {
            bool improved = false;
            for (std::size_t p = 0; p < n_params; ++p) {
                for (const double direction : {+1.0, -1.0}) {
                    std::vector<double> trial = theta;
                    trial[p] = std::clamp(trial[p] + direction * step, kMinLogParam,
                                          kMaxLogParam);
                    const double trial_value = objective(trial);
                    if (trial_value > value) {
                        theta = std::move(trial);
                        value = trial_value;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (value > best_value) {
            best_value = value;
            best_theta = theta;
        }
    }

    GpHyperparams hp;
    hp.lengthscales.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) hp.lengthscales[i] = std::exp(best_theta[i]);
    hp.signal_variance = std::exp(best_theta[dim]);
    hp.noise_variance = std::exp(best_theta[dim + 1]);
    return GpSurrogate::fit(std::move(inputs), std::move(targets), std::move(hp));
}

GpSurrogate::Posterior GpSurrogate::posterior(std::span<const double> input) const {
    const std::size_t n = targets_.size();
    if (input.size() != inputs_.front().size()) {
        throw std::invalid_argument("posterior input has wrong dimension");
    }
    std::vector<double> k_star(n);
    for (std::size_t i = 0; i < n; ++i) k_star[i] = kernel(inputs_[i], input);

    Posterior post;
    post.mean = target_mean_;
    for (std::size_t i = 0; i < n; ++i) post.mean += k_star[i] * alpha_[i];

    std::vector<double> v = k_star;
    forward_solve(chol_, n, v);
    double explained = 0.0;
    for (std::size_t i = 0; i < n; ++i) explained += v[i] * v[i];
    post.variance = std::max(kernel(input, input) - explained, 0.0);
    return post;
}

double GpSurrogate::best_observed() const {
    return *std::max_element(targets_.begin(), targets_.end());
}

double expected_improvement(double mean, double variance, double best, double xi) {
    const double margin = mean - best - xi;
    if (variance <= 0.0) return std::max(margin, 0.0);
    const double sigma = std::sqrt(variance);
    const double u = margin / sigma;
    return margin * standard_normal_cdf(u) + sigma * standard_normal_pdf(u);
}

double upper_confidence_bound(double mean, double variance, double kappa) {
    return mean + kappa * std::sqrt(std::max(variance, 0.0));
}

MutationConfig bo_propose(const GpSurrogate& surrogate, const MutationSpace& space,
                          const std::vector<MutationConfig>& visited,
                          const BoProposeOptions& options) {
    const std::uint64_t total = space.config_count();
    std::vector<std::uint64_t> candidates;
    if (total <= options.candidate_cap) {
        candidates.resize(total);
        for (std::uint64_t i = 0; i < total; ++i) candidates[i] = i;
    } else {
        std::set<std::uint64_t> sampled;
        std::mt19937_64 rng(mix_seed(options.seed, "bo-candidates"));
        std::uint64_t attempts = 0;
        const std::uint64_t max_attempts = options.candidate_cap * 16;
        while (sampled.size() < options.candidate_cap && attempts < max_attempts) {
            sampled.insert(rng() % total);
            ++attempts;
        }
        candidates.assign(sampled.begin(), sampled.end());
    }

    std::set<std::uint64_t> visited_indices;
    for (const auto& config : visited) {
        visited_indices.insert(config_index(config, space));
    }

    const double best = surrogate.best_observed();
    double best_unvisited = -1.0;
    double best_any = -1.0;
    std::uint64_t best_unvisited_index = 0;
    std::uint64_t best_any_index = 0;
    bool has_unvisited = false;
    bool has_any = false;

    for (const std::uint64_t index : candidates) {
        const MutationConfig config = config_from_index(index, space);
        const auto features = one_hot(config, space);
        const auto post = surrogate.posterior(features);
        const double score =
            options.acquisition == Acquisition::ExpectedImprovement
                ? expected_improvement(post.mean, post.variance, best, options.xi)
                : upper_confidence_bound(post.mean, post.variance, options.ucb_kappa);
        if (!has_any || score > best_any) {
            has_any = true;
            best_any = score;
            best_any_index = index;
        }
        if (visited_indices.count(index) == 0 &&
            (!has_unvisited || score > best_unvisited)) {
            has_unvisited = true;
            best_unvisited = score;
            best_unvisited_index = index;
        }
    }
    if (!has_any) throw EvaluationError("bo_propose: empty candidate pool");
    // A flat acquisition (all zero) still walks the space: strict comparisons
    // keep the lowest-index unvisited candidate.
    return config_from_index(has_unvisited ? best_unvisited_index : best_any_index,
                             space);
}

}  // namespace depsteer::opt
