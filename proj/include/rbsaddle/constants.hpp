#pragma once

// Truth stability constants evaluated exactly via generalized eigenproblems,
// plus a cheap sampled surrogate with safety factors for train-set sweeps.

#include "rbsaddle/kernels.hpp"
#include "rbsaddle/stokes.hpp"

#include <map>
#include <optional>
#include <vector>

namespace rbs {

enum class ConstantsMode { Exact, Surrogate };

struct ConstantBounds {
    double alpha_lb = 0, alpha_ub = 0;
    double gamma_lb = 0, gamma_ub = 0;
    double gamma_b_ub = 0;
    double beta_br_lb = 0, beta_br_ub = 0;
    double beta_ba_lb = 0;
    double tilde_beta = 0;
    ConstantsMode mode = ConstantsMode::Exact;
};

double alpha_exact(const TruthDiscretization& disc, const Vector& mu,
                   const EigOptions& opts = {});
double gamma_exact(const TruthDiscretization& disc, const Vector& mu,
                   const EigOptions& opts = {});
double gamma_b_exact(const TruthDiscretization& disc, const Vector& mu,
                     const EigOptions& opts = {});
double beta_brezzi_exact(const TruthDiscretization& disc, const Vector& mu,
                         const EigOptions& opts = {});
double beta_babuska_exact(const TruthDiscretization& disc, const Vector& mu,
                          const EigOptions& opts = {});
double tilde_beta_exact(const TruthDiscretization& disc, const Vector& mu,
                        const EigOptions& opts = {});

// All exact constants at mu (LB = UB per pair).
ConstantBounds exact_bounds(const TruthDiscretization& disc, const Vector& mu,
                            bool with_babuska = false, const EigOptions& opts = {});

struct TrainingSample {
    Vector mu;
    double alpha = 0, gamma = 0, beta_br = 0;
};

struct SurrogateModel {
    std::vector<TrainingSample> samples;
    Vector a_term_min_eigs; // lambda_min(A_q, X-Gram) per a-term, >= 0
    double safety_lb = 0.9;
    double safety_ub = 1.1;
};

// Computes exact constants at the training parameters and the per-term
// coercivity floors used by the min-theta route.
SurrogateModel build_surrogate(const TruthDiscretization& disc,
                               const std::vector<Vector>& training_mus,
                               const EigOptions& opts = {});

ConstantBounds surrogate_bounds(const TruthDiscretization& disc, const SurrogateModel& model,
                                const Vector& mu);

// Distance from mu to the nearest training sample.
double nearest_sample_distance(const SurrogateModel& model, const Vector& mu);

// Memoizing provider so sweeps and the greedy loop share evaluations.
class ConstantsCache {
public:
    ConstantsCache(const TruthDiscretization& disc, ConstantsMode mode,
                   const SurrogateModel* surrogate = nullptr, const EigOptions& opts = {});

    const ConstantBounds& at(const Vector& mu, bool with_babuska = false);

    const std::map<std::vector<double>, ConstantBounds>& entries() const { return cache_; }
    void preload(const Vector& mu, const ConstantBounds& bounds);

private:
    const TruthDiscretization& disc_;
    ConstantsMode mode_;
    const SurrogateModel* surrogate_;
    EigOptions opts_;
    std::map<std::vector<double>, ConstantBounds> cache_;
};

} // namespace rbs
