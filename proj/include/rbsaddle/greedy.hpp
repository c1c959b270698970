#pragma once

// Greedy offline sampling driven by the inexpensive relative bound
// delta_u_energy / |u_N|_X over a random train set, with three enrichment
// variants differing in how stabilization is handled.

#include "rbsaddle/bounds.hpp"
#include "rbsaddle/constants.hpp"
#include "rbsaddle/rb_online.hpp"
#include "rbsaddle/rb_space.hpp"

#include <cstdint>
#include <vector>

namespace rbs {

enum class GreedyVariant : int {
    AlwaysSupremizer = 1,   // add u, p, supremizer every iteration
    AdaptiveSupremizer = 2, // add supremizer only when beta_N drops
    AdaptiveSnapshot = 3,   // add an extra velocity snapshot instead
};

struct GreedyConfig {
    std::vector<Vector> train_set;
    double tolerance = 1e-2; // on the max relative indicator over the train set
    int n_max = 200;         // cap on N_Z
    double delta_beta_tol = 0.1;
    GreedyVariant variant = GreedyVariant::AlwaysSupremizer;
    ConstantsMode constants_mode = ConstantsMode::Exact;
    const SurrogateModel* surrogate = nullptr; // required in surrogate mode
    EigOptions eig_opts{};
};

struct GreedyIteration {
    Vector mu_star;
    double max_indicator = 0;
    int added_u = 0, added_p = 0, added_sup = 0, added_extra = 0;
    double beta_n = 0;       // reduced inf-sup at mu_star after enrichment
    double beta_br = 0;      // truth inf-sup at mu_star
    double t_sweep_ms = 0;   // indicator sweep
    double t_enrich_ms = 0;  // truth solves + insertion + re-projection
};

struct GreedyTrace {
    std::vector<GreedyIteration> iterations;
    bool converged = false;
    double final_max_indicator = 0;
};

struct GreedyResult {
    RBSpace space;
    ReducedModel model;
    GreedyTrace trace;
};

// Uniform i.i.d. sample of `size` points in the domain, reproducible by seed.
std::vector<Vector> sample_train_set(const ParameterDomain& domain, int size,
                                     std::uint64_t seed);

GreedyResult greedy_run(const TruthDiscretization& disc, const GreedyConfig& config);

} // namespace rbs
