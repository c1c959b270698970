#include "rbsaddle/greedy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace rbs {
namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Relative indicator delta_u_energy / |u_N|_X at one train point; infinity
// when the reduced system is singular (the point is then the natural pick).
double indicator_at(const ReducedModel& model, const Vector& mu, const ConstantBounds& c) {
    RBSolution sol;
    try {
        sol = online_solve(model, mu);
    } catch (const SingularReducedSystem&) {
        return std::numeric_limits<double>::infinity();
    }
    const auto [r1, r2] = residual_dual_norms(model, mu, sol);
    const double u_norm = std::max(sol.u.norm(), 1e-14); // basis is X-orthonormal
    return delta_u_energy(r1, r2, c) / u_norm;
}

} // namespace

std::vector<Vector> sample_train_set(const ParameterDomain& domain, int size,
                                     std::uint64_t seed) {
    if (size <= 0) throw EmptyTrainingSet("train-set size must be positive");
    std::mt19937_64 gen(seed);
    const auto unit = [&gen] { return (gen() >> 11) * 0x1.0p-53; };
    const Index n = domain.lower.size();
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
        Vector mu(n);
        for (Index k = 0; k < n; ++k)
            mu[k] = domain.lower[k] + (domain.upper[k] - domain.lower[k]) * unit();
        out.push_back(std::move(mu));
    }
    return out;
}

GreedyResult greedy_run(const TruthDiscretization& disc, const GreedyConfig& config) {
    if (config.train_set.empty()) throw EmptyTrainingSet("greedy requires a nonempty train set");
    if (!(config.tolerance > 0.0)) throw Error("greedy tolerance must be positive");
    if (!(config.delta_beta_tol > 0.0 && config.delta_beta_tol <= 1.0))
        throw Error("delta_beta_tol must lie in (0, 1]");
    if (config.constants_mode == ConstantsMode::Surrogate && config.surrogate == nullptr)
        throw Error("surrogate constants mode needs a surrogate model");
    for (const Vector& mu : config.train_set) disc.domain.require(mu);

    const int n_train = static_cast<int>(config.train_set.size());
    ConstantsCache cache(disc, config.constants_mode, config.surrogate, config.eig_opts);
    SpdSolver x_solver(disc.x_gram);

    GreedyResult result;
    ReducedModelBuilder builder(disc);
    std::vector<bool> masked(static_cast<std::size_t>(n_train), false);
    std::vector<double> indicators(static_cast<std::size_t>(n_train), 0.0);

    const double inf = std::numeric_limits<double>::infinity();
    bool hit_tolerance = false;

    while (true) {
        const auto t_sweep0 = std::chrono::steady_clock::now();
        double max_ind = -1.0;
        int star = -1;
        for (int i = 0; i < n_train; ++i) {
            const Vector& mu = config.train_set[static_cast<std::size_t>(i)];
            double ind;
            if (result.space.n_z() == 0) {
                ind = inf;
            } else {
                ind = indicator_at(builder.model(), mu, cache.at(mu));
            }
            indicators[static_cast<std::size_t>(i)] = ind;
            if (masked[static_cast<std::size_t>(i)]) continue;
            if (ind > max_ind) { // strict: ties break toward the lowest index
                max_ind = ind;
                star = i;
            }
        }
        const double t_sweep = ms_since(t_sweep0);

        if (result.space.n_z() > 0 && max_ind <= config.tolerance) {
            hit_tolerance = true;
            break;
        }
        if (star < 0) break; // every train point is masked
        if (result.space.n_z() >= config.n_max) break;

        const auto t_enrich0 = std::chrono::steady_clock::now();
        const Vector& mu_star = config.train_set[static_cast<std::size_t>(star)];
        const int generation = static_cast<int>(result.trace.iterations.size());

        GreedyIteration it;
        it.mu_star = mu_star;
        it.max_indicator = max_ind;

        const TruthSolution truth = truth_solve(disc, mu_star);
        const SparseMatrix b_star = assemble_at(disc.b, disc.domain, mu_star);

        InsertReport rep_u = insert(result.space, disc.x_gram,
                                    {{truth.u, BasisRole::USnapshot}}, WhichSpace::X, generation);
        InsertReport rep_p = insert(result.space, disc.y_gram,
                                    {{truth.p, BasisRole::PSnapshot}}, WhichSpace::Y, generation);
        it.added_u = rep_u.accepted;
        it.added_p = rep_p.accepted;
        int rejected = rep_u.rejected + rep_p.rejected;

        it.beta_br = beta_brezzi_exact(disc, mu_star, config.eig_opts);
        const double beta_floor = config.delta_beta_tol * it.beta_br;

        if (config.variant == GreedyVariant::AlwaysSupremizer) {
            const Vector t = supremizer(x_solver, b_star, truth.p);
            const InsertReport rep = insert(result.space, disc.x_gram,
                                            {{t, BasisRole::Supremizer}}, WhichSpace::X,
                                            generation);
            it.added_sup = rep.accepted;
            rejected += rep.rejected;
        } else {
            double beta_n = rb_infsup(result.space, b_star);
            if (beta_n < beta_floor) {
                if (config.variant == GreedyVariant::AdaptiveSupremizer) {
                    const Vector t = supremizer(x_solver, b_star, truth.p);
                    const InsertReport rep = insert(result.space, disc.x_gram,
                                                    {{t, BasisRole::Supremizer}}, WhichSpace::X,
                                                    generation);
                    it.added_sup = rep.accepted;
                    rejected += rep.rejected;
                } else {
                    // next-largest indicator among unmasked points
                    int second = -1;
                    double best = -1.0;
                    for (int i = 0; i < n_train; ++i) {
                        if (i == star || masked[static_cast<std::size_t>(i)]) continue;
                        if (indicators[static_cast<std::size_t>(i)] > best) {
                            best = indicators[static_cast<std::size_t>(i)];
                            second = i;
                        }
                    }
                    if (second >= 0) {
                        const TruthSolution extra =
                            truth_solve(disc, config.train_set[static_cast<std::size_t>(second)]);
                        const InsertReport rep =
                            insert(result.space, disc.x_gram, {{extra.u, BasisRole::ExtraSnapshot}},
                                   WhichSpace::X, generation);
                        it.added_extra = rep.accepted;
                        rejected += rep.rejected;
                    } else {
                        // degenerate train set: fall back to the supremizer
                        const Vector t = supremizer(x_solver, b_star, truth.p);
                        const InsertReport rep =
                            insert(result.space, disc.x_gram, {{t, BasisRole::Supremizer}},
                                   WhichSpace::X, generation);
                        it.added_sup = rep.accepted;
                        rejected += rep.rejected;
                    }
                }
            }
        }

        // duplicate selections are allowed only after a partial rejection
        if (rejected == 0) masked[static_cast<std::size_t>(star)] = true;

        builder.sync(result.space);
        it.beta_n = rb_infsup(result.space, b_star);
        it.t_sweep_ms = t_sweep;
        it.t_enrich_ms = ms_since(t_enrich0);
        if (it.added_u + it.added_p + it.added_sup + it.added_extra == 0)
            masked[static_cast<std::size_t>(star)] = true; // nothing new: avoid livelock
        result.trace.iterations.push_back(std::move(it));
    }

    result.model = builder.model();

    // Final sweep over the full train set (masked points included) so the
    // reported value matches an independent re-evaluation of the indicator.
    double final_max = 0.0;
    if (result.space.n_z() > 0) {
        for (const Vector& mu : config.train_set)
            final_max = std::max(final_max, indicator_at(result.model, mu, cache.at(mu)));
    } else {
        final_max = inf;
    }
    result.trace.final_max_indicator = final_max;
    result.trace.converged = hit_tolerance && final_max <= config.tolerance;
    return result;
}

} // namespace rbs
