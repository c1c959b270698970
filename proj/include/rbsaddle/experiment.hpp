#pragma once

// Experiment driver shared by the command-line tool and the acceptance
// suite: configuration parsing, the offline pipeline, online sweeps emitting
// the documented CSV files, and the artifact-level invariant verifier.

#include "rbsaddle/artifact.hpp"
#include "rbsaddle/bounds.hpp"
#include "rbsaddle/greedy.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rbs {

struct ExperimentConfig {
    GeometryConfig geometry;
    int variant = 1;              // greedy variant 1|2|3
    double tolerance = 1e-2;      // greedy stopping tolerance (relative)
    int n_max = 200;              // cap on N_Z
    double delta_beta_tol = 0.1;
    int train_size = 400;
    std::uint64_t train_seed = 1;
    int test_size = 25;
    std::uint64_t test_seed = 99;
    std::string greedy_constants = "surrogate"; // constants mode inside the greedy sweep
    int surrogate_grid = 3;                     // per-dimension training grid for the surrogate
    std::string out_dir = ".";
};

// Parses the versioned `key = value` config format ('#' starts a comment).
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
void validate(const ExperimentConfig& config);

struct OfflineRun {
    OfflineArtifact artifact;
    GreedyTrace trace;
    Index truth_dim = 0;
};

// Mesh + assembly + greedy + exact constants at the test points.
OfflineRun run_offline(const ExperimentConfig& config);

struct SweepFiles {
    std::string fig_u, fig_p, fig_z, table1, table2;
};

// Emits fig_u.csv, fig_p.csv, fig_z.csv, table1.csv, table2.csv in out_dir.
SweepFiles run_sweep(const OfflineArtifact& artifact, const ExperimentConfig& config);

struct VerifyReport {
    int checks = 0;
    int failures = 0;
    std::vector<std::string> messages;
    bool ok() const { return failures == 0; }
};

// Full invariant suite on a loaded artifact: rigor, ordering, sandwich,
// offline-online agreement, a priori estimates.
VerifyReport run_verify(const OfflineArtifact& artifact, const ExperimentConfig& config);

// Test parameters drawn independently of the train set.
std::vector<Vector> sample_test_set(const ParameterDomain& domain, int size, std::uint64_t seed);

} // namespace rbs
