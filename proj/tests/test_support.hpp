#pragma once

// Shared fixtures for the test suites: a coarse instance of the benchmark
// (small enough for dense oracles) built once per binary.

#include "rbsaddle/stokes.hpp"

#include <random>

namespace testsupport {

inline rbs::GeometryConfig tiny_geometry() {
    rbs::GeometryConfig g;
    g.nx_base = {2, 3, 4, 3, 8};
    g.ny_base = {2, 3};
    return g;
}

struct Bench {
    rbs::GeometryConfig geometry;
    rbs::Mesh mesh;
    rbs::TaylorHoodSpace space;
    rbs::TruthDiscretization disc;
};

inline const Bench& tiny_bench() {
    static const Bench bench = [] {
        Bench b;
        b.geometry = tiny_geometry();
        auto [mesh, space] = rbs::build_benchmark(b.geometry);
        b.mesh = std::move(mesh);
        b.space = std::move(space);
        b.disc = rbs::assemble_truth(b.mesh, b.space, b.geometry);
        return b;
    }();
    return bench;
}

inline std::vector<rbs::Vector> random_mus(int count, unsigned seed) {
    const rbs::ParameterDomain domain = tiny_geometry().domain();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<rbs::Vector> out;
    for (int i = 0; i < count; ++i) {
        rbs::Vector mu(2);
        for (int k = 0; k < 2; ++k)
            mu[k] = domain.lower[k] + (domain.upper[k] - domain.lower[k]) * dist(gen);
        out.push_back(mu);
    }
    return out;
}

} // namespace testsupport
