#pragma once

// Offline artifact persistence: a versioned JSON manifest plus one binary
// payload of little-endian 64-bit floats. Checksums (FNV-1a) guard every
// named array; writes go to a temporary directory renamed into place so a
// partial artifact is never observable.

#include "rbsaddle/constants.hpp"
#include "rbsaddle/rb_online.hpp"
#include "rbsaddle/rb_space.hpp"
#include "rbsaddle/stokes.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rbs {

inline constexpr const char* kArtifactFormat = "rbsaddle-artifact";
inline constexpr int kArtifactVersion = 1;

struct OfflineArtifact {
    GeometryConfig geometry;
    RBSpace space;
    ReducedModel model;
    std::vector<std::pair<Vector, ConstantBounds>> constants_cache;
    std::uint64_t mesh_hash = 0;
};

std::uint64_t fnv1a(const void* data, std::size_t n_bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_mesh(const Mesh& mesh);

void save_artifact(const std::string& dir, const OfflineArtifact& artifact);
OfflineArtifact load_artifact(const std::string& dir);

} // namespace rbs
