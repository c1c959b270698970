#pragma once

// Built-in benchmark: P2-P1 Taylor-Hood discretization of Stokes flow in a
// channel with a parametrized rectangular obstacle on the bottom wall. The
// channel is split into axis-aligned subdomains around the obstacle so the
// geometric parametrization is piecewise affine and all forms admit exact
// affine decompositions with rational theta coefficients.

#include "rbsaddle/affine.hpp"
#include "rbsaddle/types.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace rbs {

struct GeometryConfig {
    double channel_length = 5.0;
    double channel_height = 1.0;
    double obstacle_center_x = 1.5;
    double fixed_left = 0.5;  // x below which the mesh never moves
    double fixed_right = 2.5; // x above which the mesh never moves
    double inflow_peak = 1.0; // profile u_x = 4*peak*y*(1-y)/H^2

    // mu = (obstacle half-width, obstacle height); reference = domain center
    Vector mu_lower = (Vector(2) << 0.2, 0.2).finished();
    Vector mu_upper = (Vector(2) << 0.6, 0.6).finished();

    int refinement = 0;
    // base subdivisions per x-band (inflow, left, obstacle, right, outflow)
    // and per y-band (below obstacle top, above); doubled per refinement level
    std::array<int, 5> nx_base = {5, 6, 8, 6, 24};
    std::array<int, 2> ny_base = {4, 6};

    ParameterDomain domain() const { return ParameterDomain{mu_lower, mu_upper}; }
    Vector reference_mu() const { return domain().center(); }
};

enum BoundaryTag : int { kInflow = 0, kOutflow = 1, kWall = 2, kObstacle = 3 };

struct Mesh {
    std::vector<Eigen::Vector2d> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> subdomain; // fluid cell id per triangle
    struct BoundaryEdge {
        int v0, v1;
        int tag;
    };
    std::vector<BoundaryEdge> boundary;
    // per subdomain: (x-band, y-band) in the reference band grid
    std::vector<std::array<int, 2>> subdomain_bands;
};

struct TaylorHoodSpace {
    std::vector<Eigen::Vector2d> p2_coords;      // vertices first, then edge nodes
    std::vector<std::array<int, 6>> tri_p2;      // velocity node ids per triangle
    std::vector<bool> dirichlet;                 // per P2 node (both components)
    std::vector<bool> on_inflow;                 // per P2 node
    std::vector<Index> free_of_node;             // P2 node -> free node id or -1
    std::vector<Index> node_of_free;             // inverse map
    Index n_p2_nodes = 0;
    Index n_free_vel = 0;  // N_X^truth (free velocity dofs, 2 per free node)
    Index n_pressure = 0;  // N_Y^truth (all vertices)
    Index n_total = 0;     // N_X + N_Y
};

struct TruthDiscretization {
    ParameterDomain domain;
    AffineMatrix a; // symmetric terms on free velocity dofs
    AffineMatrix b; // pressure x free velocity dofs
    AffineVector f; // -a(lift, .) per a-term
    AffineVector g; // -b(lift, .) per b-term
    SparseMatrix x_gram; // H1 vector inner product, free dofs
    SparseMatrix y_gram; // L2 pressure mass
    Vector lift;         // full-length velocity coefficients (2 * n_p2_nodes)
};

struct TruthSolution {
    Vector mu;
    Vector u; // free velocity coefficients (homogeneous part)
    Vector p;
    Vector u_full; // lift + scattered free part, full-length
    double residual_norm = 0.0;
};

std::pair<Mesh, TaylorHoodSpace> build_benchmark(const GeometryConfig& config);

TruthDiscretization assemble_truth(const Mesh& mesh, const TaylorHoodSpace& space,
                                   const GeometryConfig& config);

TruthSolution truth_solve(const TruthDiscretization& disc, const Mesh& mesh,
                          const TaylorHoodSpace& space, const Vector& mu);

// Same, without the full-length expansion (u_full left empty).
TruthSolution truth_solve(const TruthDiscretization& disc, const Vector& mu);

// Expand free velocity coefficients to full length and add the lift.
Vector expand_velocity(const TruthDiscretization& disc, const TaylorHoodSpace& space,
                       const Vector& u_free);

// Gather a full-length velocity vector onto the free dofs.
Vector restrict_free(const Vector& full, const TaylorHoodSpace& space);

// Piecewise-affine geometry map applied to the reference mesh vertices.
Mesh deform_mesh(const Mesh& mesh, const GeometryConfig& config, const Vector& mu);

// Direct assembly of A = int grad(v):grad(w), B = -int q div(v) on the given
// mesh coordinates, over full velocity dofs. Serves as the test oracle for
// the affine decomposition route.
void assemble_plain(const Mesh& mesh, const TaylorHoodSpace& space, SparseMatrix& a_full,
                    SparseMatrix& b_full);

// Restrict full velocity-dof columns/rows to the free dofs.
SparseMatrix restrict_velocity_both(const SparseMatrix& full, const TaylorHoodSpace& space);
SparseMatrix restrict_velocity_cols(const SparseMatrix& full, const TaylorHoodSpace& space);

// Net outward flux of the velocity field through boundary edges with `tag`.
double boundary_flux(const Mesh& mesh, const TaylorHoodSpace& space, const Vector& u_full,
                     int tag);

void export_mesh(const Mesh& mesh, std::ostream& out);

} // namespace rbs
