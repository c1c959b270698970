#include "rbsaddle/stokes.hpp"

#include "rbsaddle/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <utility>

namespace rbs {

namespace {

// 7-point degree-5 rule on the reference triangle; weights sum to 1.
struct QuadPoint {
    double l0, l1, l2, w;
};

const std::array<QuadPoint, 7> kQuad = [] {
    const double w0 = 0.225;
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    return std::array<QuadPoint, 7>{{{1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
                                     {a1, b1, b1, w1},
                                     {b1, a1, b1, w1},
                                     {b1, b1, a1, w1},
                                     {a2, b2, b2, w2},
                                     {b2, a2, b2, w2},
                                     {b2, b2, a2, w2}}};
}();

void p2_shape(double l0, double l1, double l2, std::array<double, 6>& val,
              std::array<Eigen::Vector2d, 6>& ref_grad) {
    const Eigen::Vector2d d0(-1.0, -1.0), d1(1.0, 0.0), d2(0.0, 1.0);
    val = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
           4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
    ref_grad[0] = (4 * l0 - 1) * d0;
    ref_grad[1] = (4 * l1 - 1) * d1;
    ref_grad[2] = (4 * l2 - 1) * d2;
    ref_grad[3] = 4.0 * (l0 * d1 + l1 * d0);
    ref_grad[4] = 4.0 * (l1 * d2 + l2 * d1);
    ref_grad[5] = 4.0 * (l2 * d0 + l0 * d2);
}

std::array<double, 6> x_band_edges(const GeometryConfig& c, double w) {
    return {0.0, c.fixed_left, c.obstacle_center_x - w, c.obstacle_center_x + w,
            c.fixed_right, c.channel_length};
}

std::array<double, 3> y_band_edges(const GeometryConfig& c, double h) {
    return {0.0, h, c.channel_height};
}

void validate_geometry(const GeometryConfig& c) {
    const ParameterDomain d = c.domain();
    if (d.dim() != 2 || (d.lower.array() >= d.upper.array()).any())
        throw InvalidGeometry("parameter box must satisfy lower < upper componentwise");
    if (d.lower.minCoeff() <= 0.0)
        throw InvalidGeometry("obstacle dimensions must stay positive");
    if (c.mu_upper[1] >= c.channel_height)
        throw InvalidGeometry("obstacle may reach the channel top wall");
    if (c.fixed_left <= 0.0 || c.fixed_right >= c.channel_length)
        throw InvalidGeometry("fixed bands must lie strictly inside the channel");
    if (c.obstacle_center_x - c.mu_upper[0] <= c.fixed_left ||
        c.obstacle_center_x + c.mu_upper[0] >= c.fixed_right)
        throw InvalidGeometry("obstacle may cross a fixed mesh band");
    for (int n : c.nx_base)
        if (n < 1) throw InvalidGeometry("x-band subdivision must be >= 1");
    for (int n : c.ny_base)
        if (n < 1) throw InvalidGeometry("y-band subdivision must be >= 1");
    if (c.refinement < 0) throw InvalidGeometry("refinement must be >= 0");
}

Theta sx_theta(const GeometryConfig& c, int xband) {
    const Vector ref = c.reference_mu();
    const double cx = c.obstacle_center_x;
    switch (xband) {
    case 0:
    case 4: return ThetaExpr::constant(1.0);
    case 1:
        // (cx - fixed_left - mu0) / (cx - fixed_left - ref0)
        return ThetaExpr::div(
            ThetaExpr::sub(ThetaExpr::constant(cx - c.fixed_left), ThetaExpr::coord(0)),
            ThetaExpr::constant(cx - c.fixed_left - ref[0]));
    case 2: return ThetaExpr::div(ThetaExpr::coord(0), ThetaExpr::constant(ref[0]));
    case 3:
        return ThetaExpr::div(
            ThetaExpr::sub(ThetaExpr::constant(c.fixed_right - cx), ThetaExpr::coord(0)),
            ThetaExpr::constant(c.fixed_right - cx - ref[0]));
    default: throw Error("bad x-band");
    }
}

Theta sy_theta(const GeometryConfig& c, int yband) {
    const Vector ref = c.reference_mu();
    if (yband == 0) return ThetaExpr::div(ThetaExpr::coord(1), ThetaExpr::constant(ref[1]));
    return ThetaExpr::div(
        ThetaExpr::sub(ThetaExpr::constant(c.channel_height), ThetaExpr::coord(1)),
        ThetaExpr::constant(c.channel_height - ref[1]));
}

} // namespace

std::pair<Mesh, TaylorHoodSpace> build_benchmark(const GeometryConfig& config) {
    validate_geometry(config);
    const Vector ref = config.reference_mu();
    const auto xb = x_band_edges(config, ref[0]);
    const auto yb = y_band_edges(config, ref[1]);

    const int scale = 1 << config.refinement;
    std::array<int, 5> nx;
    std::array<int, 2> ny;
    for (size_t i = 0; i < 5; ++i) nx[i] = config.nx_base[i] * scale;
    for (size_t i = 0; i < 2; ++i) ny[i] = config.ny_base[i] * scale;

    // global tensor grid lines
    std::vector<double> xs, ys;
    std::vector<int> xband_of_cell, yband_of_cell;
    for (int b = 0; b < 5; ++b)
        for (int k = 0; k < nx[b]; ++k) {
            xs.push_back(xb[b] + (xb[b + 1] - xb[b]) * k / nx[b]);
            xband_of_cell.push_back(b);
        }
    xs.push_back(xb[5]);
    for (int b = 0; b < 2; ++b)
        for (int k = 0; k < ny[b]; ++k) {
            ys.push_back(yb[b] + (yb[b + 1] - yb[b]) * k / ny[b]);
            yband_of_cell.push_back(b);
        }
    ys.push_back(yb[2]);

    const int ncx = static_cast<int>(xband_of_cell.size());
    const int ncy = static_cast<int>(yband_of_cell.size());
    const int nvx = ncx + 1;

    Mesh mesh;
    // fluid subdomain ids over (xband, yband), skipping the obstacle cell (2,0)
    std::map<std::pair<int, int>, int> sub_of_bands;
    for (int jb = 0; jb < 2; ++jb)
        for (int ib = 0; ib < 5; ++ib) {
            if (ib == 2 && jb == 0) continue;
            const int id = static_cast<int>(mesh.subdomain_bands.size());
            sub_of_bands[{ib, jb}] = id;
            mesh.subdomain_bands.push_back({ib, jb});
        }

    std::vector<int> vertex_id(static_cast<size_t>(nvx) * (ncy + 1), -1);
    auto grid_vertex = [&](int i, int j) -> int {
        int& id = vertex_id[static_cast<size_t>(j) * nvx + i];
        if (id < 0) {
            id = static_cast<int>(mesh.vertices.size());
            mesh.vertices.emplace_back(xs[static_cast<size_t>(i)], ys[static_cast<size_t>(j)]);
        }
        return id;
    };

    for (int j = 0; j < ncy; ++j)
        for (int i = 0; i < ncx; ++i) {
            const int ib = xband_of_cell[static_cast<size_t>(i)];
            const int jb = yband_of_cell[static_cast<size_t>(j)];
            if (ib == 2 && jb == 0) continue; // obstacle hole
            const int sub = sub_of_bands.at({ib, jb});
            const int v00 = grid_vertex(i, j);
            const int v10 = grid_vertex(i + 1, j);
            const int v01 = grid_vertex(i, j + 1);
            const int v11 = grid_vertex(i + 1, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.subdomain.push_back(sub);
            mesh.triangles.push_back({v00, v11, v01});
            mesh.subdomain.push_back(sub);
        }

    // boundary edges: edges referenced by exactly one triangle
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = t[static_cast<size_t>(e)];
            const int b = t[static_cast<size_t>((e + 1) % 3)];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    const double tol = 1e-12;
    for (const auto& [edge, count] : edge_count) {
        if (count != 1) continue;
        const Eigen::Vector2d mid =
            0.5 * (mesh.vertices[static_cast<size_t>(edge.first)] +
                   mesh.vertices[static_cast<size_t>(edge.second)]);
        int tag;
        if (mid.x() < tol)
            tag = kInflow;
        else if (mid.x() > config.channel_length - tol)
            tag = kOutflow;
        else if (mid.y() < tol || mid.y() > config.channel_height - tol)
            tag = kWall;
        else
            tag = kObstacle;
        mesh.boundary.push_back({edge.first, edge.second, tag});
    }

    // Taylor-Hood space: P2 nodes = vertices plus one node per edge
    TaylorHoodSpace space;
    const Index nv = static_cast<Index>(mesh.vertices.size());
    std::map<std::pair<int, int>, Index> edge_node;
    space.p2_coords = mesh.vertices;
    space.tri_p2.resize(mesh.triangles.size());
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const int a = tri[static_cast<size_t>(e)];
            const int b = tri[static_cast<size_t>((e + 1) % 3)];
            const auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = edge_node.find(key);
            if (it == edge_node.end()) {
                const Index id = static_cast<Index>(space.p2_coords.size());
                space.p2_coords.push_back(0.5 * (mesh.vertices[static_cast<size_t>(a)] +
                                                 mesh.vertices[static_cast<size_t>(b)]));
                it = edge_node.emplace(key, id).first;
            }
            space.tri_p2[t][static_cast<size_t>(e)] = static_cast<int>(tri[static_cast<size_t>(e)]);
            space.tri_p2[t][static_cast<size_t>(3 + e)] = static_cast<int>(it->second);
        }
    }
    space.n_p2_nodes = static_cast<Index>(space.p2_coords.size());
    space.dirichlet.assign(static_cast<size_t>(space.n_p2_nodes), false);
    space.on_inflow.assign(static_cast<size_t>(space.n_p2_nodes), false);

    for (const auto& be : mesh.boundary) {
        if (be.tag == kOutflow) continue;
        const auto key = std::make_pair(std::min(be.v0, be.v1), std::max(be.v0, be.v1));
        const Index mids = edge_node.at(key);
        for (Index node : {static_cast<Index>(be.v0), static_cast<Index>(be.v1), mids}) {
            space.dirichlet[static_cast<size_t>(node)] = true;
            if (be.tag == kInflow) space.on_inflow[static_cast<size_t>(node)] = true;
        }
    }
    // inflow corners sit on walls too; wall constraint dominates (profile is
    // zero there anyway)

    space.free_of_node.assign(static_cast<size_t>(space.n_p2_nodes), -1);
    for (Index n = 0; n < space.n_p2_nodes; ++n) {
        if (!space.dirichlet[static_cast<size_t>(n)]) {
            space.free_of_node[static_cast<size_t>(n)] =
                static_cast<Index>(space.node_of_free.size());
            space.node_of_free.push_back(n);
        }
    }
    space.n_free_vel = 2 * static_cast<Index>(space.node_of_free.size());
    space.n_pressure = nv;
    space.n_total = space.n_free_vel + space.n_pressure;
    return {std::move(mesh), space};
}

namespace {

struct ElementGeometry {
    Eigen::Matrix2d jac, inv_jt;
    double det;
};

ElementGeometry element_geometry(const Mesh& mesh, const std::array<int, 3>& tri) {
    const Eigen::Vector2d& a = mesh.vertices[static_cast<size_t>(tri[0])];
    const Eigen::Vector2d& b = mesh.vertices[static_cast<size_t>(tri[1])];
    const Eigen::Vector2d& c = mesh.vertices[static_cast<size_t>(tri[2])];
    ElementGeometry g;
    g.jac.col(0) = b - a;
    g.jac.col(1) = c - a;
    g.det = g.jac.determinant();
    g.inv_jt = g.jac.inverse().transpose();
    return g;
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& trips) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

} // namespace

TruthDiscretization assemble_truth(const Mesh& mesh, const TaylorHoodSpace& space,
                                   const GeometryConfig& config) {
    TruthDiscretization disc;
    disc.domain = config.domain();
    const Index n_full = 2 * space.n_p2_nodes;
    const Index n_p = space.n_pressure;

    // merge subdomains with identical scale factors into theta groups
    std::vector<int> group_of_sub(mesh.subdomain_bands.size());
    std::vector<std::pair<Theta, Theta>> group_scales; // (sx, sy)
    {
        std::map<std::pair<std::string, std::string>, int> seen;
        for (size_t s = 0; s < mesh.subdomain_bands.size(); ++s) {
            Theta sx = sx_theta(config, mesh.subdomain_bands[s][0]);
            Theta sy = sy_theta(config, mesh.subdomain_bands[s][1]);
            const auto key = std::make_pair(sx->serialize(), sy->serialize());
            auto it = seen.find(key);
            if (it == seen.end()) {
                it = seen.emplace(key, static_cast<int>(group_scales.size())).first;
                group_scales.emplace_back(sx, sy);
            }
            group_of_sub[s] = it->second;
        }
    }
    const size_t ngroups = group_scales.size();

    std::vector<std::vector<Triplet>> axx(ngroups), ayy(ngroups), bx(ngroups), by(ngroups);
    std::vector<Triplet> gram_x, gram_y;

    std::array<double, 6> val{};
    std::array<Eigen::Vector2d, 6> ref_grad{};
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& nodes = space.tri_p2[t];
        const int g = group_of_sub[static_cast<size_t>(mesh.subdomain[t])];
        const ElementGeometry geo = element_geometry(mesh, tri);

        Eigen::Matrix<double, 6, 6> loc_axx = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 6> loc_ayy = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 6> loc_mass = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 3, 6> loc_bx = Eigen::Matrix<double, 3, 6>::Zero();
        Eigen::Matrix<double, 3, 6> loc_by = Eigen::Matrix<double, 3, 6>::Zero();
        Eigen::Matrix<double, 3, 3> loc_my = Eigen::Matrix<double, 3, 3>::Zero();

        for (const QuadPoint& qp : kQuad) {
            p2_shape(qp.l0, qp.l1, qp.l2, val, ref_grad);
            const double coef = qp.w * geo.det * 0.5;
            std::array<Eigen::Vector2d, 6> grad;
            for (int i = 0; i < 6; ++i) grad[static_cast<size_t>(i)] = geo.inv_jt * ref_grad[static_cast<size_t>(i)];
            const double l[3] = {qp.l0, qp.l1, qp.l2};
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    loc_axx(i, j) += coef * grad[static_cast<size_t>(i)].x() * grad[static_cast<size_t>(j)].x();
                    loc_ayy(i, j) += coef * grad[static_cast<size_t>(i)].y() * grad[static_cast<size_t>(j)].y();
                    loc_mass(i, j) += coef * val[static_cast<size_t>(i)] * val[static_cast<size_t>(j)];
                }
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < 6; ++i) {
                    loc_bx(k, i) -= coef * l[k] * grad[static_cast<size_t>(i)].x();
                    loc_by(k, i) -= coef * l[k] * grad[static_cast<size_t>(i)].y();
                }
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m) loc_my(k, m) += coef * l[k] * l[m];
        }

        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                for (int comp = 0; comp < 2; ++comp) {
                    const Index r = 2 * nodes[static_cast<size_t>(i)] + comp;
                    const Index cidx = 2 * nodes[static_cast<size_t>(j)] + comp;
                    axx[static_cast<size_t>(g)].emplace_back(r, cidx, loc_axx(i, j));
                    ayy[static_cast<size_t>(g)].emplace_back(r, cidx, loc_ayy(i, j));
                    gram_x.emplace_back(r, cidx, loc_axx(i, j) + loc_ayy(i, j) + loc_mass(i, j));
                }
            }
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 6; ++i) {
                bx[static_cast<size_t>(g)].emplace_back(tri[static_cast<size_t>(k)],
                                                        2 * nodes[static_cast<size_t>(i)] + 0,
                                                        loc_bx(k, i));
                by[static_cast<size_t>(g)].emplace_back(tri[static_cast<size_t>(k)],
                                                        2 * nodes[static_cast<size_t>(i)] + 1,
                                                        loc_by(k, i));
            }
        for (int k = 0; k < 3; ++k)
            for (int m = 0; m < 3; ++m)
                gram_y.emplace_back(tri[static_cast<size_t>(k)], tri[static_cast<size_t>(m)],
                                    loc_my(k, m));
    }

    // Dirichlet lifting: inflow parabolic profile, zero elsewhere
    disc.lift = Vector::Zero(n_full);
    const double h = config.channel_height;
    for (Index n = 0; n < space.n_p2_nodes; ++n) {
        if (!space.on_inflow[static_cast<size_t>(n)]) continue;
        const double y = space.p2_coords[static_cast<size_t>(n)].y();
        disc.lift[2 * n] = config.inflow_peak * 4.0 * y * (h - y) / (h * h);
    }

    for (size_t g = 0; g < ngroups; ++g) {
        const auto& [sx, sy] = group_scales[g];
        const SparseMatrix axx_full = from_triplets(n_full, n_full, axx[g]);
        const SparseMatrix ayy_full = from_triplets(n_full, n_full, ayy[g]);
        const SparseMatrix bx_full = from_triplets(n_p, n_full, bx[g]);
        const SparseMatrix by_full = from_triplets(n_p, n_full, by[g]);

        disc.a.thetas.push_back(ThetaExpr::div(sy, sx));
        disc.a.terms.push_back(restrict_velocity_both(axx_full, space));
        disc.a.thetas.push_back(ThetaExpr::div(sx, sy));
        disc.a.terms.push_back(restrict_velocity_both(ayy_full, space));

        disc.b.thetas.push_back(sy);
        disc.b.terms.push_back(restrict_velocity_cols(bx_full, space));
        disc.b.thetas.push_back(sx);
        disc.b.terms.push_back(restrict_velocity_cols(by_full, space));

        // lifting contributions; zero terms dropped
        const Vector f_xx = restrict_free(Vector(-(axx_full * disc.lift)), space);
        const Vector f_yy = restrict_free(Vector(-(ayy_full * disc.lift)), space);
        if (f_xx.norm() > 0.0) {
            disc.f.thetas.push_back(ThetaExpr::div(sy, sx));
            disc.f.terms.push_back(f_xx);
        }
        if (f_yy.norm() > 0.0) {
            disc.f.thetas.push_back(ThetaExpr::div(sx, sy));
            disc.f.terms.push_back(f_yy);
        }
        const Vector g_x = -(bx_full * disc.lift);
        const Vector g_y = -(by_full * disc.lift);
        if (g_x.norm() > 0.0) {
            disc.g.thetas.push_back(sy);
            disc.g.terms.push_back(g_x);
        }
        if (g_y.norm() > 0.0) {
            disc.g.thetas.push_back(sx);
            disc.g.terms.push_back(g_y);
        }
    }

    disc.x_gram = restrict_velocity_both(from_triplets(n_full, n_full, gram_x), space);
    disc.y_gram = from_triplets(n_p, n_p, gram_y);
    return disc;
}

Vector restrict_free(const Vector& full, const TaylorHoodSpace& space) {
    Vector out(space.n_free_vel);
    for (size_t fn = 0; fn < space.node_of_free.size(); ++fn) {
        const Index node = space.node_of_free[fn];
        out[2 * static_cast<Index>(fn)] = full[2 * node];
        out[2 * static_cast<Index>(fn) + 1] = full[2 * node + 1];
    }
    return out;
}

namespace {

Index free_dof_of_full(const TaylorHoodSpace& space, Index full_dof) {
    const Index node = full_dof / 2;
    const Index fn = space.free_of_node[static_cast<size_t>(node)];
    if (fn < 0) return -1;
    return 2 * fn + (full_dof % 2);
}

} // namespace

SparseMatrix restrict_velocity_both(const SparseMatrix& full, const TaylorHoodSpace& space) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(full.nonZeros()));
    for (int k = 0; k < full.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(full, k); it; ++it) {
            const Index r = free_dof_of_full(space, it.row());
            const Index c = free_dof_of_full(space, it.col());
            if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
        }
    return from_triplets(space.n_free_vel, space.n_free_vel, trips);
}

SparseMatrix restrict_velocity_cols(const SparseMatrix& full, const TaylorHoodSpace& space) {
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(full.nonZeros()));
    for (int k = 0; k < full.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(full, k); it; ++it) {
            const Index c = free_dof_of_full(space, it.col());
            if (c >= 0) trips.emplace_back(it.row(), c, it.value());
        }
    return from_triplets(full.rows(), space.n_free_vel, trips);
}

Vector expand_velocity(const TruthDiscretization& disc, const TaylorHoodSpace& space,
                       const Vector& u_free) {
    Vector full = disc.lift;
    for (size_t fn = 0; fn < space.node_of_free.size(); ++fn) {
        const Index node = space.node_of_free[fn];
        full[2 * node] += u_free[2 * static_cast<Index>(fn)];
        full[2 * node + 1] += u_free[2 * static_cast<Index>(fn) + 1];
    }
    return full;
}

TruthSolution truth_solve(const TruthDiscretization& disc, const Mesh& mesh,
                          const TaylorHoodSpace& space, const Vector& mu) {
    (void)mesh;
    TruthSolution sol = truth_solve(disc, mu);
    sol.u_full = expand_velocity(disc, space, sol.u);
    return sol;
}

TruthSolution truth_solve(const TruthDiscretization& disc, const Vector& mu) {
    const SparseMatrix a = assemble_at(disc.a, disc.domain, mu);
    const SparseMatrix b = assemble_at(disc.b, disc.domain, mu);
    const Vector f = assemble_at(disc.f, disc.domain, mu);
    const Vector g = assemble_at(disc.g, disc.domain, mu);
    auto [u, p] = solve_saddle(a, b, f, g);
    TruthSolution sol;
    sol.mu = mu;
    sol.u = std::move(u);
    sol.p = std::move(p);
    const double rhs = std::sqrt(f.squaredNorm() + g.squaredNorm());
    const Vector ru = a * sol.u + SparseMatrix(b.transpose()) * sol.p - f;
    const Vector rp = b * sol.u - g;
    sol.residual_norm = rhs > 0 ? std::sqrt(ru.squaredNorm() + rp.squaredNorm()) / rhs : 0.0;
    return sol;
}

Mesh deform_mesh(const Mesh& mesh, const GeometryConfig& config, const Vector& mu) {
    config.domain().require(mu);
    const Vector ref = config.reference_mu();
    const auto xr = x_band_edges(config, ref[0]);
    const auto yr = y_band_edges(config, ref[1]);
    const auto xm = x_band_edges(config, mu[0]);
    const auto ym = y_band_edges(config, mu[1]);

    auto map1d = [](double v, const auto& from, const auto& to) {
        const size_t n = from.size();
        for (size_t i = 0; i + 1 < n; ++i) {
            if (v <= from[i + 1] + 1e-12) {
                const double s = (v - from[i]) / (from[i + 1] - from[i]);
                return to[i] + s * (to[i + 1] - to[i]);
            }
        }
        return to[n - 1];
    };

    Mesh out = mesh;
    for (auto& v : out.vertices)
        v = Eigen::Vector2d(map1d(v.x(), xr, xm), map1d(v.y(), yr, ym));
    return out;
}

void assemble_plain(const Mesh& mesh, const TaylorHoodSpace& space, SparseMatrix& a_full,
                    SparseMatrix& b_full) {
    const Index n_full = 2 * space.n_p2_nodes;
    std::vector<Triplet> ta, tb;
    std::array<double, 6> val{};
    std::array<Eigen::Vector2d, 6> ref_grad{};
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& nodes = space.tri_p2[t];
        const ElementGeometry geo = element_geometry(mesh, tri);
        Eigen::Matrix<double, 6, 6> loc_a = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 3, 6> loc_bx = Eigen::Matrix<double, 3, 6>::Zero();
        Eigen::Matrix<double, 3, 6> loc_by = Eigen::Matrix<double, 3, 6>::Zero();
        for (const QuadPoint& qp : kQuad) {
            p2_shape(qp.l0, qp.l1, qp.l2, val, ref_grad);
            const double coef = qp.w * geo.det * 0.5;
            std::array<Eigen::Vector2d, 6> grad;
            for (int i = 0; i < 6; ++i) grad[static_cast<size_t>(i)] = geo.inv_jt * ref_grad[static_cast<size_t>(i)];
            const double l[3] = {qp.l0, qp.l1, qp.l2};
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    loc_a(i, j) += coef * grad[static_cast<size_t>(i)].dot(grad[static_cast<size_t>(j)]);
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < 6; ++i) {
                    loc_bx(k, i) -= coef * l[k] * grad[static_cast<size_t>(i)].x();
                    loc_by(k, i) -= coef * l[k] * grad[static_cast<size_t>(i)].y();
                }
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int comp = 0; comp < 2; ++comp)
                    ta.emplace_back(2 * nodes[static_cast<size_t>(i)] + comp,
                                    2 * nodes[static_cast<size_t>(j)] + comp, loc_a(i, j));
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 6; ++i) {
                tb.emplace_back(tri[static_cast<size_t>(k)], 2 * nodes[static_cast<size_t>(i)] + 0,
                                loc_bx(k, i));
                tb.emplace_back(tri[static_cast<size_t>(k)], 2 * nodes[static_cast<size_t>(i)] + 1,
                                loc_by(k, i));
            }
    }
    a_full = from_triplets(n_full, n_full, ta);
    b_full = from_triplets(space.n_pressure, n_full, tb);
}

double boundary_flux(const Mesh& mesh, const TaylorHoodSpace& space, const Vector& u_full,
                     int tag) {
    if (tag != kInflow && tag != kOutflow)
        throw Error("boundary_flux: only inflow/outflow edges supported");
    // rebuild the edge midpoint lookup from the triangle connectivity
    std::map<std::pair<int, int>, int> edge_mid;
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int e = 0; e < 3; ++e) {
            const int a = mesh.triangles[t][static_cast<size_t>(e)];
            const int b = mesh.triangles[t][static_cast<size_t>((e + 1) % 3)];
            edge_mid[{std::min(a, b), std::max(a, b)}] =
                space.tri_p2[t][static_cast<size_t>(3 + e)];
        }
    const double nx = (tag == kInflow) ? -1.0 : 1.0;
    double flux = 0.0;
    for (const auto& be : mesh.boundary) {
        if (be.tag != tag) continue;
        const int mid = edge_mid.at({std::min(be.v0, be.v1), std::max(be.v0, be.v1)});
        const double len = (mesh.vertices[static_cast<size_t>(be.v1)] -
                            mesh.vertices[static_cast<size_t>(be.v0)])
                               .norm();
        // Simpson, exact for the quadratic P2 trace
        const double ux0 = u_full[2 * be.v0];
        const double ux1 = u_full[2 * be.v1];
        const double uxm = u_full[2 * mid];
        flux += nx * len / 6.0 * (ux0 + 4.0 * uxm + ux1);
    }
    return flux;
}

void export_mesh(const Mesh& mesh, std::ostream& out) {
    out << "# rbsaddle mesh v1\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
    out << "triangles " << mesh.triangles.size() << "\n";
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        out << mesh.triangles[t][0] << " " << mesh.triangles[t][1] << " " << mesh.triangles[t][2]
            << " " << mesh.subdomain[t] << "\n";
    out << "boundary " << mesh.boundary.size() << "\n";
    for (const auto& be : mesh.boundary) out << be.v0 << " " << be.v1 << " " << be.tag << "\n";
}

} // namespace rbs
