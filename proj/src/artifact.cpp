#include "rbsaddle/artifact.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

namespace rbs {
namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(const void* data, std::size_t n_bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n_bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t hash_mesh(const Mesh& mesh) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& v : mesh.vertices) {
        const double xy[2] = {v.x(), v.y()};
        h = fnv1a(xy, sizeof xy, h);
    }
    for (const auto& t : mesh.triangles) h = fnv1a(t.data(), sizeof(int) * 3, h);
    return h;
}

namespace {

class PayloadWriter {
public:
    json put(const std::string& name, const double* data, Index rows, Index cols) {
        json entry;
        entry["name"] = name;
        entry["rows"] = rows;
        entry["cols"] = cols;
        entry["offset"] = buffer_.size();
        const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
        entry["checksum"] = fnv1a(data, count * sizeof(double));
        buffer_.insert(buffer_.end(), data, data + count);
        return entry;
    }

    json put(const std::string& name, const DenseMatrix& m) {
        // stored row-major for a layout-neutral file format
        DenseMatrix t = m.transpose();
        return put(name, t.data(), m.rows(), m.cols());
    }

    json put(const std::string& name, const Vector& v) { return put(name, v.data(), v.size(), 1); }

    const std::vector<double>& buffer() const { return buffer_; }

private:
    std::vector<double> buffer_;
};

class PayloadReader {
public:
    PayloadReader(std::vector<double> buffer, const json& arrays) : buffer_(std::move(buffer)) {
        for (const auto& entry : arrays) index_[entry.at("name").get<std::string>()] = entry;
    }

    DenseMatrix matrix(const std::string& name) const {
        const json& e = lookup(name);
        const Index rows = e.at("rows").get<Index>();
        const Index cols = e.at("cols").get<Index>();
        const std::size_t offset = e.at("offset").get<std::size_t>();
        const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
        if (offset + count > buffer_.size())
            throw Error("artifact payload truncated at array " + name);
        const double* p = buffer_.data() + offset;
        if (fnv1a(p, count * sizeof(double)) != e.at("checksum").get<std::uint64_t>())
            throw Error("artifact checksum mismatch for array " + name);
        DenseMatrix row_major(cols, rows);
        std::copy(p, p + count, row_major.data());
        return row_major.transpose();
    }

    Vector vector(const std::string& name) const {
        const DenseMatrix m = matrix(name);
        if (m.cols() != 1) throw Error("artifact array is not a vector: " + name);
        return m.col(0);
    }

private:
    const json& lookup(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw Error("artifact is missing array " + name);
        return it->second;
    }

    std::vector<double> buffer_;
    std::map<std::string, json> index_;
};

json geometry_to_json(const GeometryConfig& g) {
    json j;
    j["channel_length"] = g.channel_length;
    j["channel_height"] = g.channel_height;
    j["obstacle_center_x"] = g.obstacle_center_x;
    j["fixed_left"] = g.fixed_left;
    j["fixed_right"] = g.fixed_right;
    j["inflow_peak"] = g.inflow_peak;
    j["mu_lower"] = std::vector<double>(g.mu_lower.data(), g.mu_lower.data() + g.mu_lower.size());
    j["mu_upper"] = std::vector<double>(g.mu_upper.data(), g.mu_upper.data() + g.mu_upper.size());
    j["refinement"] = g.refinement;
    j["nx_base"] = g.nx_base;
    j["ny_base"] = g.ny_base;
    return j;
}

GeometryConfig geometry_from_json(const json& j) {
    GeometryConfig g;
    g.channel_length = j.at("channel_length").get<double>();
    g.channel_height = j.at("channel_height").get<double>();
    g.obstacle_center_x = j.at("obstacle_center_x").get<double>();
    g.fixed_left = j.at("fixed_left").get<double>();
    g.fixed_right = j.at("fixed_right").get<double>();
    g.inflow_peak = j.at("inflow_peak").get<double>();
    const auto lo = j.at("mu_lower").get<std::vector<double>>();
    const auto hi = j.at("mu_upper").get<std::vector<double>>();
    g.mu_lower = Eigen::Map<const Vector>(lo.data(), static_cast<Index>(lo.size()));
    g.mu_upper = Eigen::Map<const Vector>(hi.data(), static_cast<Index>(hi.size()));
    g.refinement = j.at("refinement").get<int>();
    g.nx_base = j.at("nx_base").get<std::array<int, 5>>();
    g.ny_base = j.at("ny_base").get<std::array<int, 2>>();
    return g;
}

std::vector<std::string> serialize_thetas(const std::vector<Theta>& thetas) {
    std::vector<std::string> out;
    out.reserve(thetas.size());
    for (const auto& t : thetas) out.push_back(t->serialize());
    return out;
}

std::vector<Theta> parse_thetas(const std::vector<std::string>& texts) {
    std::vector<Theta> out;
    out.reserve(texts.size());
    for (const auto& s : texts) out.push_back(ThetaExpr::parse(s));
    return out;
}

} // namespace

void save_artifact(const std::string& dir, const OfflineArtifact& artifact) {
    PayloadWriter payload;
    json arrays = json::array();

    const ReducedModel& m = artifact.model;
    for (std::size_t q = 0; q < m.a_blocks.size(); ++q)
        arrays.push_back(payload.put("model/a" + std::to_string(q), m.a_blocks[q]));
    for (std::size_t q = 0; q < m.b_blocks.size(); ++q)
        arrays.push_back(payload.put("model/b" + std::to_string(q), m.b_blocks[q]));
    for (std::size_t q = 0; q < m.f_blocks.size(); ++q)
        arrays.push_back(payload.put("model/f" + std::to_string(q), m.f_blocks[q]));
    for (std::size_t q = 0; q < m.g_blocks.size(); ++q)
        arrays.push_back(payload.put("model/g" + std::to_string(q), m.g_blocks[q]));
    arrays.push_back(payload.put("model/r1_ff", m.r1_ff));
    arrays.push_back(payload.put("model/r1_fa", m.r1_fa));
    arrays.push_back(payload.put("model/r1_fb", m.r1_fb));
    arrays.push_back(payload.put("model/r1_aa", m.r1_aa));
    arrays.push_back(payload.put("model/r1_ab", m.r1_ab));
    arrays.push_back(payload.put("model/r1_bb", m.r1_bb));
    arrays.push_back(payload.put("model/r2_gg", m.r2_gg));
    arrays.push_back(payload.put("model/r2_gb", m.r2_gb));
    arrays.push_back(payload.put("model/r2_bb", m.r2_bb));
    arrays.push_back(payload.put("model/r1_fac", m.r1_fac));
    arrays.push_back(payload.put("model/r2_fac", m.r2_fac));
    arrays.push_back(payload.put("space/zu", artifact.space.zu));
    arrays.push_back(payload.put("space/zp", artifact.space.zp));

    json manifest;
    manifest["format"] = kArtifactFormat;
    manifest["version"] = kArtifactVersion;
    manifest["geometry"] = geometry_to_json(artifact.geometry);
    manifest["mesh_hash"] = artifact.mesh_hash;
    manifest["endianness"] = "little";
    manifest["payload_file"] = "payload.bin";
    manifest["arrays"] = arrays;
    manifest["theta_a"] = serialize_thetas(m.theta_a);
    manifest["theta_b"] = serialize_thetas(m.theta_b);
    manifest["theta_f"] = serialize_thetas(m.theta_f);
    manifest["theta_g"] = serialize_thetas(m.theta_g);
    manifest["domain_lower"] =
        std::vector<double>(m.domain.lower.data(), m.domain.lower.data() + m.domain.lower.size());
    manifest["domain_upper"] =
        std::vector<double>(m.domain.upper.data(), m.domain.upper.data() + m.domain.upper.size());

    json gens = json::array();
    for (const auto& [nx, ny] : m.generations) gens.push_back({nx, ny});
    manifest["generations"] = gens;

    json roles_u = json::array(), roles_p = json::array();
    for (auto r : artifact.space.u_roles) roles_u.push_back(role_name(r));
    for (auto r : artifact.space.p_roles) roles_p.push_back(role_name(r));
    manifest["u_roles"] = roles_u;
    manifest["p_roles"] = roles_p;
    manifest["u_generation"] = artifact.space.u_generation;
    manifest["p_generation"] = artifact.space.p_generation;

    json consts = json::array();
    for (const auto& [mu, c] : artifact.constants_cache) {
        json e;
        e["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
        e["alpha_lb"] = c.alpha_lb;
        e["alpha_ub"] = c.alpha_ub;
        e["gamma_lb"] = c.gamma_lb;
        e["gamma_ub"] = c.gamma_ub;
        e["gamma_b_ub"] = c.gamma_b_ub;
        e["beta_br_lb"] = c.beta_br_lb;
        e["beta_br_ub"] = c.beta_br_ub;
        e["beta_ba_lb"] = c.beta_ba_lb;
        e["tilde_beta"] = c.tilde_beta;
        e["mode"] = c.mode == ConstantsMode::Exact ? "exact" : "surrogate";
        consts.push_back(e);
    }
    manifest["constants_cache"] = consts;

    const fs::path target(dir);
    const fs::path tmp = target.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
        std::ofstream out(tmp / "payload.bin", std::ios::binary);
        const auto& buf = payload.buffer();
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
        if (!out) throw Error("failed to write artifact payload");
    }
    {
        std::ofstream out(tmp / "manifest.json");
        out << manifest.dump(2) << "\n";
        if (!out) throw Error("failed to write artifact manifest");
    }
    fs::remove_all(target);
    fs::rename(tmp, target);
}

OfflineArtifact load_artifact(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream min(root / "manifest.json");
    if (!min) throw Error("artifact manifest not found in " + dir);
    json manifest;
    min >> manifest;
    if (manifest.at("format").get<std::string>() != kArtifactFormat)
        throw Error("unrecognized artifact format");
    if (manifest.at("version").get<int>() != kArtifactVersion)
        throw Error("unsupported artifact version");

    std::vector<double> buffer;
    {
        std::ifstream bin(root / manifest.at("payload_file").get<std::string>(),
                          std::ios::binary | std::ios::ate);
        if (!bin) throw Error("artifact payload not found in " + dir);
        const auto bytes = static_cast<std::size_t>(bin.tellg());
        if (bytes % sizeof(double) != 0) throw Error("artifact payload has invalid length");
        buffer.resize(bytes / sizeof(double));
        bin.seekg(0);
        bin.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(bytes));
        if (!bin) throw Error("failed to read artifact payload");
    }
    PayloadReader payload(std::move(buffer), manifest.at("arrays"));

    OfflineArtifact art;
    art.geometry = geometry_from_json(manifest.at("geometry"));
    art.mesh_hash = manifest.at("mesh_hash").get<std::uint64_t>();

    ReducedModel& m = art.model;
    const auto lo = manifest.at("domain_lower").get<std::vector<double>>();
    const auto hi = manifest.at("domain_upper").get<std::vector<double>>();
    m.domain.lower = Eigen::Map<const Vector>(lo.data(), static_cast<Index>(lo.size()));
    m.domain.upper = Eigen::Map<const Vector>(hi.data(), static_cast<Index>(hi.size()));
    m.theta_a = parse_thetas(manifest.at("theta_a").get<std::vector<std::string>>());
    m.theta_b = parse_thetas(manifest.at("theta_b").get<std::vector<std::string>>());
    m.theta_f = parse_thetas(manifest.at("theta_f").get<std::vector<std::string>>());
    m.theta_g = parse_thetas(manifest.at("theta_g").get<std::vector<std::string>>());
    for (std::size_t q = 0; q < m.theta_a.size(); ++q)
        m.a_blocks.push_back(payload.matrix("model/a" + std::to_string(q)));
    for (std::size_t q = 0; q < m.theta_b.size(); ++q)
        m.b_blocks.push_back(payload.matrix("model/b" + std::to_string(q)));
    for (std::size_t q = 0; q < m.theta_f.size(); ++q)
        m.f_blocks.push_back(payload.vector("model/f" + std::to_string(q)));
    for (std::size_t q = 0; q < m.theta_g.size(); ++q)
        m.g_blocks.push_back(payload.vector("model/g" + std::to_string(q)));
    m.r1_ff = payload.matrix("model/r1_ff");
    m.r1_fa = payload.matrix("model/r1_fa");
    m.r1_fb = payload.matrix("model/r1_fb");
    m.r1_aa = payload.matrix("model/r1_aa");
    m.r1_ab = payload.matrix("model/r1_ab");
    m.r1_bb = payload.matrix("model/r1_bb");
    m.r2_gg = payload.matrix("model/r2_gg");
    m.r2_gb = payload.matrix("model/r2_gb");
    m.r2_bb = payload.matrix("model/r2_bb");
    m.r1_fac = payload.matrix("model/r1_fac");
    m.r2_fac = payload.matrix("model/r2_fac");
    for (const auto& g : manifest.at("generations"))
        m.generations.emplace_back(g.at(0).get<Index>(), g.at(1).get<Index>());

    art.space.zu = payload.matrix("space/zu");
    art.space.zp = payload.matrix("space/zp");
    for (const auto& r : manifest.at("u_roles"))
        art.space.u_roles.push_back(role_from_name(r.get<std::string>()));
    for (const auto& r : manifest.at("p_roles"))
        art.space.p_roles.push_back(role_from_name(r.get<std::string>()));
    art.space.u_generation = manifest.at("u_generation").get<std::vector<int>>();
    art.space.p_generation = manifest.at("p_generation").get<std::vector<int>>();

    for (const auto& e : manifest.at("constants_cache")) {
        const auto mu = e.at("mu").get<std::vector<double>>();
        ConstantBounds c;
        c.alpha_lb = e.at("alpha_lb").get<double>();
        c.alpha_ub = e.at("alpha_ub").get<double>();
        c.gamma_lb = e.at("gamma_lb").get<double>();
        c.gamma_ub = e.at("gamma_ub").get<double>();
        c.gamma_b_ub = e.at("gamma_b_ub").get<double>();
        c.beta_br_lb = e.at("beta_br_lb").get<double>();
        c.beta_br_ub = e.at("beta_br_ub").get<double>();
        c.beta_ba_lb = e.at("beta_ba_lb").get<double>();
        c.tilde_beta = e.at("tilde_beta").get<double>();
        c.mode = e.at("mode").get<std::string>() == "exact" ? ConstantsMode::Exact
                                                            : ConstantsMode::Surrogate;
        art.constants_cache.emplace_back(
            Eigen::Map<const Vector>(mu.data(), static_cast<Index>(mu.size())), c);
    }
    return art;
}

} // namespace rbs
