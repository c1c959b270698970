// Command-line driver: offline build, online evaluation, sweep CSV emission,
// artifact verification, and mesh export.

#include <CLI11.hpp>

#include "rbsaddle/artifact.hpp"
#include "rbsaddle/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

rbs::Vector parse_mu(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    rbs::Vector mu(static_cast<rbs::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) mu[static_cast<rbs::Index>(i)] = vals[i];
    return mu;
}

int cmd_offline(const std::string& config_path, const std::string& out) {
    rbs::ExperimentConfig config =
        config_path.empty() ? rbs::ExperimentConfig{} : rbs::parse_config_file(config_path);
    if (!out.empty()) config.out_dir = out;
    const rbs::OfflineRun run = rbs::run_offline(config);
    const std::string artifact_dir = config.out_dir + "/artifact";
    rbs::save_artifact(artifact_dir, run.artifact);
    std::cout << "truth_dim=" << run.truth_dim << " n_x=" << run.artifact.space.n_x()
              << " n_y=" << run.artifact.space.n_y() << " n_z=" << run.artifact.space.n_z()
              << " iterations=" << run.trace.iterations.size()
              << " converged=" << (run.trace.converged ? 1 : 0)
              << " final_max_indicator=" << run.trace.final_max_indicator << '\n';
    std::cout << "artifact=" << artifact_dir << '\n';
    return 0;
}

int cmd_online(const std::string& artifact_dir, const std::string& mu_text, int n) {
    const rbs::OfflineArtifact artifact = rbs::load_artifact(artifact_dir);
    const rbs::Vector mu = parse_mu(mu_text);
    artifact.model.domain.require(mu);

    const rbs::RBSolution sol = rbs::online_solve(artifact.model, mu, n);

    rbs::ConstantBounds c;
    bool cached = false;
    for (const auto& [cached_mu, cb] : artifact.constants_cache)
        if (cached_mu.size() == mu.size() && (cached_mu - mu).norm() == 0.0) {
            c = cb;
            cached = true;
            break;
        }
    if (!cached) {
        const auto [mesh, th_space] = rbs::build_benchmark(artifact.geometry);
        const rbs::TruthDiscretization disc =
            rbs::assemble_truth(mesh, th_space, artifact.geometry);
        c = rbs::exact_bounds(disc, mu, true);
    }
    const rbs::BoundReport rep = rbs::bound_report(artifact.model, mu, sol, c);

    std::cout << "mu=" << mu.transpose() << " n_x=" << rep.n_x << " n_y=" << rep.n_y
              << " n_z=" << rep.n_z << '\n';
    std::cout << "r1=" << rep.r1 << " r2=" << rep.r2 << '\n';
    std::cout << "delta_u_sym=" << rep.du_sym << " delta_p_sym=" << rep.dp_sym
              << " delta_sym=" << rep.d_sym << " delta_u_energy=" << rep.du_energy << '\n';
    std::cout << "delta_u_gen=" << rep.du_gen << " delta_p_gen=" << rep.dp_gen
              << " delta_br=" << rep.d_br << " delta_ba=" << rep.d_ba << '\n';
    std::cout << "csv," << rep.n_z << ',' << rep.r1 << ',' << rep.r2 << ',' << rep.du_sym << ','
              << rep.dp_sym << ',' << rep.d_sym << ',' << rep.d_ba << '\n';
    return 0;
}

int cmd_sweep(const std::string& artifact_dir, const std::string& out, long long seed) {
    const rbs::OfflineArtifact artifact = rbs::load_artifact(artifact_dir);
    rbs::ExperimentConfig config;
    config.geometry = artifact.geometry;
    if (!out.empty()) config.out_dir = out;
    if (seed >= 0) config.test_seed = static_cast<std::uint64_t>(seed);
    const rbs::SweepFiles files = rbs::run_sweep(artifact, config);
    std::cout << files.fig_u << '\n'
              << files.fig_p << '\n'
              << files.fig_z << '\n'
              << files.table1 << '\n'
              << files.table2 << '\n';
    return 0;
}

int cmd_verify(const std::string& artifact_dir, int test_size) {
    if (test_size < 1) throw rbs::Error("verify requires a nonempty test set");
    const rbs::OfflineArtifact artifact = rbs::load_artifact(artifact_dir);
    rbs::ExperimentConfig config;
    config.geometry = artifact.geometry;
    config.test_size = test_size;
    const rbs::VerifyReport report = rbs::run_verify(artifact, config);
    for (const auto& msg : report.messages) std::cout << msg << '\n';
    std::cout << (report.ok() ? "PASS" : "FAIL") << " (" << report.checks - report.failures << '/'
              << report.checks << " checks)\n";
    return report.ok() ? 0 : 1;
}

int cmd_mesh_export(const std::string& config_path, const std::string& mu_text,
                    const std::string& out) {
    rbs::ExperimentConfig config =
        config_path.empty() ? rbs::ExperimentConfig{} : rbs::parse_config_file(config_path);
    auto [mesh, th_space] = rbs::build_benchmark(config.geometry);
    (void)th_space;
    if (!mu_text.empty()) mesh = rbs::deform_mesh(mesh, config.geometry, parse_mu(mu_text));
    if (out.empty()) {
        rbs::export_mesh(mesh, std::cout);
    } else {
        std::ofstream f(out);
        if (!f) throw rbs::Error("cannot open output file " + out);
        rbs::export_mesh(mesh, f);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"certified reduced-basis toolkit for a parametrized Stokes benchmark"};
    app.require_subcommand(1);

    std::string config_path, artifact_dir, mu_text, out;
    int n = -1;
    long long seed = -1;
    int verify_test_size = 10;

    auto* offline = app.add_subcommand("offline", "run the offline pipeline, write an artifact");
    offline->add_option("--config", config_path, "config file (key = value)");
    offline->add_option("--out", out, "output directory");

    auto* online = app.add_subcommand("online", "evaluate the reduced model at one parameter");
    online->add_option("--artifact", artifact_dir, "artifact directory")->required();
    online->add_option("--mu", mu_text, "parameter, comma separated")->required();
    online->add_option("--n", n, "generation index (default: latest)");

    auto* sweep = app.add_subcommand("sweep", "emit figure/table CSV data over a test set");
    sweep->add_option("--artifact", artifact_dir, "artifact directory")->required();
    sweep->add_option("--out", out, "output directory");
    sweep->add_option("--seed", seed, "test-set seed");

    auto* verify = app.add_subcommand("verify", "run the invariant suite on an artifact");
    verify->add_option("--artifact", artifact_dir, "artifact directory")->required();
    verify->add_option("--n", verify_test_size, "test points to use");

    auto* mesh_export = app.add_subcommand("mesh-export", "write the benchmark mesh as text");
    mesh_export->add_option("--config", config_path, "config file");
    mesh_export->add_option("--mu", mu_text, "deform to this parameter before export");
    mesh_export->add_option("--out", out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (offline->parsed()) return cmd_offline(config_path, out);
        if (online->parsed()) return cmd_online(artifact_dir, mu_text, n);
        if (sweep->parsed()) return cmd_sweep(artifact_dir, out, seed);
        if (verify->parsed()) return cmd_verify(artifact_dir, verify_test_size);
        if (mesh_export->parsed()) return cmd_mesh_export(config_path, mu_text, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
