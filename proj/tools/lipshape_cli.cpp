// lipshape: run the built-in shape optimisation experiments and export
// energy logs, radial-function snapshots and deformed display meshes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lipshape/lipshape.hpp>

namespace fs = std::filesystem;
using namespace lipshape;

namespace {

struct RunOptions {
    std::string experiment = "disk";
    std::string method = "formula";
    std::string form = "volume";
    std::size_t n = 512;
    int mesh_level = 24;
    int max_it = 250;
    std::string out = "out";
    int snapshot_every = 10;
    bool seed_free = false;
    bool timing = false;
    bool quiet = false;
    std::string formula_variant = "segment";
    double delta = 0.05;
    int sinkhorn_max_iter = 2000;
    std::string recovery = "three-case";
};

const std::map<std::string, DescentMethod> method_names{
    {"formula", DescentMethod::formula}, {"sinkhorn", DescentMethod::sinkhorn}, {"h1", DescentMethod::h1}};
const std::map<std::string, DerivativeForm> form_names{{"volume", DerivativeForm::volume},
                                                       {"boundary", DerivativeForm::boundary}};

std::string numbered(const fs::path& dir, const std::string& stem, int index, const std::string& ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04d", index);
    return (dir / (stem + buf + ext)).string();
}

void add_common(CLI::App* cmd, RunOptions& o)
{
    std::vector<std::string> experiments = experiment_names();
    cmd->add_option("--experiment", o.experiment, "Built-in experiment")
        ->check(CLI::IsMember(experiments))
        ->capture_default_str();
    cmd->add_option("--n", o.n, "Number of angular nodes")->check(CLI::Range(8, 1 << 20))->capture_default_str();
    cmd->add_option("--mesh-level", o.mesh_level, "Disk mesh refinement level (6 level^2 triangles)")
        ->check(CLI::Range(1, 512))
        ->capture_default_str();
}

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    add_common(cmd, o);
    cmd->add_option("--max-it", o.max_it, "Maximal number of descent iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--snapshot-every", o.snapshot_every, "Write shape and mesh snapshots every K iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--seed-free", o.seed_free, "Accepted for compatibility; runs are always deterministic");
    cmd->add_flag("--timing", o.timing, "Write wall-clock seconds into energy.csv");
    cmd->add_flag("--quiet", o.quiet, "Do not print per-iteration progress");
    cmd->add_option("--formula-variant", o.formula_variant, "Closed-form construction: segment or nodal")
        ->check(CLI::IsMember({"segment", "nodal"}))
        ->capture_default_str();
    cmd->add_option("--delta", o.delta, "Sinkhorn entropic regularisation")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--sinkhorn-max-iter", o.sinkhorn_max_iter, "Sinkhorn iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--recovery", o.recovery, "Sinkhorn potential recovery: three-case or direct")
        ->check(CLI::IsMember({"three-case", "direct"}))
        ->capture_default_str();
}

RunConfig make_config(const RunOptions& o, const Experiment& setup)
{
    RunConfig cfg{setup.data, initial_shape(setup, o.n)};
    cfg.method = method_names.at(o.method);
    cfg.form = form_names.at(o.form);
    cfg.mesh_level = o.mesh_level;
    cfg.max_iterations = o.max_it;
    cfg.direction.formula.variant = o.formula_variant == "nodal" ? FormulaVariant::nodal : FormulaVariant::segment;
    cfg.direction.sinkhorn.delta = o.delta;
    cfg.direction.sinkhorn.max_iter = o.sinkhorn_max_iter;
    cfg.direction.sinkhorn.recovery =
        o.recovery == "direct" ? SinkhornRecovery::direct : SinkhornRecovery::three_case;
    return cfg;
}

void run_one(const RunOptions& o, const DiskMesh& mesh, const fs::path& dir)
{
    fs::create_directories(dir);
    const auto setup = builtin_experiment(o.experiment);
    const RunConfig cfg = make_config(o, setup);

    auto snapshot = [&](int index, const RadialShape& f) {
        save_shape_csv(f, numbered(dir, "shape", index, ".csv"));
        export_deformed_mesh(mesh, f, numbered(dir, "deformed", index, ".vtk"));
    };
    snapshot(0, rescale_to_square_integral(cfg.initial, square_integral(cfg.initial)));

    int last_snapshot = 0;
    const auto result = run(mesh, cfg, [&](const IterationRecord& rec, const RadialShape& f) {
        if (!o.quiet) {
            std::cout << std::setw(5) << rec.iteration << "  E = " << std::setprecision(10) << rec.energy
                      << "  dE = " << rec.derivative << "  sigma = ";
            if (rec.sigma) std::cout << *rec.sigma;
            else std::cout << "rejected";
            std::cout << '\n';
        }
        if (rec.iteration % o.snapshot_every == 0) {
            snapshot(rec.iteration, f);
            last_snapshot = rec.iteration;
        }
    });
    const int final_it = result.records.empty() ? 0 : result.records.back().iteration;
    if (final_it != last_snapshot) snapshot(final_it, result.final_shape);

    save_energy_csv(result, (dir / "energy.csv").string(), o.timing);
    nlohmann::ordered_json summary{
        {"experiment", o.experiment},
        {"method", o.method},
        {"form", o.form},
        {"iterations", final_it},
        {"final_energy", result.final_energy()},
        {"termination", to_string(result.termination)},
    };
    std::ofstream js(dir / "summary.json");
    if (!js) throw std::runtime_error("cannot open " + (dir / "summary.json").string() + " for writing");
    js << summary.dump(2) << '\n';
    if (!o.quiet)
        std::cout << o.experiment << ' ' << o.method << '/' << o.form << ": " << to_string(result.termination)
                  << " after " << final_it << " iterations, E = " << std::setprecision(10) << result.final_energy()
                  << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Shape optimisation of star-shaped domains with Lipschitz descent directions"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run_cmd = app.add_subcommand("run", "Run one experiment with one method and derivative form");
    add_run_options(run_cmd, run_opt);
    run_cmd->add_option("--method", run_opt.method, "Descent method: formula, sinkhorn or h1")
        ->check(CLI::IsMember({"formula", "sinkhorn", "h1"}))
        ->capture_default_str();
    run_cmd->add_option("--form", run_opt.form, "Shape derivative form: volume or boundary")
        ->check(CLI::IsMember({"volume", "boundary"}))
        ->capture_default_str();

    RunOptions batch_opt;
    auto* batch_cmd = app.add_subcommand("batch", "Run every method and form in sequence; results in OUT/method_form");
    add_run_options(batch_cmd, batch_opt);

    RunOptions check_opt;
    int mode = 2;
    std::vector<double> steps{1e-2, 1e-3, 1e-4};
    auto* check_cmd = app.add_subcommand("check-derivative",
                                         "Compare the shape derivative with central differences along cos(k phi)");
    add_common(check_cmd, check_opt);
    check_cmd->add_option("--form", check_opt.form, "Shape derivative form: volume or boundary")
        ->check(CLI::IsMember({"volume", "boundary"}))
        ->capture_default_str();
    check_cmd->add_option("--mode", mode, "Wave number k of the perturbation")->capture_default_str();
    check_cmd->add_option("--steps", steps, "Finite difference step sizes")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            run_one(run_opt, generate_disk_mesh(run_opt.mesh_level), run_opt.out);
        } else if (batch_cmd->parsed()) {
            const auto mesh = generate_disk_mesh(batch_opt.mesh_level);
            for (const auto& [method, _] : method_names)
                for (const auto& [form, __] : form_names) {
                    RunOptions o = batch_opt;
                    o.method = method;
                    o.form = form;
                    run_one(o, mesh, fs::path(batch_opt.out) / (method + "_" + form));
                }
        } else if (check_cmd->parsed()) {
            const auto setup = builtin_experiment(check_opt.experiment);
            const auto mesh = generate_disk_mesh(check_opt.mesh_level);
            const auto f = initial_shape(setup, check_opt.n);
            const auto v = PeriodicLinear::sample(check_opt.n, [&](double phi) { return std::cos(mode * phi); });
            const auto chk = check_derivative(mesh, setup.data, form_names.at(check_opt.form), f, v, steps);
            std::cout << std::setprecision(12) << "pairing " << chk.pairing << '\n' << "t,central_difference,relative_error\n";
            for (std::size_t i = 0; i < chk.steps.size(); ++i)
                std::cout << chk.steps[i] << ',' << chk.difference[i] << ',' << chk.relative_error[i] << '\n';
            std::cout << "observed order " << chk.observed_order << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
