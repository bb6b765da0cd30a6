// fracqubit: trajectories, solver cross-validation and steady-state tables.
//
// Exit status: 0 ok, 1 usage or invalid spec, 2 validation gate failure,
// 3 I/O failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracqubit/error.hpp"
#include "fracqubit/pipeline.hpp"

namespace fp = fracqubit::pipeline;
using fracqubit::Error;
using fracqubit::ErrorCode;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitGate = 2;
constexpr int kExitIo = 3;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_spec:
        case ErrorCode::invalid_argument:
        case ErrorCode::non_finite_input: return kExitUsage;
        case ErrorCode::io_failure: return kExitIo;
        default: return kExitGate;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Qubit dynamics near a photonic band edge: closed-form and reference solvers."};
    app.set_config("--config", "", "Flat key=value file; keys are long flag names. Flags on the command line win.");
    app.fallthrough();
    app.require_subcommand(1);

    fp::SweepSpec spec;
    std::vector<double> dob;
    std::vector<std::string> outputs;
    std::string solver = "closed", log_base = "e", scheme = "trapezoid";
    std::filesystem::path out_dir = "out";
    bool bromwich = false;

    app.add_option("--delta-over-beta", dob, "Detuning in units of beta; repeatable")->allow_extra_args(false);
    app.add_option("--beta", spec.beta, "Coupling constant")->capture_default_str();
    app.add_option("--f", spec.f, "Anisotropy factor")->capture_default_str();
    app.add_option("--theta0", spec.theta0, "Initial polar angle in [0, pi]")->capture_default_str();
    app.add_option("--phi0", spec.phi0, "Initial azimuth")->capture_default_str();
    app.add_option("--tmax", spec.t_max, "End of the grid in beta t")->capture_default_str();
    app.add_option("--points", spec.n_points, "Grid points including t = 0")->capture_default_str();
    app.add_option("--solver", solver, "Amplitude solver")
        ->check(CLI::IsMember({"closed", "volterra", "laplace"}))
        ->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--tolerance", spec.tolerance, "Validation gate on max |U_closed - U_ref|")->capture_default_str();
    app.add_option("--log-base", log_base, "Entropy logarithm")->check(CLI::IsMember({"e", "2"}))->capture_default_str();
    app.add_option("--volterra-step", spec.volterra_step, "Volterra step in beta t")->capture_default_str();
    app.add_option("--volterra-scheme", scheme, "Product integration rule")
        ->check(CLI::IsMember({"trapezoid", "rectangle"}))
        ->capture_default_str();
    app.add_option("--outputs", outputs, "Subset of P,gamma_relax,Pz,gamma_dec,S,photon_pop,bloch")
        ->delimiter(',')
        ->allow_extra_args(false);
    app.add_option("--threads", spec.threads, "Worker threads, 0 for all cores")->capture_default_str();
    app.add_flag("--bromwich", bromwich, "validate: also check the Laplace inversion");

    auto* trajectory = app.add_subcommand("trajectory", "Write one CSV per detuning plus manifest.json");
    auto* validate = app.add_subcommand("validate", "Closed form against the Volterra reference");
    auto* steady = app.add_subcommand("steady", "Steady-state formula against the long-time average");
    auto* verify = app.add_subcommand("verify", "Recompute a trajectory run from its manifest and compare hashes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (!dob.empty()) spec.delta_over_beta = dob;
        if (!outputs.empty()) {
            spec.outputs.clear();
            for (const auto& name : outputs) {
                auto o = fp::parse_output(name);
                if (!o) throw Error(ErrorCode::invalid_spec, "unknown output '" + name + "'");
                spec.outputs.push_back(*o);
            }
        }
        spec.solver = *fp::parse_solver(solver);
        spec.log_base = log_base == "2" ? fracqubit::LogBase::two : fracqubit::LogBase::natural;
        spec.volterra_scheme = scheme == "rectangle" ? fracqubit::ProductRule::product_rectangle
                                                     : fracqubit::ProductRule::product_trapezoid;
        fp::validate(spec);

        if (trajectory->parsed()) {
            const fp::RunManifest m = fp::run_trajectory(spec, out_dir);
            for (const auto& f : m.files) std::cout << (out_dir / f.name).string() << "  " << f.sha256 << '\n';
            std::cout << (out_dir / fp::kManifestFile).string() << "  output_sha256 " << m.output_sha256 << '\n';
            return kExitOk;
        }
        if (validate->parsed()) {
            const fp::ValidationReport report = fp::run_validate(spec, {.bromwich = bromwich});
            std::cout << fp::render_report(report);
            fp::require_pass(report);
            return kExitOk;
        }
        if (steady->parsed()) {
            std::cout << fp::render_steady(fp::run_steady(spec));
            return kExitOk;
        }
        if (verify->parsed()) {
            const auto problems = fp::verify_run(out_dir);
            for (const auto& p : problems) std::cerr << p << '\n';
            if (!problems.empty()) return kExitGate;
            std::cout << "manifest and files in " << out_dir.string() << " reproduce\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitGate;
    }
    return kExitUsage;
}
