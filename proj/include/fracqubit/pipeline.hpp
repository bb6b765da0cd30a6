#pragma once

// Parameter sweeps, solver cross-validation and reproducible run manifests.
//
// A run is fully described by its SweepSpec. Output files are rendered in
// memory by a worker pool (one task per parameter set), then written one at a
// time by the calling thread. Numbers are printed with the shortest
// round-trip representation, so identical specs give byte-identical files
// regardless of thread count.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracqubit/model.hpp"
#include "fracqubit/observables.hpp"
#include "fracqubit/refsolve.hpp"

namespace fracqubit::pipeline {

inline constexpr const char* kToolName = "fracqubit";
inline constexpr const char* kToolVersion = "1.0.0";

enum class Output { P, gamma_relax, Pz, gamma_dec, S, photon_pop, bloch };

const char* to_string(Output output) noexcept;
std::optional<Output> parse_output(std::string_view name);
const std::vector<Output>& all_outputs();

enum class SolverChoice { closed, volterra, laplace };

const char* to_string(SolverChoice solver) noexcept;
std::optional<SolverChoice> parse_solver(std::string_view name);

struct SweepSpec {
    std::vector<double> delta_over_beta{-10.0, -5.0, -1.0, 2.0};
    double beta = 1.0;
    double f = 1.0;
    double theta0 = 0.0;
    double phi0 = 0.0;
    double t_max = 10.0;  // in units of beta t
    std::size_t n_points = 1001;
    std::vector<Output> outputs = all_outputs();
    SolverChoice solver = SolverChoice::closed;
    double volterra_step = 1.0 / 2048.0;
    ProductRule volterra_scheme = ProductRule::product_trapezoid;
    double tolerance = 1e-4;  // validation gate on max |U_closed - U_ref|
    LogBase log_base = LogBase::natural;
    unsigned threads = 0;     // 0: hardware concurrency; never affects output

    bool operator==(const SweepSpec&) const = default;
};

/// Throws InvalidSpec.
void validate(const SweepSpec& spec);

std::vector<SystemParams> parameter_sets(const SweepSpec& spec);

/// Volterra settings used to produce a trajectory on the spec grid: the step
/// is shrunk so the output spacing is an integer multiple of it.
VolterraConfig trajectory_volterra_config(const SweepSpec& spec);

/// Trajectory on the spec grid with the selected solver.
AmplitudeTrajectory solve(const SystemParams& params, const SweepSpec& spec);

std::string sha256_hex(std::string_view data);

/// Shortest decimal string that round-trips to the same double; both zeros print as "0".
std::string format_double(double value);

struct RenderedFile {
    std::string name;
    std::string content;
};

struct FileRecord {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;

    bool operator==(const FileRecord&) const = default;
};

struct RunManifest {
    std::string tool = kToolName;
    std::string tool_version = kToolVersion;
    SweepSpec spec;
    std::vector<SystemParams> params;
    VolterraConfig volterra;
    BromwichConfig bromwich;
    double series_t_min = kDefaultTMin;
    std::string config_sha256;
    std::vector<FileRecord> files;
    std::string output_sha256;
};

/// Hash of everything that determines the output numbers (tool version,
/// spec without the thread count, solver configs). Printed in every CSV header.
std::string config_hash(const SweepSpec& spec);

std::string serialize(const RunManifest& manifest);
/// Throws InvalidSpec on malformed input.
RunManifest parse_manifest(std::string_view text);

std::string trajectory_file_name(double delta_over_beta);

std::string render_csv(const SweepSpec& spec, const AmplitudeTrajectory& traj, const std::string& config_sha256);

/// CSVs for every parameter set, in spec order.
std::vector<RenderedFile> render_trajectories(const SweepSpec& spec);

RunManifest make_manifest(const SweepSpec& spec, const std::vector<RenderedFile>& files);

inline constexpr const char* kManifestFile = "manifest.json";

/// Writes one CSV per parameter set plus manifest.json into out_dir.
/// Throws InvalidSpec or IoFailure.
RunManifest run_trajectory(const SweepSpec& spec, const std::filesystem::path& out_dir);

/// Re-renders the run described by dir/manifest.json and compares it with the
/// recorded hashes and the files on disk. Returns one line per mismatch.
std::vector<std::string> verify_run(const std::filesystem::path& dir);

struct ValidationOptions {
    bool bromwich = false;
    double continuity_offset = 1e-6;
    /// Orders are only estimated while the coarser error is above this.
    double order_noise_floor = 1e-10;
};

struct ConvergenceRow {
    double step = 0.0;
    double max_abs_error = 0.0;
    std::optional<double> order;  // log2(err(2h) / err(h))
};

/// worst is an upper-bounded quantity, except for checks named "(minimum)"
/// where limit is a floor.
struct InvariantCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;
    double limit = 0.0;
    std::string detail;  // replaces the numbers when the check could not run
};

struct ParameterReport {
    double delta_over_beta = 0.0;
    bool degenerate = false;
    std::optional<double> max_abs_error;
    std::optional<double> bromwich_max_abs_error;
    std::vector<ConvergenceRow> convergence;
    std::vector<InvariantCheck> checks;
};

struct ValidationReport {
    std::vector<ParameterReport> rows;

    /// "delta_over_beta=<x>: <check>" for every failed check.
    std::vector<std::string> failures() const;
    bool passed() const { return failures().empty(); }
};

ValidationReport run_validate(const SweepSpec& spec, const ValidationOptions& options = {});

std::string render_report(const ValidationReport& report);

/// Throws GateFailure naming the failed checks.
void require_pass(const ValidationReport& report);

struct SteadyRow {
    double delta_over_beta = 0.0;
    std::optional<double> formula;
    double empirical = 0.0;
    std::optional<double> difference;  // empirical - formula
    double window_begin = 0.0;
    double window_end = 0.0;
};

/// Fraction of [0, t_max] at the end over which P is averaged.
inline constexpr double kSteadyWindowFraction = 0.2;

std::vector<SteadyRow> run_steady(const SweepSpec& spec);

std::string render_steady(const std::vector<SteadyRow>& rows);

}  // namespace fracqubit::pipeline
