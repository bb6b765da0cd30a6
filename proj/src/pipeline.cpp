#include "fracqubit/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fracqubit/error.hpp"

namespace fracqubit::pipeline {

using nlohmann::json;

namespace {

struct OutputName {
    Output output;
    const char* name;
};

constexpr OutputName kOutputNames[] = {
    {Output::P, "P"},   {Output::gamma_relax, "gamma_relax"}, {Output::Pz, "Pz"},     {Output::gamma_dec, "gamma_dec"},
    {Output::S, "S"},   {Output::photon_pop, "photon_pop"},   {Output::bloch, "bloch"},
};

bool wants(const SweepSpec& spec, Output o) {
    return std::find(spec.outputs.begin(), spec.outputs.end(), o) != spec.outputs.end();
}

[[noreturn]] void bad_spec(const std::string& msg) { throw Error(ErrorCode::invalid_spec, msg); }

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) bad_spec(std::string(name) + " must be finite");
}

const char* scheme_name(ProductRule r) {
    return r == ProductRule::product_trapezoid ? "trapezoid" : "rectangle";
}

ProductRule parse_scheme(const std::string& s) {
    if (s == "trapezoid") return ProductRule::product_trapezoid;
    if (s == "rectangle") return ProductRule::product_rectangle;
    bad_spec("unknown Volterra scheme '" + s + "'");
}

const char* log_base_name(LogBase b) { return b == LogBase::two ? "2" : "e"; }

LogBase parse_log_base(const std::string& s) {
    if (s == "e") return LogBase::natural;
    if (s == "2") return LogBase::two;
    bad_spec("unknown log base '" + s + "'");
}

// Runs task(i) for i in [0, n) on a pool. Results go to caller-owned slots;
// the first exception in index order is rethrown.
template <class Task>
void parallel_for(std::size_t n, unsigned threads, Task task) {
    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

json spec_to_json(const SweepSpec& s, bool with_threads) {
    json outputs = json::array();
    for (Output o : s.outputs) outputs.push_back(to_string(o));
    json j = {
        {"delta_over_beta", s.delta_over_beta},
        {"beta", s.beta},
        {"f", s.f},
        {"theta0", s.theta0},
        {"phi0", s.phi0},
        {"t_max", s.t_max},
        {"n_points", s.n_points},
        {"outputs", outputs},
        {"solver", to_string(s.solver)},
        {"volterra_step", s.volterra_step},
        {"volterra_scheme", scheme_name(s.volterra_scheme)},
        {"tolerance", s.tolerance},
        {"log_base", log_base_name(s.log_base)},
    };
    if (with_threads) j["threads"] = s.threads;
    return j;
}

SweepSpec spec_from_json(const json& j) {
    SweepSpec s;
    s.delta_over_beta = j.at("delta_over_beta").get<std::vector<double>>();
    s.beta = j.at("beta").get<double>();
    s.f = j.at("f").get<double>();
    s.theta0 = j.at("theta0").get<double>();
    s.phi0 = j.at("phi0").get<double>();
    s.t_max = j.at("t_max").get<double>();
    s.n_points = j.at("n_points").get<std::size_t>();
    s.outputs.clear();
    for (const auto& name : j.at("outputs")) {
        auto o = parse_output(name.get<std::string>());
        if (!o) bad_spec("unknown output '" + name.get<std::string>() + "'");
        s.outputs.push_back(*o);
    }
    auto solver = parse_solver(j.at("solver").get<std::string>());
    if (!solver) bad_spec("unknown solver");
    s.solver = *solver;
    s.volterra_step = j.at("volterra_step").get<double>();
    s.volterra_scheme = parse_scheme(j.at("volterra_scheme").get<std::string>());
    s.tolerance = j.at("tolerance").get<double>();
    s.log_base = parse_log_base(j.at("log_base").get<std::string>());
    s.threads = j.value("threads", 0u);
    return s;
}

json params_to_json(const SystemParams& p) {
    return {{"beta", p.beta}, {"delta", p.delta}, {"f", p.f}, {"theta0", p.theta0}, {"phi0", p.phi0}};
}

SystemParams params_from_json(const json& j) {
    return {j.at("beta").get<double>(), j.at("delta").get<double>(), j.at("f").get<double>(),
            j.at("theta0").get<double>(), j.at("phi0").get<double>()};
}

json volterra_to_json(const VolterraConfig& c) {
    return {{"step", c.step}, {"scheme", scheme_name(c.scheme)}, {"t_max", c.t_max}, {"halving_check", c.halving_check}};
}

VolterraConfig volterra_from_json(const json& j) {
    VolterraConfig c;
    c.step = j.at("step").get<double>();
    c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    c.t_max = j.at("t_max").get<double>();
    c.halving_check = j.at("halving_check").get<bool>();
    return c;
}

json bromwich_to_json(const BromwichConfig& c) {
    json j = {{"n_nodes", c.n_nodes}, {"period_scale", c.period_scale}, {"tail_tolerance", c.tail_tolerance}};
    j["contour_abscissa"] = c.contour_abscissa ? json(*c.contour_abscissa) : json(nullptr);
    return j;
}

BromwichConfig bromwich_from_json(const json& j) {
    BromwichConfig c;
    const auto& a = j.at("contour_abscissa");
    if (!a.is_null()) c.contour_abscissa = a.get<double>();
    c.n_nodes = j.at("n_nodes").get<std::size_t>();
    c.period_scale = j.at("period_scale").get<double>();
    c.tail_tolerance = j.at("tail_tolerance").get<double>();
    return c;
}

json config_json(const SweepSpec& spec) {
    json params = json::array();
    for (const auto& p : parameter_sets(spec)) params.push_back(params_to_json(p));
    return {
        {"tool", kToolName},
        {"tool_version", kToolVersion},
        {"spec", spec_to_json(spec, false)},
        {"params", params},
        {"volterra", volterra_to_json(trajectory_volterra_config(spec))},
        {"bromwich", bromwich_to_json(BromwichConfig{})},
        {"series_t_min", kDefaultTMin},
    };
}

std::string output_hash(const std::vector<FileRecord>& files) {
    std::string joined;
    for (const auto& f : files) joined += f.name + '\t' + f.sha256 + '\n';
    return sha256_hex(joined);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw Error(ErrorCode::io_failure, "write to " + path.string() + " failed");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::io_failure, "read from " + path.string() + " failed");
    return content;
}

void append_cell(std::string& line, double v) {
    line += ',';
    line += format_double(v);
}

void append_cell(std::string& line, const std::optional<double>& v) {
    line += ',';
    if (v) line += format_double(*v);
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

const char* to_string(Output output) noexcept {
    for (const auto& e : kOutputNames)
        if (e.output == output) return e.name;
    return "unknown";
}

std::optional<Output> parse_output(std::string_view name) {
    for (const auto& e : kOutputNames)
        if (name == e.name) return e.output;
    return std::nullopt;
}

const std::vector<Output>& all_outputs() {
    static const std::vector<Output> all{Output::P, Output::gamma_relax, Output::Pz,   Output::gamma_dec,
                                         Output::S, Output::photon_pop,  Output::bloch};
    return all;
}

const char* to_string(SolverChoice solver) noexcept {
    switch (solver) {
        case SolverChoice::closed: return "closed";
        case SolverChoice::volterra: return "volterra";
        case SolverChoice::laplace: return "laplace";
    }
    return "unknown";
}

std::optional<SolverChoice> parse_solver(std::string_view name) {
    if (name == "closed") return SolverChoice::closed;
    if (name == "volterra") return SolverChoice::volterra;
    if (name == "laplace") return SolverChoice::laplace;
    return std::nullopt;
}

void validate(const SweepSpec& spec) {
    if (spec.delta_over_beta.empty()) bad_spec("no delta_over_beta values");
    for (double d : spec.delta_over_beta) require_finite(d, "delta_over_beta");
    auto sorted = spec.delta_over_beta;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) bad_spec("duplicate delta_over_beta value");
    require_finite(spec.beta, "beta");
    require_finite(spec.f, "f");
    require_finite(spec.theta0, "theta0");
    require_finite(spec.phi0, "phi0");
    require_finite(spec.t_max, "t_max");
    require_finite(spec.volterra_step, "volterra_step");
    require_finite(spec.tolerance, "tolerance");
    if (spec.beta <= 0.0) bad_spec("beta must be positive");
    if (spec.f <= 0.0) bad_spec("f must be positive");
    if (spec.theta0 < 0.0 || spec.theta0 > std::numbers::pi) bad_spec("theta0 must lie in [0, pi]");
    if (spec.t_max <= 0.0) bad_spec("t_max must be positive");
    if (spec.n_points < 2) bad_spec("n_points must be at least 2");
    if (spec.volterra_step <= 0.0 || spec.volterra_step > spec.t_max) bad_spec("volterra_step must lie in (0, t_max]");
    if (spec.tolerance <= 0.0) bad_spec("tolerance must be positive");
    if (spec.outputs.empty()) bad_spec("no outputs requested");
    auto outs = spec.outputs;
    std::sort(outs.begin(), outs.end());
    if (std::adjacent_find(outs.begin(), outs.end()) != outs.end()) bad_spec("duplicate output");
}

std::vector<SystemParams> parameter_sets(const SweepSpec& spec) {
    std::vector<SystemParams> out;
    out.reserve(spec.delta_over_beta.size());
    for (double d : spec.delta_over_beta) out.push_back({spec.beta, d * spec.beta, spec.f, spec.theta0, spec.phi0});
    return out;
}

VolterraConfig trajectory_volterra_config(const SweepSpec& spec) {
    const double spacing = spec.t_max / static_cast<double>(spec.n_points - 1);
    const double stride = std::max(1.0, std::ceil(spacing / spec.volterra_step * (1.0 - 1e-12)));
    return {spacing / stride, spec.volterra_scheme, spec.t_max, true};
}

AmplitudeTrajectory solve(const SystemParams& params, const SweepSpec& spec) {
    const TimeGrid grid = TimeGrid::uniform(spec.t_max, spec.n_points);
    switch (spec.solver) {
        case SolverChoice::closed: return closed_form_amplitude(params, grid);
        case SolverChoice::laplace: return laplace_invert(params, grid);
        case SolverChoice::volterra: break;
    }
    const VolterraConfig cfg = trajectory_volterra_config(spec);
    const AmplitudeTrajectory full = volterra_solve(params, cfg);
    const auto stride = static_cast<std::size_t>(std::llround(grid[1] / cfg.step));
    AmplitudeTrajectory out{grid, {}, {}, {}, full.params, full.reduced, full.solver};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t k = std::min(i * stride, full.grid.size() - 1);
        out.U.push_back(full.U[k]);
        out.u.push_back(std::polar(1.0, full.reduced.delta * grid[i]) * full.U[k]);
        out.dU.push_back(full.dU[k]);
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::io_failure, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string format_double(double value) {
    if (value == 0.0) return "0";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string config_hash(const SweepSpec& spec) { return sha256_hex(config_json(spec).dump()); }

std::string serialize(const RunManifest& m) {
    json params = json::array();
    for (const auto& p : m.params) params.push_back(params_to_json(p));
    json files = json::array();
    for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    const json j = {
        {"tool", m.tool},
        {"tool_version", m.tool_version},
        {"spec", spec_to_json(m.spec, true)},
        {"params", params},
        {"grid", {{"kind", "uniform"}, {"t_max", m.spec.t_max}, {"n_points", m.spec.n_points}}},
        {"volterra", volterra_to_json(m.volterra)},
        {"bromwich", bromwich_to_json(m.bromwich)},
        {"series_t_min", m.series_t_min},
        {"config_sha256", m.config_sha256},
        {"files", files},
        {"output_sha256", m.output_sha256},
    };
    return j.dump(2) + '\n';
}

RunManifest parse_manifest(std::string_view text) {
    try {
        const json j = json::parse(text);
        RunManifest m;
        m.tool = j.at("tool").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.spec = spec_from_json(j.at("spec"));
        for (const auto& p : j.at("params")) m.params.push_back(params_from_json(p));
        m.volterra = volterra_from_json(j.at("volterra"));
        m.bromwich = bromwich_from_json(j.at("bromwich"));
        m.series_t_min = j.at("series_t_min").get<double>();
        m.config_sha256 = j.at("config_sha256").get<std::string>();
        for (const auto& f : j.at("files"))
            m.files.push_back(
                {f.at("name").get<std::string>(), f.at("sha256").get<std::string>(), f.at("bytes").get<std::uint64_t>()});
        m.output_sha256 = j.at("output_sha256").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_spec, std::string("malformed manifest: ") + e.what());
    }
}

std::string trajectory_file_name(double delta_over_beta) {
    return "trajectory_dob_" + format_double(delta_over_beta) + ".csv";
}

std::string render_csv(const SweepSpec& spec, const AmplitudeTrajectory& traj, const std::string& config_sha256) {
    const ObservableSeries s = compute_series(traj, {kDefaultTMin, spec.log_base});
    const SystemParams& p = traj.params;

    std::string out;
    out += "# tool: " + std::string(kToolName) + ' ' + kToolVersion + '\n';
    out += "# config_sha256: " + config_sha256 + '\n';
    out += "# solver: " + std::string(to_string(traj.solver)) + '\n';
    out += "# delta_over_beta: " + format_double(p.delta / p.beta) + '\n';
    out += "# beta: " + format_double(p.beta) + "  f: " + format_double(p.f) + "  theta0: " + format_double(p.theta0) +
           "  phi0: " + format_double(p.phi0) + '\n';
    out += "# log_base: " + std::string(log_base_name(spec.log_base)) + '\n';
    out += "# empty rate cells: t < " + format_double(kDefaultTMin) + " or conditioning floor " +
           format_double(kConditioningFloor) + " reached\n";

    out += "t_beta,re_U,im_U";
    if (wants(spec, Output::P)) out += ",P";
    if (wants(spec, Output::gamma_relax)) out += ",gamma_relax";
    if (wants(spec, Output::Pz)) out += ",Pz_rho,Pz_paper";
    if (wants(spec, Output::gamma_dec)) out += ",gamma_dec,ratio_dec_relax";
    if (wants(spec, Output::S)) out += ",S,lambda_plus,lambda_minus";
    if (wants(spec, Output::photon_pop)) out += ",photon_pop";
    if (wants(spec, Output::bloch)) out += ",bloch_x,bloch_y,bloch_z";
    out += '\n';

    std::string line;
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        line = format_double(traj.grid[i]);
        append_cell(line, traj.U[i].real());
        append_cell(line, traj.U[i].imag());
        if (wants(spec, Output::P)) append_cell(line, s.P[i]);
        if (wants(spec, Output::gamma_relax)) append_cell(line, s.gamma_relax[i]);
        if (wants(spec, Output::Pz)) {
            append_cell(line, s.Pz[i]);
            append_cell(line, s.Pz_paper[i]);
        }
        if (wants(spec, Output::gamma_dec)) {
            append_cell(line, s.gamma_dec[i]);
            append_cell(line, s.ratio_dec_relax[i]);
        }
        if (wants(spec, Output::S)) {
            append_cell(line, s.S[i]);
            append_cell(line, s.lambda_plus[i]);
            append_cell(line, s.lambda_minus[i]);
        }
        if (wants(spec, Output::photon_pop)) append_cell(line, s.photon_pop[i]);
        if (wants(spec, Output::bloch))
            for (double c : s.bloch[i]) append_cell(line, c);
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<RenderedFile> render_trajectories(const SweepSpec& spec) {
    validate(spec);
    const auto params = parameter_sets(spec);
    const std::string hash = config_hash(spec);
    std::vector<RenderedFile> files(params.size());
    parallel_for(params.size(), spec.threads, [&](std::size_t i) {
        files[i] = {trajectory_file_name(spec.delta_over_beta[i]), render_csv(spec, solve(params[i], spec), hash)};
    });
    return files;
}

RunManifest make_manifest(const SweepSpec& spec, const std::vector<RenderedFile>& files) {
    RunManifest m;
    m.spec = spec;
    m.params = parameter_sets(spec);
    m.volterra = trajectory_volterra_config(spec);
    m.config_sha256 = config_hash(spec);
    for (const auto& f : files) m.files.push_back({f.name, sha256_hex(f.content), f.content.size()});
    m.output_sha256 = output_hash(m.files);
    return m;
}

RunManifest run_trajectory(const SweepSpec& spec, const std::filesystem::path& out_dir) {
    const auto files = render_trajectories(spec);
    const RunManifest manifest = make_manifest(spec, files);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::io_failure, "cannot create " + out_dir.string() + ": " + ec.message());
    for (const auto& f : files) write_file(out_dir / f.name, f.content);
    write_file(out_dir / kManifestFile, serialize(manifest));
    return manifest;
}

std::vector<std::string> verify_run(const std::filesystem::path& dir) {
    const RunManifest recorded = parse_manifest(read_file(dir / kManifestFile));
    std::vector<std::string> problems;
    if (recorded.tool_version != kToolVersion)
        problems.push_back("tool version " + recorded.tool_version + " differs from " + kToolVersion);
    const RunManifest fresh = make_manifest(recorded.spec, render_trajectories(recorded.spec));
    if (fresh.config_sha256 != recorded.config_sha256) problems.push_back("config hash mismatch");
    if (fresh.output_sha256 != recorded.output_sha256) problems.push_back("output hash mismatch");
    if (output_hash(recorded.files) != recorded.output_sha256) problems.push_back("recorded output hash inconsistent");
    for (std::size_t i = 0; i < recorded.files.size(); ++i) {
        const auto& rec = recorded.files[i];
        if (i >= fresh.files.size() || !(fresh.files[i] == rec))
            problems.push_back(rec.name + ": recomputed content differs");
        std::error_code ec;
        if (!std::filesystem::exists(dir / rec.name, ec)) {
            problems.push_back(rec.name + ": missing on disk");
            continue;
        }
        if (sha256_hex(read_file(dir / rec.name)) != rec.sha256) problems.push_back(rec.name + ": on-disk hash differs");
    }
    return problems;
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    for (const auto& row : rows)
        for (const auto& c : row.checks)
            if (!c.passed)
                out.push_back("delta_over_beta=" + format_double(row.delta_over_beta) + ": " + c.name +
                              (c.detail.empty() ? "" : " [" + c.detail + "]"));
    return out;
}

namespace {

void add_check(ParameterReport& r, std::string name, double worst, double limit) {
    r.checks.push_back({std::move(name), worst <= limit, worst, limit, {}});
}

// Trace, positivity, conservation and eigenvalue consistency over a trajectory.
void density_checks(ParameterReport& r, const AmplitudeTrajectory& traj, const std::string& prefix) {
    double trace = 0.0, negdet = 0.0, conservation = 0.0, eig = 0.0;
    const double s2 = std::pow(std::sin(0.5 * traj.params.theta0), 2);
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        const QubitDensityMatrix rho = density_matrix(traj, i);
        trace = std::max(trace, std::abs(rho.rho11 + rho.rho00 - 1.0));
        const double det = rho.rho11 * rho.rho00 - std::norm(rho.rho10);
        negdet = std::max(negdet, -det);
        conservation = std::max(conservation, std::abs(rho.rho11 + photon_population(traj, i) + s2 - 1.0));
        const Eigenvalues a = eigenvalues(rho);
        const Eigenvalues b = eigenvalues_decomposed(rho);
        eig = std::max({eig, std::abs(a.plus - b.plus), std::abs(a.minus - b.minus)});
    }
    add_check(r, prefix + "trace", trace, 1e-12);
    add_check(r, prefix + "positivity", negdet, 1e-12);
    add_check(r, prefix + "conservation", conservation, 1e-12);
    add_check(r, prefix + "eigenvalue_consistency", eig, 1e-10);
}

ParameterReport validate_one(const SweepSpec& spec, const SystemParams& params, double dob,
                             const ValidationOptions& opt) {
    ParameterReport r;
    r.delta_over_beta = dob;
    const ReducedParams red = reduce(params);
    r.degenerate = indicial_roots(red).kind == RootKind::degenerate;

    const TimeGrid grid = TimeGrid::uniform(spec.t_max, spec.n_points);
    const AmplitudeTrajectory closed = closed_form_amplitude(params, grid);
    density_checks(r, closed, "closed_");

    VolterraConfig cfg{spec.volterra_step, spec.volterra_scheme, spec.t_max, true};
    std::optional<AmplitudeTrajectory> solved;
    try {
        solved = volterra_solve(params, cfg);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::step_too_coarse) throw;
        r.checks.push_back({"step_halving", false, 0.0, kStepChangeLimit, e.what()});
        return r;
    }
    r.checks.push_back({"step_halving", true, 0.0, kStepChangeLimit, {}});
    const AmplitudeTrajectory& fine = *solved;
    density_checks(r, fine, "volterra_");

    const auto error_at = [&](const AmplitudeTrajectory& v) {
        return max_abs_diff(closed_form_amplitude(params, v.grid).U, v.U);
    };
    r.max_abs_error = error_at(fine);
    add_check(r, "oracle_equivalence", *r.max_abs_error, spec.tolerance);

    // Errors at h, 2h, 4h; orders from successive ratios.
    r.convergence.push_back({cfg.step, *r.max_abs_error, std::nullopt});
    for (int k = 1; k <= 2; ++k) {
        VolterraConfig coarse = cfg;
        coarse.step = cfg.step * std::ldexp(1.0, k);
        coarse.halving_check = false;
        if (coarse.step > spec.t_max / 4.0) break;
        r.convergence.push_back({coarse.step, error_at(volterra_solve(params, coarse)), std::nullopt});
    }
    std::reverse(r.convergence.begin(), r.convergence.end());
    for (std::size_t i = 1; i < r.convergence.size(); ++i) {
        const double coarse = r.convergence[i - 1].max_abs_error, finer = r.convergence[i].max_abs_error;
        if (coarse > opt.order_noise_floor && finer > 0.0) r.convergence[i].order = std::log2(coarse / finer);
    }
    const double min_order = spec.volterra_scheme == ProductRule::product_trapezoid ? 1.5 : 0.9;
    if (const auto order = r.convergence.back().order)
        r.checks.push_back({"convergence_order (minimum)", *order >= min_order, *order, min_order, {}});

    if (r.degenerate) {
        const double eps = opt.continuity_offset;
        double worst = 0.0;
        for (double shift : {-eps, eps}) {
            const ReducedParams near{red.b, red.delta + shift};
            for (std::size_t i = 0; i < grid.size(); ++i)
                worst = std::max(worst, std::abs(closed_form_point(red, grid[i], Formula::degenerate).U -
                                                 closed_form_point(near, grid[i], Formula::distinct).U));
        }
        add_check(r, "degenerate_continuity", worst, spec.tolerance);
    }

    if (opt.bromwich) {
        const AmplitudeTrajectory lap = laplace_invert(params, grid);
        r.bromwich_max_abs_error = max_abs_diff(closed.U, lap.U);
        add_check(r, "bromwich_agreement", *r.bromwich_max_abs_error, spec.tolerance);
    }
    return r;
}

}  // namespace

ValidationReport run_validate(const SweepSpec& spec, const ValidationOptions& options) {
    validate(spec);
    const auto params = parameter_sets(spec);
    ValidationReport report;
    report.rows.resize(params.size());
    parallel_for(params.size(), spec.threads, [&](std::size_t i) {
        report.rows[i] = validate_one(spec, params[i], spec.delta_over_beta[i], options);
    });
    return report;
}

std::string render_report(const ValidationReport& report) {
    std::ostringstream out;
    for (const auto& row : report.rows) {
        out << "delta_over_beta " << format_double(row.delta_over_beta) << (row.degenerate ? " (degenerate roots)" : "")
            << '\n';
        if (row.max_abs_error) out << "  max |U_closed - U_volterra| = " << format_double(*row.max_abs_error) << '\n';
        if (row.bromwich_max_abs_error)
            out << "  max |U_closed - U_bromwich| = " << format_double(*row.bromwich_max_abs_error) << '\n';
        if (!row.convergence.empty()) {
            out << "  step,max_abs_error,order\n";
            for (const auto& c : row.convergence)
                out << "  " << format_double(c.step) << ',' << format_double(c.max_abs_error) << ','
                    << (c.order ? format_double(*c.order) : "") << '\n';
        }
        for (const auto& c : row.checks) {
            out << "  " << (c.passed ? "pass " : "FAIL ") << c.name;
            if (c.detail.empty())
                out << " (observed " << format_double(c.worst) << ", limit " << format_double(c.limit) << ")\n";
            else
                out << " (" << c.detail << ")\n";
        }
    }
    return out.str();
}

void require_pass(const ValidationReport& report) {
    const auto failed = report.failures();
    if (failed.empty()) return;
    std::string msg;
    for (const auto& f : failed) msg += (msg.empty() ? "" : "; ") + f;
    throw Error(ErrorCode::gate_failure, msg);
}

std::vector<SteadyRow> run_steady(const SweepSpec& spec) {
    validate(spec);
    const auto params = parameter_sets(spec);
    std::vector<SteadyRow> rows(params.size());
    parallel_for(params.size(), spec.threads, [&](std::size_t i) {
        const AmplitudeTrajectory v = volterra_solve(params[i], {spec.volterra_step, spec.volterra_scheme, spec.t_max, true});
        SteadyRow& row = rows[i];
        row.delta_over_beta = spec.delta_over_beta[i];
        row.window_end = spec.t_max;
        row.window_begin = spec.t_max * (1.0 - kSteadyWindowFraction);
        double area = 0.0;
        for (std::size_t k = 1; k < v.grid.size(); ++k) {
            const double a = std::max(v.grid[k - 1], row.window_begin), b = std::min(v.grid[k], row.window_end);
            if (b <= a) continue;
            // P is linear across the cell to trapezoid accuracy.
            const double span = v.grid[k] - v.grid[k - 1];
            const double p0 = std::norm(v.U[k - 1]), p1 = std::norm(v.U[k]);
            const double pa = p0 + (p1 - p0) * (a - v.grid[k - 1]) / span;
            const double pb = p0 + (p1 - p0) * (b - v.grid[k - 1]) / span;
            area += 0.5 * (pa + pb) * (b - a);
        }
        row.empirical = area / (row.window_end - row.window_begin);
        row.formula = steady_state_probability(params[i]);
        if (row.formula) row.difference = row.empirical - *row.formula;
    });
    return rows;
}

std::string render_steady(const std::vector<SteadyRow>& rows) {
    std::string out = "delta_over_beta,formula,empirical,difference,window_begin,window_end\n";
    for (const auto& r : rows) {
        out += format_double(r.delta_over_beta);
        out += ',';
        out += r.formula ? format_double(*r.formula) : "none";
        out += ',' + format_double(r.empirical) + ',';
        if (r.difference) out += format_double(*r.difference);
        out += ',' + format_double(r.window_begin) + ',' + format_double(r.window_end) + '\n';
    }
    return out;
}

}  // namespace fracqubit::pipeline
