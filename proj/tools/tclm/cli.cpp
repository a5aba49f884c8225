#include "cli.hpp"

#include <tclm/asymptotics.hpp>
#include <tclm/characterize.hpp>
#include <tclm/fit.hpp>
#include <tclm/io.hpp>
#include <tclm/parallel.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace tclm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* flag)
{
    std::vector<double> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        const std::string t = item.substr(first, last - first + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
            throw ParseError(std::string(flag) + ": invalid number '" + t + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
std::string render(Fn&& fn)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    fn(os);
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct ModelFlags {
    std::string patient;
    std::string patients_file;
    std::optional<double> beta, delta, p, c, u0, i0, v0;

    void add(CLI::App& app, bool with_patient = true)
    {
        if (with_patient) {
            app.add_option("--patient", patient, "Patient id from the cohort (A-I)");
            app.add_option("--patients", patients_file, "Patients JSON file replacing the built-in cohort")
                ->check(CLI::ExistingFile);
        }
        app.add_option("--beta", beta, "Infection rate");
        app.add_option("--delta", delta, "Infected-cell death rate");
        app.add_option("--p", p, "Virion production rate");
        app.add_option("--c", c, "Virus clearance rate");
        app.add_option("--u0", u0, "Initial susceptible cells");
        app.add_option("--i0", i0, "Initial infected cells");
        app.add_option("--v0", v0, "Initial viral load");
    }
};

struct Resolved {
    std::string name;
    ModelParams params;
    InitialCondition x0;
};

std::vector<PatientConfig> cohort(const std::string& patients_file)
{
    return patients_file.empty() ? builtin_patients() : load_patients(patients_file);
}

const PatientConfig& find_patient(const std::vector<PatientConfig>& all, const std::string& id)
{
    for (const PatientConfig& pc : all) {
        if (pc.id == id) {
            return pc;
        }
    }
    throw UsageError("unknown patient '" + id + "'");
}

Resolved resolve(const ModelFlags& f)
{
    Resolved r;
    if (!f.patient.empty()) {
        const auto all = cohort(f.patients_file);
        const PatientConfig& pc = find_patient(all, f.patient);
        r.name = pc.id;
        r.params = pc.params;
        r.x0 = pc.initial_condition();
    } else {
        if (!f.beta || !f.delta || !f.p || !f.c) {
            throw UsageError("give --patient or all of --beta --delta --p --c");
        }
        if (!f.u0 || !f.v0) {
            throw UsageError("inline parameters need --u0 and --v0");
        }
        r.name = "custom";
        r.params = ModelParams::make(*f.beta, *f.delta, *f.p, *f.c);
    }
    ModelParams m = r.params;
    if (f.beta) m.beta = *f.beta;
    if (f.delta) m.delta = *f.delta;
    if (f.p) m.p = *f.p;
    if (f.c) m.c = *f.c;
    r.params = ModelParams::make(m.beta, m.delta, m.p, m.c);
    if (f.u0) r.x0.state0.U = *f.u0;
    if (f.i0) r.x0.state0.I = *f.i0;
    if (f.v0) r.x0.state0.V = *f.v0;
    validate(r.x0.state0);
    return r;
}

struct IntegratorFlags {
    IntegratorConfig cfg;
    bool no_early_stop = false;

    void add(CLI::App& app)
    {
        app.add_option("--t-max", cfg.t_max, "Integration horizon [day]")->capture_default_str();
        app.add_option("--rel-tol", cfg.rel_tol, "Relative tolerance")->capture_default_str();
        app.add_option("--abs-tol", cfg.abs_tol, "Absolute tolerance")->capture_default_str();
        app.add_option("--max-step", cfg.max_step, "Largest step [day]")->capture_default_str();
        app.add_option("--v-clear", cfg.v_clear, "Clearance level [copies/mL]")->capture_default_str();
        app.add_flag("--no-early-stop", no_early_stop, "Integrate to the horizon even after clearance");
    }

    IntegratorConfig get() const
    {
        IntegratorConfig out = cfg;
        if (no_early_stop) {
            out.early_stop = false;
        }
        out.validate();
        return out;
    }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
    ModelFlags model;
    IntegratorFlags integ;
    double pso_offset = 7.0;
    bool no_pso = false;
    bool svg = false;
    std::string out_dir = ".";
    std::string from_report;
};

struct SimulateSetup {
    std::string name;
    ModelParams params;
    InitialCondition x0;
    IntegratorConfig cfg;
    std::optional<double> pso;
};

json simulate_config_json(const SimulateSetup& s)
{
    return {{"name", s.name},
            {"params", to_json(s.params)},
            {"initial", to_json(s.x0)},
            {"integrator", to_json(s.cfg)},
            {"pso_offset", s.pso ? json(*s.pso) : json(nullptr)}};
}

SimulateSetup setup_from_report(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open report " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("report " + path.string() + ": " + e.what());
    }
    if (!doc.contains("config") || !doc.at("config").is_object()) {
        throw ParseError("report " + path.string() + ": missing 'config'");
    }
    const json& c = doc.at("config");
    SimulateSetup s;
    if (!c.contains("name") || !c.contains("params") || !c.contains("initial") ||
        !c.contains("integrator")) {
        throw ParseError("report " + path.string() + ": incomplete config echo");
    }
    s.name = c.at("name").get<std::string>();
    s.params = params_from_json(c.at("params"));
    s.x0 = initial_condition_from_json(c.at("initial"));
    s.cfg = integrator_config_from_json(c.at("integrator"));
    if (c.contains("pso_offset") && c.at("pso_offset").is_number()) {
        s.pso = c.at("pso_offset").get<double>();
    }
    return s;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream&)
{
    const auto t0 = std::chrono::steady_clock::now();
    SimulateSetup s;
    if (!o.from_report.empty()) {
        s = setup_from_report(o.from_report);
    } else {
        const Resolved r = resolve(o.model);
        s.name = r.name;
        s.params = r.params;
        s.x0 = r.x0;
        s.cfg = o.integ.get();
        if (!o.no_pso) {
            s.pso = o.pso_offset;
        }
    }

    const Trajectory traj = integrate(s.x0, s.params, s.cfg);

    const fs::path dir(o.out_dir);
    const fs::path csv_path = dir / (s.name + "_trajectory.csv");
    const fs::path events_path = dir / (s.name + "_events.json");
    const fs::path report_path = dir / (s.name + "_report.json");
    write_file_atomic(csv_path, render([&](std::ostream& os) { write_trajectory_csv(os, traj, s.pso); }));
    write_file_atomic(events_path, json_text(events_to_json(traj.events())));

    json files = {{"trajectory_csv", csv_path.string()}, {"events_json", events_path.string()}};
    if (o.svg) {
        const fs::path svg_path = dir / (s.name + "_trajectory.svg");
        write_file_atomic(svg_path, trajectory_svg(traj, "trajectory " + s.name));
        files["svg"] = svg_path.string();
    }

    json characterization = nullptr;
    if (in_open_region(s.x0.state0)) {
        characterization = to_json(characterize(s.x0, traj, s.cfg));
    }
    const json report = {{"schema_version", kReportSchemaVersion},
                         {"tool_version", std::string(tool_version())},
                         {"command", "simulate"},
                         {"config", simulate_config_json(s)},
                         {"characterization", characterization},
                         {"stop_reason", traj.stop_reason() == StopReason::Clearance ? "clearance" : "horizon"},
                         {"samples", traj.samples().size()},
                         {"files", files},
                         {"wall_time_s", seconds_since(t0)}};
    write_file_atomic(report_path, json_text(report));

    out << "simulate " << s.name << ": " << traj.samples().size() << " samples to t = " << traj.t_end()
        << " d (" << (traj.stop_reason() == StopReason::Clearance ? "clearance" : "horizon") << ")\n";
    for (const Event& e : traj.events()) {
        out << "  " << std::left << std::setw(12) << to_string(e.kind) << " t = " << std::setprecision(6)
            << e.time << "  U = " << e.state.U << "  I = " << e.state.I << "  V = " << e.state.V << '\n';
    }
    out << "wrote " << csv_path.string() << ", " << events_path.string() << ", " << report_path.string()
        << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------------------
// characterize

struct CharacterizeCmdOptions {
    std::vector<std::string> patients;
    bool all = false;
    std::string patients_file;
    bool alpha = false;
    double alpha_tol = 1e-3;
    int threads = 1;
    IntegratorFlags integ;
    std::string out_dir = ".";
};

int cmd_characterize(const CharacterizeCmdOptions& o, std::ostream& out, std::ostream&)
{
    const auto all = cohort(o.patients_file);
    std::vector<PatientConfig> selected;
    if (o.all) {
        selected = all;
    } else if (!o.patients.empty()) {
        for (const std::string& id : o.patients) {
            selected.push_back(find_patient(all, id));
        }
    } else {
        throw UsageError("characterize needs --patient or --all");
    }
    const IntegratorConfig cfg = o.integ.get();
    CharacterizeOptions copts;
    copts.compute_alpha = o.alpha;
    copts.alpha_tol = o.alpha_tol;

    const fs::path dir(o.out_dir);
    std::vector<Table2Row> rows(selected.size());
    parallel_for(selected.size(), o.threads, [&](std::size_t i) {
        const PatientConfig& pc = selected[i];
        rows[i] = {pc.id, characterize(pc.initial_condition(), pc.params, cfg, copts)};
        const PatientConfig one[] = {pc};
        const json doc = {{"schema_version", kReportSchemaVersion},
                          {"tool_version", std::string(tool_version())},
                          {"command", "characterize"},
                          {"patient", patients_to_json(one).at("patients").at(0)},
                          {"integrator", to_json(cfg)},
                          {"alpha_tol", o.alpha ? json(o.alpha_tol) : json(nullptr)},
                          {"characterization", to_json(rows[i].report)}};
        write_file_atomic(dir / (pc.id + "_characterization.json"), json_text(doc));
    });

    const std::string table = render([&](std::ostream& os) { write_table2_csv(os, rows, o.alpha); });
    write_file_atomic(dir / "table2.csv", table);
    out << table;
    return kSuccess;
}

// ---------------------------------------------------------------------------
// fit

struct FitCmdOptions {
    std::string data;
    std::optional<std::uint64_t> seed;
    int generations = 300;
    int population = 40;
    bool fit_v0 = false;
    std::vector<std::string> bounds;
    double u0 = 1e7;
    double i0 = 0.0;
    double v0 = 1.0;
    double lod = 100.0;
    int threads = 1;
    IntegratorFlags integ;
    std::string out_dir = ".";
};

void apply_bound(FitBounds& b, const std::string& spec)
{
    const auto eq = spec.find('=');
    const auto colon = spec.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
        throw UsageError("--bound expects name=lo:hi, got '" + spec + "'");
    }
    const std::string name = spec.substr(0, eq);
    const auto lo = parse_list(spec.substr(eq + 1, colon - eq - 1), "--bound");
    const auto hi = parse_list(spec.substr(colon + 1), "--bound");
    if (lo.size() != 1 || hi.size() != 1) {
        throw UsageError("--bound expects name=lo:hi, got '" + spec + "'");
    }
    ParamBounds pb{lo[0], hi[0]};
    if (name == "beta") b.beta = pb;
    else if (name == "delta") b.delta = pb;
    else if (name == "p") b.p = pb;
    else if (name == "c") b.c = pb;
    else if (name == "v0") b.v0 = pb;
    else throw UsageError("--bound: unknown parameter '" + name + "'");
}

int cmd_fit(const FitCmdOptions& o, std::ostream& out, std::ostream&)
{
    const auto t0 = std::chrono::steady_clock::now();
    FitProblem problem;
    problem.data = read_measurements_csv(fs::path(o.data));
    problem.u0 = o.u0;
    problem.i0 = o.i0;
    problem.v0 = o.v0;
    problem.fit_v0 = o.fit_v0;
    problem.lod = o.lod;
    for (const std::string& b : o.bounds) {
        apply_bound(problem.bounds, b);
    }
    problem.validate();

    DEConfig de;
    de.rng_seed = *o.seed;
    de.max_generations = o.generations;
    de.population_size = o.population;
    de.workers = o.threads;
    const IntegratorConfig cfg = o.integ.get();

    const FitResult result = fit_de(problem, de, cfg);

    IntegratorConfig forward = cfg;
    forward.early_stop = false;
    forward.t_max = std::max(problem.data.empty() ? cfg.t_max : problem.data.back().t, 1e-9);
    const Trajectory best = integrate({{problem.u0, problem.i0, result.v0}, 0.0}, result.params, forward);

    const fs::path dir(o.out_dir);
    const fs::path traj_path = dir / "fit_trajectory.csv";
    const fs::path result_path = dir / "fit_result.json";
    write_file_atomic(traj_path, render([&](std::ostream& os) { write_trajectory_csv(os, best); }));

    const json doc = {{"schema_version", kReportSchemaVersion},
                      {"tool_version", std::string(tool_version())},
                      {"command", "fit"},
                      {"config",
                       {{"data_file", o.data},
                        {"measurements", problem.data.size()},
                        {"u0", problem.u0},
                        {"i0", problem.i0},
                        {"v0", problem.v0},
                        {"fit_v0", problem.fit_v0},
                        {"lod", problem.lod},
                        {"bounds", to_json(problem.bounds)},
                        {"de", to_json(de)},
                        {"integrator", to_json(cfg)}}},
                      {"result", to_json(result)},
                      {"files", {{"trajectory_csv", traj_path.string()}}},
                      {"wall_time_s", seconds_since(t0)}};
    write_file_atomic(result_path, json_text(doc));

    out << std::setprecision(6) << "fit: cost " << result.cost << " after " << result.generations_used
        << " generations (" << (result.converged ? "converged" : "not converged") << ")\n"
        << "  beta = " << result.params.beta << "  delta = " << result.params.delta
        << "  p = " << result.params.p << "  c = " << result.params.c << "  v0 = " << result.v0 << '\n'
        << "wrote " << result_path.string() << ", " << traj_path.string() << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
    std::string u0_list;
    std::string v0_list;
    double i0 = 0.0;
    double beta = 1.0, delta = 1.0, p = 1.0, c = 1.0;
    IntegratorFlags integ;
    bool early_stop = false;
    bool uinf_curve = false;
    int uinf_points = 200;
    double uinf_max = 10.0;
    int threads = 1;
    std::string out_dir = ".";
};

int cmd_sweep(SweepOptions o, std::ostream& out, std::ostream&)
{
    const auto u0s = parse_list(o.u0_list, "--u0-list");
    const auto v0s = parse_list(o.v0_list, "--v0-list");
    if (u0s.empty() || v0s.empty()) {
        throw UsageError("sweep: empty grid");
    }
    const ModelParams params = ModelParams::make(o.beta, o.delta, o.p, o.c);
    if (!o.early_stop) {
        o.integ.no_early_stop = true;
    }
    const IntegratorConfig cfg = o.integ.get();

    struct Point {
        State x0;
        State end;
        double t_end = 0.0;
        std::optional<double> u_inf;
    };
    std::vector<Point> grid;
    for (double u0 : u0s) {
        for (double v0 : v0s) {
            Point pt;
            pt.x0 = {u0, o.i0, v0};
            validate(pt.x0);
            grid.push_back(pt);
        }
    }

    const fs::path dir(o.out_dir);
    parallel_for(grid.size(), o.threads, [&](std::size_t k) {
        Point& pt = grid[k];
        const Trajectory traj = integrate({pt.x0, 0.0}, params, cfg);
        pt.end = traj.final_state();
        pt.t_end = traj.t_end();
        if (pt.x0.U > 0.0) {
            try {
                pt.u_inf = u_infinity(pt.x0.U, pt.x0.I, pt.x0.V, params).u_infinity;
            } catch (const DomainError&) {
            }
        }
        write_file_atomic(dir / ("sweep_" + std::to_string(k) + ".csv"),
                          render([&](std::ostream& os) { write_trajectory_csv(os, traj); }));
    });

    const double uc = critical_u(params);
    bool all_below = true;
    const std::string table = render([&](std::ostream& os) {
        os << "index,U0,I0,V0,t_end,U_end,I_end,V_end,U_inf_closed,U_end_below_Uc\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Point& pt = grid[k];
            const bool below = pt.end.U < uc;
            all_below = all_below && below;
            os << k << ',' << format_double(pt.x0.U) << ',' << format_double(pt.x0.I) << ','
               << format_double(pt.x0.V) << ',' << format_double(pt.t_end) << ','
               << format_double(pt.end.U) << ',' << format_double(pt.end.I) << ','
               << format_double(pt.end.V) << ',' << (pt.u_inf ? format_double(*pt.u_inf) : "") << ','
               << (below ? 1 : 0) << '\n';
        }
    });
    write_file_atomic(dir / "sweep_terminal.csv", table);

    out << "    U0          V0          U_end       I_end       V_end\n";
    for (const Point& pt : grid) {
        out << std::scientific << std::setprecision(4) << std::setw(12) << pt.x0.U << std::setw(12)
            << pt.x0.V << std::setw(12) << pt.end.U << std::setw(12) << pt.end.I << std::setw(12)
            << pt.end.V << '\n';
    }
    out << std::defaultfloat << "U_c = " << uc << "; all terminal U < U_c: " << (all_below ? "yes" : "no")
        << '\n';

    if (o.uinf_curve) {
        if (o.uinf_points < 2 || !(o.uinf_max > 0.0)) {
            throw UsageError("--uinf-points must be >= 2 and --uinf-max > 0");
        }
        const std::string curve = render([&](std::ostream& os) {
            os << "U0,V0,U_inf\n";
            for (double v0 : v0s) {
                for (int i = 1; i <= o.uinf_points; ++i) {
                    const double u0 = o.uinf_max * uc * i / o.uinf_points;
                    std::string value;
                    try {
                        value = format_double(u_infinity(u0, o.i0, v0, params).u_infinity);
                    } catch (const DomainError&) {
                    }
                    os << format_double(u0) << ',' << format_double(v0) << ',' << value << '\n';
                }
            }
        });
        write_file_atomic(dir / "uinf_curve.csv", curve);
        out << "wrote " << (dir / "uinf_curve.csv").string() << '\n';
    }
    return kSuccess;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
    ModelFlags model;
    IntegratorFlags integ;
    std::string times;
    double t_from = 1.0;
    double t_to = 20.0;
    int points = 12;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    double lod = 100.0;
    std::string out_file;
};

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream&)
{
    const Resolved r = resolve(o.model);
    std::vector<double> times;
    if (!o.times.empty()) {
        times = parse_list(o.times, "--times");
    } else {
        if (o.points < 1 || !(o.t_to >= o.t_from) || o.t_from < 0.0) {
            throw UsageError("synth: need --points >= 1 and 0 <= --t-from <= --t-to");
        }
        for (int k = 0; k < o.points; ++k) {
            times.push_back(o.points == 1 ? o.t_from
                                          : o.t_from + (o.t_to - o.t_from) * k / (o.points - 1));
        }
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0 || (k > 0 && !(times[k] > times[k - 1]))) {
            throw UsageError("synth: times must be >= 0 and strictly increasing");
        }
    }
    const auto data = synthesize_measurements(r.params, r.x0.state0, times, o.lod, o.noise_sd, o.seed,
                                              o.integ.get());
    const std::string csv = render([&](std::ostream& os) { write_measurements_csv(os, data); });
    if (o.out_file.empty()) {
        out << csv;
    } else {
        write_file_atomic(o.out_file, csv);
        out << "wrote " << data.size() << " measurements to " << o.out_file << '\n';
    }
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Target-cell-limited viral dynamics: simulation, characterization and fitting", "tclm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    SimulateOptions sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Integrate one trajectory and write CSV/JSON");
    sim.model.add(*simulate);
    sim.integ.add(*simulate);
    simulate->add_option("--pso-offset", sim.pso_offset, "Symptom-onset offset for the t_pso column [day]")
        ->capture_default_str();
    simulate->add_flag("--no-pso", sim.no_pso, "Omit the t_pso column");
    simulate->add_flag("--svg", sim.svg, "Also write an SVG chart");
    simulate->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
    simulate->add_option("--from-report", sim.from_report, "Re-run the config echoed in a report JSON")
        ->check(CLI::ExistingFile);

    CharacterizeCmdOptions chr;
    CLI::App* characterize_cmd = app.add_subcommand("characterize", "Characterization table per patient");
    characterize_cmd->add_option("--patient", chr.patients, "Patient id (repeatable)");
    characterize_cmd->add_flag("--all", chr.all, "All patients in the cohort");
    characterize_cmd->add_option("--patients", chr.patients_file, "Patients JSON file")
        ->check(CLI::ExistingFile);
    characterize_cmd->add_flag("--alpha", chr.alpha, "Compute the spread threshold alpha(0)");
    characterize_cmd->add_option("--alpha-tol", chr.alpha_tol, "Bisection tolerance on alpha")
        ->capture_default_str();
    characterize_cmd->add_option("--threads", chr.threads, "Worker threads")->capture_default_str();
    characterize_cmd->add_option("--out", chr.out_dir, "Output directory")->capture_default_str();
    chr.integ.add(*characterize_cmd);

    FitCmdOptions fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Differential-evolution fit to a viral-load series");
    fit_cmd->add_option("data", fit.data, "Measurement CSV (t_days,viral_load,below_lod)")->required();
    fit_cmd->add_option("--seed", fit.seed, "RNG seed")->required();
    fit_cmd->add_option("--generations", fit.generations, "Generation budget")->capture_default_str();
    fit_cmd->add_option("--pop", fit.population, "Population size")->capture_default_str();
    fit_cmd->add_flag("--fit-v0", fit.fit_v0, "Fit V0 as a fifth dimension");
    fit_cmd->add_option("--bound", fit.bounds, "Search bound name=lo:hi (beta, delta, p, c, v0)");
    fit_cmd->add_option("--u0", fit.u0, "Initial susceptible cells")->capture_default_str();
    fit_cmd->add_option("--i0", fit.i0, "Initial infected cells")->capture_default_str();
    fit_cmd->add_option("--v0", fit.v0, "Initial viral load (fixed unless --fit-v0)")->capture_default_str();
    fit_cmd->add_option("--lod", fit.lod, "Detection limit [copies/mL]")->capture_default_str();
    fit_cmd->add_option("--threads", fit.threads, "Worker threads")->capture_default_str();
    fit_cmd->add_option("--out", fit.out_dir, "Output directory")->capture_default_str();
    fit.integ.add(*fit_cmd);

    SweepOptions sw;
    CLI::App* sweep = app.add_subcommand("sweep", "Grid of initial states (phase-portrait data)");
    sweep->add_option("--u0-list", sw.u0_list, "Comma-separated U0 values")->required();
    sweep->add_option("--v0-list", sw.v0_list, "Comma-separated V0 values")->required();
    sweep->add_option("--i0", sw.i0, "Initial infected cells")->capture_default_str();
    sweep->add_option("--beta", sw.beta)->capture_default_str();
    sweep->add_option("--delta", sw.delta)->capture_default_str();
    sweep->add_option("--p", sw.p)->capture_default_str();
    sweep->add_option("--c", sw.c)->capture_default_str();
    sweep->add_flag("--early-stop", sw.early_stop, "Stop each run at clearance");
    sweep->add_flag("--uinf-curve", sw.uinf_curve, "Also export U_inf(U0) for each V0");
    sweep->add_option("--uinf-points", sw.uinf_points, "Points on the U_inf curve")->capture_default_str();
    sweep->add_option("--uinf-max", sw.uinf_max, "Curve extent in multiples of U_c")->capture_default_str();
    sweep->add_option("--threads", sw.threads, "Worker threads")->capture_default_str();
    sweep->add_option("--out", sw.out_dir, "Output directory")->capture_default_str();
    sweep->add_option("--t-max", sw.integ.cfg.t_max, "Integration horizon [day]")->capture_default_str();
    sweep->add_option("--rel-tol", sw.integ.cfg.rel_tol, "Relative tolerance")->capture_default_str();
    sweep->add_option("--abs-tol", sw.integ.cfg.abs_tol, "Absolute tolerance")->capture_default_str();

    SynthOptions syn;
    CLI::App* synth = app.add_subcommand("synth", "Synthetic measurement CSV from the forward model");
    syn.model.add(*synth);
    synth->add_option("--times", syn.times, "Comma-separated sample times [day]");
    synth->add_option("--t-from", syn.t_from)->capture_default_str();
    synth->add_option("--t-to", syn.t_to)->capture_default_str();
    synth->add_option("--points", syn.points)->capture_default_str();
    synth->add_option("--noise-sd", syn.noise_sd, "Gaussian noise on log10 V")->capture_default_str();
    synth->add_option("--seed", syn.seed, "Noise seed")->capture_default_str();
    synth->add_option("--lod", syn.lod, "Detection limit")->capture_default_str();
    synth->add_option("--out", syn.out_file, "Output CSV (default: stdout)");
    synth->add_option("--rel-tol", syn.integ.cfg.rel_tol)->capture_default_str();
    synth->add_option("--abs-tol", syn.integ.cfg.abs_tol)->capture_default_str();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out, err);
        if (characterize_cmd->parsed()) return cmd_characterize(chr, out, err);
        if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
        if (sweep->parsed()) return cmd_sweep(sw, out, err);
        if (synth->parsed()) return cmd_synth(syn, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kInputError;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kInputError;
    } catch (const DegenerateCostError& e) {
        err << "degenerate cost: " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInputError;
    } catch (const IntegrationError& e) {
        err << "numerical failure: " << e.what() << " (integrated to t = " << e.partial().t_end()
            << ")\n";
        return kNumericalFailure;
    } catch (const ThresholdNotFound& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kInputError;
}

}  // namespace tclm::cli
