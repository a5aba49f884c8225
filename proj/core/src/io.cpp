#include <tclm/io.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace tclm {

using nlohmann::json;

std::string_view tool_version() noexcept { return "0.1.0"; }

std::vector<PatientConfig> builtin_patients()
{
    struct Row {
        const char* id;
        double beta, delta, p, c, k0;
    };
    // k0 is the initial-condition constant reported alongside the fits; V0 is
    // recovered from it with I0 = 0.
    static constexpr Row rows[] = {
        {"A", 9.98e-8, 0.61, 9.3, 2.3, -2.17e-7},   {"B", 1.77e-7, 14.11, 20.2, 0.8, -6.87e-8},
        {"C", 8.89e-7, 79.51, 134.4, 0.4, -6.89e-7}, {"D", 3.15e-8, 45.51, 620.2, 2.0, -4.89e-9},
        {"E", 5.61e-8, 7.51, 96.4, 5.0, -3.48e-9},  {"F", 1.41e-8, 37.61, 995.0, 0.6, -7.28e-9},
        {"G", 1.77e-8, 8.21, 338.4, 5.0, -1.1e-9},  {"H", 1.58e-8, 21.11, 927.8, 1.8, -2.72e-9},
        {"I", 4.46e-9, 4.21, 994.6, 4.3, -3.21e-10},
    };
    std::vector<PatientConfig> out;
    for (const Row& r : rows) {
        PatientConfig pc;
        pc.id = r.id;
        pc.params = ModelParams::make(r.beta, r.delta, r.p, r.c);
        pc.u0 = 1e7;
        pc.i0 = 0.0;
        pc.v0 = -r.k0 * r.c / r.beta;
        std::ostringstream src;
        src << "cohort fit; v0 back-derived as -K0*c/beta, K0 = " << r.k0;
        pc.source = src.str();
        out.push_back(std::move(pc));
    }
    return out;
}

namespace {

double number_field(const json& row, const char* field, std::size_t index)
{
    const std::string where = "patients[" + std::to_string(index) + "]";
    if (!row.contains(field)) {
        throw ParseError(where + ": missing field '" + field + "'");
    }
    const json& v = row.at(field);
    if (!v.is_number()) {
        throw ParseError(where + ": field '" + field + "' is not a number");
    }
    return v.get<double>();
}

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double parse_number(std::string_view text, std::size_t line, const char* what)
{
    const std::string t = trim(text);
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (!t.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" + t + "'");
    }
    return value;
}

std::vector<std::string> split_commas(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<PatientConfig> parse_patients(const json& doc)
{
    if (!doc.is_object() || !doc.contains("patients") || !doc.at("patients").is_array()) {
        throw ParseError("patients file: expected an object with a 'patients' array");
    }
    std::vector<PatientConfig> out;
    const json& rows = doc.at("patients");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& row = rows[i];
        const std::string where = "patients[" + std::to_string(i) + "]";
        if (!row.is_object()) {
            throw ParseError(where + ": not an object");
        }
        if (!row.contains("id") || !row.at("id").is_string()) {
            throw ParseError(where + ": missing string field 'id'");
        }
        PatientConfig pc;
        pc.id = row.at("id").get<std::string>();
        const double beta = number_field(row, "beta", i);
        const double delta = number_field(row, "delta", i);
        const double p = number_field(row, "p", i);
        const double c = number_field(row, "c", i);
        try {
            pc.params = ModelParams::make(beta, delta, p, c);
        } catch (const DomainError& e) {
            throw ParseError(where + " (" + pc.id + "): " + e.what());
        }
        pc.u0 = number_field(row, "u0", i);
        pc.i0 = number_field(row, "i0", i);
        pc.v0 = number_field(row, "v0", i);
        if (!(pc.u0 > 0.0)) {
            throw ParseError(where + ": field 'u0' must be > 0");
        }
        if (pc.i0 < 0.0) {
            throw ParseError(where + ": field 'i0' must be >= 0");
        }
        if (pc.v0 < 0.0) {
            throw ParseError(where + ": field 'v0' must be >= 0");
        }
        if (row.contains("source") && row.at("source").is_string()) {
            pc.source = row.at("source").get<std::string>();
        }
        out.push_back(std::move(pc));
    }
    return out;
}

std::vector<PatientConfig> load_patients(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open patients file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("patients file " + path.string() + ": " + e.what());
    }
    return parse_patients(doc);
}

json patients_to_json(std::span<const PatientConfig> patients)
{
    json rows = json::array();
    for (const PatientConfig& pc : patients) {
        rows.push_back({{"id", pc.id},
                        {"beta", pc.params.beta},
                        {"delta", pc.params.delta},
                        {"p", pc.params.p},
                        {"c", pc.params.c},
                        {"u0", pc.u0},
                        {"i0", pc.i0},
                        {"v0", pc.v0},
                        {"source", pc.source}});
    }
    return {{"schema_version", kReportSchemaVersion}, {"patients", rows}};
}

std::string format_double(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    if (ec != std::errc()) {
        return "nan";
    }
    return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::optional<double> pso_offset)
{
    os << "t,U,I,V";
    if (pso_offset) {
        os << ",t_pso";
    }
    os << '\n';
    for (const Sample& s : traj.samples()) {
        os << format_double(s.t) << ',' << format_double(s.x.U) << ',' << format_double(s.x.I) << ','
           << format_double(s.x.V);
        if (pso_offset) {
            os << ',' << format_double(s.t - *pso_offset);
        }
        os << '\n';
    }
}

json events_to_json(std::span<const Event> events)
{
    json out = json::array();
    for (const Event& e : events) {
        out.push_back({{"kind", std::string(to_string(e.kind))},
                       {"time", e.time},
                       {"U", e.state.U},
                       {"I", e.state.I},
                       {"V", e.state.V}});
    }
    return out;
}

json trajectory_to_json(const Trajectory& traj)
{
    json samples = json::array();
    for (const Sample& s : traj.samples()) {
        samples.push_back({s.t, s.x.U, s.x.I, s.x.V});
    }
    return {{"schema_version", kReportSchemaVersion},
            {"params", to_json(traj.params())},
            {"initial", to_json(traj.initial())},
            {"stop_reason", traj.stop_reason() == StopReason::Clearance ? "clearance" : "horizon"},
            {"columns", {"t", "U", "I", "V"}},
            {"samples", samples},
            {"events", events_to_json(traj.events())}};
}

std::vector<Measurement> read_measurements_csv(std::istream& is)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            break;
        }
    }
    if (trim(line) != "t_days,viral_load,below_lod") {
        throw ParseError("measurement CSV: expected header 't_days,viral_load,below_lod'");
    }
    std::vector<Measurement> out;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_commas(line);
        if (fields.size() != 3) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
        }
        Measurement m;
        m.t = parse_number(fields[0], line_no, "t_days");
        m.v = parse_number(fields[1], line_no, "viral_load");
        const std::string flag = trim(fields[2]);
        if (flag == "0") {
            m.below_lod = false;
        } else if (flag == "1") {
            m.below_lod = true;
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": below_lod must be 0 or 1");
        }
        if (m.t < 0.0) {
            throw ParseError("line " + std::to_string(line_no) + ": negative time");
        }
        if (!m.below_lod && !(m.v > 0.0)) {
            throw ParseError("line " + std::to_string(line_no) + ": viral_load must be > 0");
        }
        if (!out.empty() && !(m.t > out.back().t)) {
            throw ParseError("line " + std::to_string(line_no) + ": times must be strictly increasing");
        }
        out.push_back(m);
    }
    return out;
}

std::vector<Measurement> read_measurements_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open measurement file " + path.string());
    }
    return read_measurements_csv(in);
}

void write_measurements_csv(std::ostream& os, std::span<const Measurement> data)
{
    os << "t_days,viral_load,below_lod\n";
    for (const Measurement& m : data) {
        os << format_double(m.t) << ',' << format_double(m.v) << ',' << (m.below_lod ? 1 : 0) << '\n';
    }
}

json to_json(const ModelParams& params)
{
    return {{"beta", params.beta}, {"delta", params.delta}, {"p", params.p}, {"c", params.c}};
}

ModelParams params_from_json(const json& j)
{
    try {
        return ModelParams::make(j.at("beta").get<double>(), j.at("delta").get<double>(),
                                 j.at("p").get<double>(), j.at("c").get<double>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("model params: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("model params: ") + e.what());
    }
}

json to_json(const InitialCondition& x0)
{
    return {{"U0", x0.state0.U}, {"I0", x0.state0.I}, {"V0", x0.state0.V}, {"t0", x0.t0}};
}

InitialCondition initial_condition_from_json(const json& j)
{
    try {
        InitialCondition x0{{j.at("U0").get<double>(), j.at("I0").get<double>(), j.at("V0").get<double>()},
                            j.value("t0", 0.0)};
        validate(x0.state0);
        return x0;
    } catch (const json::exception& e) {
        throw ParseError(std::string("initial condition: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("initial condition: ") + e.what());
    }
}

json to_json(const IntegratorConfig& cfg)
{
    return {{"rel_tol", cfg.rel_tol},       {"abs_tol", cfg.abs_tol},
            {"max_step", cfg.max_step},     {"t_max", cfg.t_max},
            {"v_clear", cfg.v_clear},       {"early_stop", cfg.early_stop},
            {"event_time_tol", cfg.event_time_tol}, {"max_steps", cfg.max_steps}};
}

IntegratorConfig integrator_config_from_json(const json& j)
{
    IntegratorConfig cfg;
    try {
        cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
        cfg.abs_tol = j.value("abs_tol", cfg.abs_tol);
        cfg.max_step = j.value("max_step", cfg.max_step);
        cfg.t_max = j.value("t_max", cfg.t_max);
        cfg.v_clear = j.value("v_clear", cfg.v_clear);
        cfg.early_stop = j.value("early_stop", cfg.early_stop);
        cfg.event_time_tol = j.value("event_time_tol", cfg.event_time_tol);
        cfg.max_steps = j.value("max_steps", cfg.max_steps);
        cfg.validate();
    } catch (const json::exception& e) {
        throw ParseError(std::string("integrator config: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("integrator config: ") + e.what());
    }
    return cfg;
}

json to_json(const DEConfig& de)
{
    return {{"population_size", de.population_size},
            {"differential_weight", de.differential_weight},
            {"crossover_rate", de.crossover_rate},
            {"max_generations", de.max_generations},
            {"rng_seed", de.rng_seed},
            {"stop_tol", de.stop_tol},
            {"stall_window", de.stall_window},
            {"search_tol", de.search_tol},
            {"workers", de.workers}};
}

json to_json(const FitBounds& b)
{
    auto pair = [](const ParamBounds& pb) { return json::array({pb.lo, pb.hi}); };
    return {{"beta", pair(b.beta)}, {"delta", pair(b.delta)}, {"p", pair(b.p)}, {"c", pair(b.c)},
            {"v0", pair(b.v0)}};
}

json to_json(const CharacterizationReport& r)
{
    return {{"U_c", r.u_c},
            {"R0", r.r0},
            {"K0", r.k0},
            {"U_inf_closed", r.u_inf_closed},
            {"U_inf_sim", r.u_inf_sim},
            {"alpha0", optional_number(r.alpha0)},
            {"t_V_min", optional_number(r.t_v_min)},
            {"t_I_max", optional_number(r.t_i_max)},
            {"t_c", optional_number(r.t_c)},
            {"t_V_max", optional_number(r.t_v_max)},
            {"V_max", optional_number(r.v_max)},
            {"spread", std::string(to_string(r.spread.tag))},
            {"case", std::string(to_string(r.spread.threshold_case))},
            {"limit_eigenvalues",
             {r.limit_eigenvalues.lambda1, r.limit_eigenvalues.lambda2, r.limit_eigenvalues.lambda3}}};
}

json to_json(const FitResult& r)
{
    return {{"params", to_json(r.params)},
            {"v0", r.v0},
            {"cost", r.cost},
            {"generations_used", r.generations_used},
            {"converged", r.converged},
            {"population_final_spread", r.population_final_spread},
            {"best_cost_history", r.best_cost_history}};
}

void write_table2_csv(std::ostream& os, std::span<const Table2Row> rows, bool with_alpha)
{
    os << "patient,U_c,U_inf,R0,K0,t_I_max,t_c,t_V_max,V_max,t_V_min,U_inf_sim,spread,case";
    if (with_alpha) {
        os << ",alpha0";
    }
    os << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const Table2Row& row : rows) {
        const CharacterizationReport& r = row.report;
        os << row.id << ',' << format_double(r.u_c) << ',' << format_double(r.u_inf_closed) << ','
           << format_double(r.r0) << ',' << format_double(r.k0) << ',' << opt(r.t_i_max) << ','
           << opt(r.t_c) << ',' << opt(r.t_v_max) << ',' << opt(r.v_max) << ',' << opt(r.t_v_min)
           << ',' << format_double(r.u_inf_sim) << ',' << to_string(r.spread.tag) << ','
           << to_string(r.spread.threshold_case);
        if (with_alpha) {
            os << ',' << opt(r.alpha0);
        }
        os << '\n';
    }
}

namespace {

std::string xml_escape(std::string_view text)
{
    std::string out;
    for (char ch : text) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string trajectory_svg(const Trajectory& traj, std::string_view title)
{
    constexpr double width = 800.0, height = 420.0, margin = 50.0;
    const auto samples = traj.samples();
    const double t0 = traj.t_begin();
    const double t1 = std::max(traj.t_end(), t0 + 1e-12);

    auto safe_log = [](double v) { return std::log10(std::max(v, 1e-12)); };
    double y_lo = 1e300, y_hi = -1e300;
    for (const Sample& s : samples) {
        for (double v : {s.x.U, s.x.V}) {
            if (v > 0.0) {
                y_lo = std::min(y_lo, safe_log(v));
                y_hi = std::max(y_hi, safe_log(v));
            }
        }
    }
    if (!(y_hi > y_lo)) {
        y_lo = (y_lo > 1e299 ? 0.0 : y_lo) - 1.0;
        y_hi = y_lo + 2.0;
    }
    auto px = [&](double t) { return margin + (t - t0) / (t1 - t0) * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

    std::ostringstream svg;
    svg.imbue(std::locale::classic());
    svg << std::setprecision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" font-family=\"sans-serif\" font-size=\"12\">t [day] (" << t0 << " to " << t1
        << ")</text>\n";
    svg << "<text x=\"8\" y=\"" << margin - 8 << "\" font-family=\"sans-serif\" font-size=\"12\">log10 ("
        << y_lo << " to " << y_hi << ")</text>\n";

    auto polyline = [&](auto pick, const char* colour, const char* label, double label_y) {
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (const Sample& s : samples) {
            const double v = pick(s.x);
            if (v > 0.0) {
                svg << px(s.t) << ',' << py(safe_log(v)) << ' ';
            }
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << width - margin - 60 << "\" y=\"" << label_y << "\" fill=\"" << colour
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
    };
    polyline([](const State& x) { return x.V; }, "#c0392b", "V", margin);
    polyline([](const State& x) { return x.U; }, "#2471a3", "U", margin + 16);
    svg << "</svg>\n";
    return svg.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

}  // namespace tclm
