// epinetctl: scenario-driven front end for analysing and simulating controlled networked SIS
// epidemics.
//
// Exit codes: 0 success, 1 numerical failure, 2 invalid scenario or usage, 3 I/O failure,
// 4 a controlled run left its cap box.

#include "epinet/commands.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace epinet;

struct CommonFlags {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_scenario, const std::string& default_format)
{
    flags.format = default_format;
    if (needs_scenario) {
        cmd->add_option("--scenario", flags.scenario, "Scenario JSON file")->required();
    }
    cmd->add_option("--seed", flags.seed, "Override the scenario seed");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

OutputFormat format_of(const CommonFlags& f) { return f.format == "csv" ? OutputFormat::Csv : OutputFormat::Json; }

ResolvedScenario load(const CommonFlags& f)
{
    Scenario s = load_scenario(f.scenario);
    if (f.seed) {
        s.seed = *f.seed;
    }
    return resolve(s);
}

void emit(const CommonFlags& f, const std::string& filename, const std::string& body)
{
    std::cout << body;
    if (!f.out.empty()) {
        ensure_directory(f.out);
        write_atomic(std::filesystem::path(f.out) / filename, body);
    }
}

int cmd_analyze(const CommonFlags& f)
{
    const auto rs = load(f);
    const auto j = analyze(rs);
    if (format_of(f) == OutputFormat::Csv) {
        std::string body = "spectral_abscissa,regime,marginal\n";
        detail::append_number(body, j["spectral_abscissa"].get<double>());
        body += "," + j["regime"].get<std::string>() + "," + (j["marginal"].get<bool>() ? "true" : "false") + "\n";
        emit(f, "analysis.csv", body);
    } else {
        nlohmann::json out{{"spectral_abscissa", j["spectral_abscissa"]},
                           {"regime", j["regime"]},
                           {"endemic_point", j["endemic_point"]},
                           {"marginal", j["marginal"]},
                           {"meta", j["meta"]}};
        emit(f, "analysis.json", out.dump(2) + "\n");
    }
    return exit_code::ok;
}

int cmd_equilibrium(const CommonFlags& f)
{
    const auto rs = load(f);
    const auto report = classify(rs.params, rs.network);
    if (format_of(f) == OutputFormat::Csv) {
        std::string body = "node,endemic\n";
        for (std::size_t i = 0; i < rs.network.size(); ++i) {
            body += std::to_string(i + 1) + ",";
            detail::append_number(body, report.endemic_point ? (*report.endemic_point)[i] : 0.0);
            body += "\n";
        }
        emit(f, "equilibrium.csv", body);
    } else {
        nlohmann::json j;
        to_json(j, report);
        emit(f, "equilibrium.json", j.dump(2) + "\n");
    }
    return exit_code::ok;
}

int finish_simulation(const SimulationResult& res, const std::string& out, OutputFormat fmt)
{
    write_simulation(res, out, fmt);
    std::cout << res.summary.dump(2) << "\n";
    if (!res.invariance_ok) {
        std::cerr << "error: controlled trajectory left the cap box\n";
        return exit_code::invariance;
    }
    return exit_code::ok;
}

int cmd_simulate(const CommonFlags& f, const std::string& mode_name)
{
    const auto rs = load(f);
    const SimulateMode mode = mode_name == "controlled"     ? SimulateMode::Controlled
                              : mode_name == "uncontrolled" ? SimulateMode::Uncontrolled
                                                            : SimulateMode::Both;
    const auto res = run_simulation(rs, mode);
    return finish_simulation(res, f.out.empty() ? "." : f.out, format_of(f));
}

int cmd_reproduce(const CommonFlags& f, int experiment, double cross_weight)
{
    const auto r = reproduce(experiment, f.seed.value_or(1), cross_weight);
    const std::string out = f.out.empty() ? "exp" + std::to_string(experiment) : f.out;
    ensure_directory(out);
    write_atomic(std::filesystem::path(out) / "scenario.json", scenario_to_json(r.scenario).dump(2) + "\n");
    return finish_simulation(r.simulation, out, format_of(f));
}

int cmd_sweep(const CommonFlags& f, const std::string& param, const std::vector<double>& values)
{
    Scenario s = load_scenario(f.scenario);
    if (f.seed) {
        s.seed = *f.seed;
    }
    const auto rows = sweep(s, parse_sweep_param(param), values, worker_count());
    const bool csv = format_of(f) == OutputFormat::Csv;
    emit(f, csv ? "sweep.csv" : "sweep.json", csv ? sweep_csv(rows) : sweep_json(rows).dump(2) + "\n");
    return exit_code::ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Analyse, simulate and verify capped networked SIS epidemics"};
    app.require_subcommand(1);

    CommonFlags analyze_flags, eq_flags, sim_flags, rep_flags, sweep_flags;
    auto* analyze_cmd = app.add_subcommand("analyze", "Spectral abscissa, regime and endemic point");
    add_common(analyze_cmd, analyze_flags, true, "json");

    auto* eq_cmd = app.add_subcommand("equilibrium", "Full equilibrium report");
    add_common(eq_cmd, eq_flags, true, "json");

    std::string mode = "both";
    auto* sim_cmd = app.add_subcommand("simulate", "Integrate the controlled and/or uncontrolled system");
    add_common(sim_cmd, sim_flags, true, "csv");
    auto* mode_group = sim_cmd->add_option_group("mode");
    mode_group->add_flag_callback("--controlled", [&] { mode = "controlled"; });
    mode_group->add_flag_callback("--uncontrolled", [&] { mode = "uncontrolled"; });
    mode_group->add_flag_callback("--both", [&] { mode = "both"; });
    mode_group->require_option(0, 1);

    int experiment = 0;
    double cross_weight = experiment_cross_weight;
    auto* rep_cmd = app.add_subcommand("reproduce", "Run one of the five built-in reference experiments");
    add_common(rep_cmd, rep_flags, false, "csv");
    rep_cmd->add_option("experiment", experiment, "Experiment id")->required()->check(CLI::Range(1, 5));
    rep_cmd->add_option("--cross-weight", cross_weight, "Off-diagonal weight of the generated graphs");

    std::string param;
    std::vector<double> values;
    auto* sweep_cmd = app.add_subcommand("sweep", "Vary one parameter and tabulate the outcome");
    add_common(sweep_cmd, sweep_flags, true, "csv");
    sweep_cmd->add_option("--param", param, "beta | gamma | radius | cap")
        ->required()
        ->check(CLI::IsMember({"beta", "gamma", "radius", "cap"}));
    sweep_cmd->add_option("--values", values, "Values (space or comma separated)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::invalid_scenario;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(analyze_flags);
        if (*eq_cmd) return cmd_equilibrium(eq_flags);
        if (*sim_cmd) return cmd_simulate(sim_flags, mode);
        if (*rep_cmd) return cmd_reproduce(rep_flags, experiment, cross_weight);
        if (*sweep_cmd) return cmd_sweep(sweep_flags, param, values);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
        case ErrorKind::InvalidScenario:
        case ErrorKind::InvalidParameter:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::Disconnected:
        case ErrorKind::NotIrreducible: return exit_code::invalid_scenario;
        case ErrorKind::Io: return exit_code::io;
        default: return exit_code::failure;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
    return exit_code::failure;
}
