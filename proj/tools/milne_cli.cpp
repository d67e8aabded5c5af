#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "milne.hpp"

namespace fs = std::filesystem;
using milne::io::ojson;

namespace {

fs::path config_dir(const fs::path& p) { return p.parent_path().empty() ? fs::path(".") : p.parent_path(); }

int report_run(const milne::RunOutcome& r) {
    if (r.exit_code == milne::exit_solver) {
        std::cerr << "solver failure: " << r.report.value("error", std::string("unknown")) << "\n";
    }
    for (const auto& name : r.failed_checks) std::cerr << "check failed: " << name << "\n";
    return r.exit_code;
}

int cmd_run(const std::string& path, const std::string& output) {
    auto cfg = milne::load_config(path);
    if (!output.empty()) cfg.output_dir = output;
    const auto r = milne::run_pipeline(cfg);
    std::cout << "report written to " << (cfg.output_dir / "report.json").string() << "\n";
    return report_run(r);
}

int cmd_verify(const std::string& path, const std::string& report) {
    const auto cfg = milne::load_config(path);
    const fs::path dir = report.empty() ? cfg.output_dir : fs::path(report);
    const auto v = milne::verify_pipeline(cfg, dir);
    for (const auto& s : v.violations) std::cerr << "violation: " << s << "\n";
    if (v.exit_code == milne::exit_ok) std::cout << "verify: all checks passed (" << dir.string() << ")\n";
    return v.exit_code;
}

ojson scalar_from(const std::string& text) {
    try {
        return ojson::parse(text);
    } catch (const std::exception&) {
        return ojson(text);
    }
}

void set_path(ojson& j, const std::string& dotted, const ojson& value) {
    ojson* node = &j;
    std::stringstream ss(dotted);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw milne::ConfigError("sweep: empty --param");
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        ojson& next = (*node)[parts[k]];
        if (next.is_null()) next = ojson::object();
        if (!next.is_object()) throw milne::ConfigError("sweep: '" + parts[k] + "' is not an object");
        node = &next;
    }
    (*node)[parts.back()] = value;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& values) {
    const auto base = milne::load_config(path);
    std::vector<std::string> list;
    {
        std::stringstream ss(values);
        std::string v;
        while (std::getline(ss, v, ','))
            if (!v.empty()) list.push_back(v);
    }
    if (list.empty()) throw milne::ConfigError("sweep: --values is empty");

    std::string csv = "param,value,exit_code,T_inf,pass\n";
    int worst = milne::exit_ok;
    for (const auto& v : list) {
        ojson doc = base.source;
        set_path(doc, param, scalar_from(v));
        doc.erase("output_dir");
        auto cfg = milne::parse_config(doc.dump(2), config_dir(path));
        cfg.output_dir = base.output_dir / (param + "=" + v);
        const auto r = milne::run_pipeline(cfg);
        report_run(r);
        const auto& rep = r.report;
        const std::string t_inf =
            rep.contains("T_inf") ? milne::io::format_double(rep["T_inf"].get<double>()) : std::string();
        csv += param + "," + v + "," + std::to_string(r.exit_code) + "," + t_inf + "," +
               (rep.value("pass", false) ? "1" : "0") + "\n";
        worst = std::max(worst, r.exit_code);
        std::cout << param << "=" << v << " -> exit " << r.exit_code << "\n";
    }
    fs::create_directories(base.output_dir);
    milne::io::write_file((base.output_dir / "sweep.csv").string(), csv);
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear Milne problem solver and verification suite"};
    app.require_subcommand(1);

    std::string cfg_path, report_dir, output, param, values;
    auto* run = app.add_subcommand("run", "solve, diagnose and write report files");
    run->add_option("config", cfg_path, "run configuration (JSON)")->required();
    run->add_option("--output", output, "output directory (overrides the config output_dir)");
    auto* verify = app.add_subcommand("verify", "re-check a stored report without re-solving");
    verify->add_option("config", cfg_path, "run configuration (JSON)")->required();
    verify->add_option("--report", report_dir, "report directory (defaults to the config output_dir)");
    auto* sweep = app.add_subcommand("sweep", "run once per value of one config parameter");
    sweep->add_option("config", cfg_path, "run configuration (JSON)")->required();
    sweep->add_option("--param", param, "dotted config path, e.g. grid.nx or T_b")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : milne::exit_config;
    }

    try {
        if (*run) return cmd_run(cfg_path, output);
        if (*verify) return cmd_verify(cfg_path, report_dir);
        return cmd_sweep(cfg_path, param, values);
    } catch (const milne::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return milne::exit_config;
    } catch (const milne::ContractViolation& e) {
        std::cerr << "config: " << e.what() << "\n";
        return milne::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return milne::exit_solver;
    }
}
