// kahlerlab: run experiment configs, preset suites, and consolidated reports.

#include "kahler/error.hpp"
#include "kahler/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for complete Ricci-flat Kahler model metrics"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one experiment config");
    run->add_option("config", config_path, "Config JSON (or a run manifest)")->required()->check(CLI::ExistingFile);

    std::string suite_dir, suite_out;
    auto* suite = app.add_subcommand("suite", "Run every config in a directory");
    suite->add_option("dir", suite_dir, "Directory of *.json configs")->required()->check(CLI::ExistingDirectory);
    suite->add_option("-o,--output", suite_out, "Output root (default $KAHLER_OUTPUT_ROOT, else runs)");

    std::vector<std::string> report_dirs;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Tabulate run directories");
    report->add_option("dirs", report_dirs, "Run directories")->required();
    report->add_option("--csv", report_out, "Also write the table as CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const kahler::ExperimentConfig cfg = kahler::load_config(config_path);
            const kahler::RunResult r = kahler::run(cfg, std::cout);
            if (!r.error.empty()) std::cerr << "kahlerlab: " << r.error << '\n';
            return r.exit_status;
        }
        if (*suite) {
            if (suite_out.empty()) {
                const char* root = std::getenv(kahler::kOutputRootVar);
                suite_out = root && *root ? root : "runs";
            }
            return kahler::run_suite(suite_dir, suite_out, std::cout).exit_status;
        }
        const auto rows = kahler::report_table(report_dirs);
        kahler::print_table(rows, std::cout);
        if (!report_out.empty()) {
            std::ofstream out(report_out, std::ios::binary);
            out << kahler::report_csv(rows);
        }
        for (const auto& r : rows)
            if (r.status != "pass") return 1;
        return 0;
    } catch (const kahler::KahlerError& e) {
        std::cerr << "kahlerlab: " << e.what() << '\n';
        return 2;
    }
}
