#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sacv/errors.hpp"
#include "sacv/experiment.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_generate(const std::string& preset_name, const std::string& spec_path, std::uint64_t seed,
                 const std::string& out_dir) {
    sacv::SyntheticSpec spec;
    if (!preset_name.empty()) {
        bool found = false;
        for (const auto& preset : sacv::make_benchmarks(seed)) {
            if (preset.name == preset_name) {
                spec = preset.spec;
                found = true;
                break;
            }
        }
        if (!found) {
            std::cerr << "unknown preset \"" << preset_name << "\" (available:";
            for (const auto& preset : sacv::make_benchmarks(seed)) {
                std::cerr << ' ' << preset.name;
            }
            std::cerr << ")\n";
            return 1;
        }
    } else {
        std::ifstream in(spec_path);
        if (!in) {
            std::cerr << "cannot open spec file " << spec_path << "\n";
            return 1;
        }
        nlohmann::json j;
        in >> j;
        spec = j.get<sacv::SyntheticSpec>();
    }

    fs::create_directories(out_dir);
    const auto universe = sacv::synthesize_dataset(spec);
    sacv::save_csv(universe, (fs::path(out_dir) / "dataset.csv").string());
    std::ofstream spec_out(fs::path(out_dir) / "spec.json");
    spec_out << nlohmann::json(spec).dump(2) << "\n";

    std::cout << "wrote " << universe.size() << " rows (" << universe.dim() << " features, "
              << universe.fault_strata().size() << " fault strata) to " << out_dir
              << "/dataset.csv\n";
    return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, std::size_t jobs) {
    sacv::ExperimentConfig cfg = sacv::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (jobs > 0) cfg.jobs = jobs;

    const auto report = sacv::run_experiment(cfg);
    sacv::emit_report(report, "both", cfg.output_dir);

    std::size_t errors = 0;
    for (const auto& r : report.records) {
        if (r.status.rfind("error", 0) == 0) ++errors;
    }
    std::cout << report.records.size() << " records (" << errors << " failed) -> "
              << cfg.output_dir << "/report.{json,csv}\n";
    return errors == 0 ? 0 : 2;
}

int cmd_report(const std::string& input, const std::string& format, const std::string& out_dir,
               const std::vector<std::pair<std::string, std::string>>& filters) {
    std::ifstream in(input);
    if (!in) {
        std::cerr << "cannot open report " << input << "\n";
        return 1;
    }
    nlohmann::json j;
    in >> j;
    auto report = sacv::report_from_json(j);

    auto matches = [&](const sacv::ReportRecord& r) {
        for (const auto& [key, value] : filters) {
            if (key == "strategy" && r.strategy != value) return false;
            if (key == "final" && r.final_strategy != value) return false;
            if (key == "learner" && r.learner != value) return false;
            if (key == "stratum" && r.held_out_stratum != value) return false;
            if (key == "metric" && r.metric != value) return false;
            if (key == "q" && (!r.q || std::abs(*r.q - std::stod(value)) > 1e-12)) return false;
            if (key == "theta" && std::abs(r.theta - std::stod(value)) > 1e-12) return false;
        }
        return true;
    };
    std::erase_if(report.records, [&](const auto& r) { return !matches(r); });
    report.timings.clear();

    sacv::emit_report(report, format, out_dir);
    std::cout << report.records.size() << " records -> " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stratification-aware cross-validation toolkit for fault detection"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark dataset as CSV");
    std::string preset;
    std::string spec_path;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "data";
    generate->add_option("--preset", preset, "Benchmark preset name");
    generate->add_option("--spec", spec_path, "Synthetic spec JSON file");
    generate->add_option("--seed", gen_seed, "Generation seed");
    generate->add_option("--out", gen_out, "Output directory");

    // run
    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    std::string config_path;
    std::optional<std::uint64_t> run_seed;
    std::string run_out;
    std::size_t jobs = 0;
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--seed", run_seed, "Override the config master seed");
    run->add_option("--out", run_out, "Override the config output directory");
    run->add_option("--jobs", jobs, "Worker threads (0 = hardware)");

    // report
    auto* rep = app.add_subcommand("report", "Re-emit or filter an existing report");
    std::string rep_in;
    std::string rep_format = "both";
    std::string rep_out = "filtered";
    std::string f_strategy, f_final, f_learner, f_stratum, f_metric, f_q, f_theta;
    rep->add_option("--input", rep_in, "report.json produced by run")->required();
    rep->add_option("--format", rep_format, "json, csv, or both");
    rep->add_option("--out", rep_out, "Output directory");
    rep->add_option("--strategy", f_strategy, "Keep records with this validation strategy");
    rep->add_option("--final", f_final, "Keep records with this final-model strategy");
    rep->add_option("--learner", f_learner, "Keep records with this learner kind");
    rep->add_option("--stratum", f_stratum, "Keep records for this held-out stratum");
    rep->add_option("--metric", f_metric, "Keep records with this uncertainty metric");
    rep->add_option("--q", f_q, "Keep records with this CFAR level");
    rep->add_option("--theta", f_theta, "Keep records with this uncertain-negative ratio");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            if (preset.empty() == spec_path.empty()) {
                std::cerr << "generate: exactly one of --preset / --spec required\n";
                return 1;
            }
            return cmd_generate(preset, spec_path, gen_seed, gen_out);
        }
        if (run->parsed()) {
            return cmd_run(config_path, run_seed, run_out, jobs);
        }
        std::vector<std::pair<std::string, std::string>> filters;
        if (!f_strategy.empty()) filters.emplace_back("strategy", f_strategy);
        if (!f_final.empty()) filters.emplace_back("final", f_final);
        if (!f_learner.empty()) filters.emplace_back("learner", f_learner);
        if (!f_stratum.empty()) filters.emplace_back("stratum", f_stratum);
        if (!f_metric.empty()) filters.emplace_back("metric", f_metric);
        if (!f_q.empty()) filters.emplace_back("q", f_q);
        if (!f_theta.empty()) filters.emplace_back("theta", f_theta);
        return cmd_report(rep_in, rep_format, rep_out, filters);
    } catch (const sacv::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
