#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacv/dataset.hpp"
#include "sacv/detection.hpp"
#include "sacv/selection.hpp"
#include "sacv/uncertainty.hpp"

namespace sacv {

/// Where the experiment universe comes from: a CSV file, an inline
/// synthetic spec, or a named benchmark preset.
struct DatasetSource {
    std::string csv_path;
    std::optional<SyntheticSpec> synthetic;
    std::string preset;
    std::uint64_t preset_seed = 0;
};

std::vector<TreeHyperparams> default_tree_grid();
std::vector<MlpHyperparams> default_mlp_grid();

struct ExperimentConfig {
    DatasetSource source;
    std::vector<Strategy> strategies{Strategy::holdout, Strategy::kfold, Strategy::sacv};
    std::vector<FinalStrategy> final_strategies{FinalStrategy::refit_all, FinalStrategy::combine};
    std::vector<LearnerKind> learners{LearnerKind::tree, LearnerKind::mlp};
    std::vector<std::size_t> ensemble_sizes{1, 5, 10};
    std::vector<TreeHyperparams> tree_grid = default_tree_grid();
    std::vector<MlpHyperparams> mlp_grid = default_mlp_grid();
    std::vector<double> q_levels{0.01, 0.02, 0.03, 0.05, 0.10};
    bool use_fixed_tau = true;
    double fixed_tau = 0.5;
    std::vector<double> theta_levels{0.0, 0.05, 0.10, 0.20};
    std::vector<UncertaintyMetric> metrics{UncertaintyMetric::mean, UncertaintyMetric::var};
    std::size_t top_r = 5;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    double id_test_fraction = 0.3;
    double id_val_fraction = 0.25;
    double holdout_val_fraction = 0.25;
    std::size_t kfold_k = 0; // 0: number of fault strata in dev
    std::vector<double> rank_qs{0.01, 0.02, 0.03, 0.05, 0.10};
    double ood_penalty = 1.0;
    std::vector<std::string> held_out_strata; // empty: rotate every fault stratum
    std::size_t jobs = 0;                     // 0: hardware concurrency
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

/// Throws ParameterError describing the first problem found.
void validate_config(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);

/// One line of the experiment ledger; every record carries its full sweep
/// coordinates plus the seed that produced it.
struct ReportRecord {
    std::string held_out_stratum;
    std::string strategy;
    std::string final_strategy;
    std::string learner;
    std::size_t ensemble_size = 1;
    std::size_t config_rank = 0;
    std::string config;
    std::string threshold_kind; // "fixed" or "cfar"
    std::optional<double> q;
    std::string metric;
    double theta = 0.0;
    std::string status; // "ok", "not_applicable", or "error: ..."
    std::optional<double> tau;
    std::optional<double> u_threshold;
    std::optional<double> fnr_id;
    std::optional<double> fpr_id;
    std::optional<double> fnr_ood;
    std::optional<std::size_t> fn_count_id;
    std::optional<std::size_t> fn_count_ood;
    std::optional<std::size_t> flagged_count;
    std::optional<double> fn_precision;
    std::optional<std::size_t> remaining_fn_total;
    std::optional<std::size_t> remaining_fn_ood;
    std::uint64_t seed = 0;

    bool operator==(const ReportRecord&) const = default;
};

void to_json(nlohmann::json& j, const ReportRecord& r);
void from_json(const nlohmann::json& j, ReportRecord& r);

struct CellTiming {
    std::string cell;
    double wall_ms = 0.0;
};

struct ExperimentReport {
    nlohmann::json config_json;
    std::string config_fingerprint;
    std::vector<ReportRecord> records;
    std::vector<CellTiming> timings; // emitted in JSON only; CSV stays run-invariant

    bool has_errors() const;
};

/// FNV-1a over the canonical (sorted-key) dump of the config document.
std::string fingerprint_config(const nlohmann::json& config_json);

/// Resolve the configured dataset source into the experiment universe.
LabeledDataset load_universe(const ExperimentConfig& cfg);

/// Run the full sweep. Cells execute on a small job pool; records come
/// back in deterministic sweep order regardless of scheduling. A failing
/// cell contributes records with an error status instead of aborting the
/// run.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string report_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Write report.json / report.csv (per format: "json", "csv", or "both")
/// plus config.fingerprint into out_dir.
void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& out_dir);

/// Synthetic benchmark presets shaped like the fault-detection domains
/// this toolkit targets: a chiller-style plant (6 fault strata), an
/// air-handling unit in spring (11), and a power distribution feeder
/// with 4 fault types. Each designates one hard OOD stratum whose
/// cluster center lies outside the hull of the remaining strata.
struct BenchmarkPreset {
    std::string name;
    SyntheticSpec spec;
};

std::vector<BenchmarkPreset> make_benchmarks(std::uint64_t seed);

} // namespace sacv
