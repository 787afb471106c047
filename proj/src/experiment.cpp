#include "sacv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "sacv/errors.hpp"
#include "sacv/rng.hpp"

namespace sacv {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
    if (v) return *v;
    return nullptr;
}

template <typename T>
std::optional<T> opt_from_json(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

void to_json_hp(nlohmann::json& j, const TreeHyperparams& hp) {
    j = nlohmann::json{{"max_depth", hp.max_depth},
                       {"min_samples_leaf", hp.min_samples_leaf},
                       {"criterion", hp.criterion == SplitCriterion::gini ? "gini" : "entropy"}};
}

TreeHyperparams tree_hp_from_json(const nlohmann::json& j) {
    TreeHyperparams hp;
    hp.max_depth = j.at("max_depth").get<std::size_t>();
    hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    const auto crit = j.value("criterion", std::string{"gini"});
    if (crit == "gini") hp.criterion = SplitCriterion::gini;
    else if (crit == "entropy") hp.criterion = SplitCriterion::entropy;
    else throw ParameterError("unknown split criterion \"" + crit + "\"");
    return hp;
}

void to_json_hp(nlohmann::json& j, const MlpHyperparams& hp) {
    j = nlohmann::json{{"hidden_sizes", hp.hidden_sizes},
                       {"learning_rate", hp.learning_rate},
                       {"epochs", hp.epochs},
                       {"batch_size", hp.batch_size},
                       {"l2_penalty", hp.l2_penalty},
                       {"balanced_class_weights", hp.balanced_class_weights}};
}

MlpHyperparams mlp_hp_from_json(const nlohmann::json& j) {
    MlpHyperparams hp;
    j.at("hidden_sizes").get_to(hp.hidden_sizes);
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.epochs = j.value("epochs", hp.epochs);
    hp.batch_size = j.value("batch_size", hp.batch_size);
    hp.l2_penalty = j.value("l2_penalty", hp.l2_penalty);
    hp.balanced_class_weights = j.value("balanced_class_weights", hp.balanced_class_weights);
    return hp;
}

} // namespace

std::vector<TreeHyperparams> default_tree_grid() {
    std::vector<TreeHyperparams> grid;
    for (std::size_t depth : {2, 4, 8, 16}) {
        for (std::size_t leaf : {1, 5, 20}) {
            grid.push_back(TreeHyperparams{depth, leaf, SplitCriterion::gini});
        }
    }
    return grid;
}

std::vector<MlpHyperparams> default_mlp_grid() {
    std::vector<MlpHyperparams> grid;
    const std::vector<std::vector<std::size_t>> hiddens{{8}, {32}, {32, 16}};
    for (const auto& h : hiddens) {
        for (double lr : {1e-2, 1e-3}) {
            MlpHyperparams hp;
            hp.hidden_sizes = h;
            hp.learning_rate = lr;
            hp.epochs = 30;
            hp.batch_size = 32;
            hp.l2_penalty = 1e-4;
            grid.push_back(hp);
        }
    }
    return grid;
}

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
    nlohmann::json source;
    if (!cfg.source.csv_path.empty()) source["csv"] = cfg.source.csv_path;
    if (cfg.source.synthetic) source["synthetic"] = *cfg.source.synthetic;
    if (!cfg.source.preset.empty()) {
        source["preset"] = cfg.source.preset;
        source["preset_seed"] = cfg.source.preset_seed;
    }

    nlohmann::json strategies = nlohmann::json::array();
    for (auto s : cfg.strategies) strategies.push_back(to_string(s));
    nlohmann::json finals = nlohmann::json::array();
    for (auto s : cfg.final_strategies) finals.push_back(to_string(s));
    nlohmann::json learners = nlohmann::json::array();
    for (auto l : cfg.learners) learners.push_back(to_string(l));
    nlohmann::json metrics = nlohmann::json::array();
    for (auto m : cfg.metrics) metrics.push_back(to_string(m));

    nlohmann::json tree_grid = nlohmann::json::array();
    for (const auto& hp : cfg.tree_grid) {
        nlohmann::json h;
        to_json_hp(h, hp);
        tree_grid.push_back(std::move(h));
    }
    nlohmann::json mlp_grid = nlohmann::json::array();
    for (const auto& hp : cfg.mlp_grid) {
        nlohmann::json h;
        to_json_hp(h, hp);
        mlp_grid.push_back(std::move(h));
    }

    j = nlohmann::json{{"dataset", std::move(source)},
                       {"strategies", std::move(strategies)},
                       {"final_strategies", std::move(finals)},
                       {"learners", std::move(learners)},
                       {"ensemble_sizes", cfg.ensemble_sizes},
                       {"tree_grid", std::move(tree_grid)},
                       {"mlp_grid", std::move(mlp_grid)},
                       {"q_levels", cfg.q_levels},
                       {"use_fixed_tau", cfg.use_fixed_tau},
                       {"fixed_tau", cfg.fixed_tau},
                       {"theta_levels", cfg.theta_levels},
                       {"metrics", std::move(metrics)},
                       {"top_r", cfg.top_r},
                       {"seed", cfg.seed},
                       {"output_dir", cfg.output_dir},
                       {"id_test_fraction", cfg.id_test_fraction},
                       {"id_val_fraction", cfg.id_val_fraction},
                       {"holdout_val_fraction", cfg.holdout_val_fraction},
                       {"kfold_k", cfg.kfold_k},
                       {"rank_qs", cfg.rank_qs},
                       {"ood_penalty", cfg.ood_penalty},
                       {"held_out_strata", cfg.held_out_strata},
                       {"jobs", cfg.jobs}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    cfg = ExperimentConfig{};
    const auto& source = j.at("dataset");
    if (source.contains("csv")) cfg.source.csv_path = source.at("csv").get<std::string>();
    if (source.contains("synthetic")) {
        cfg.source.synthetic = source.at("synthetic").get<SyntheticSpec>();
    }
    if (source.contains("preset")) {
        cfg.source.preset = source.at("preset").get<std::string>();
        cfg.source.preset_seed = source.value("preset_seed", std::uint64_t{0});
    }

    if (j.contains("strategies")) {
        cfg.strategies.clear();
        for (const auto& s : j.at("strategies")) {
            cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
        }
    }
    if (j.contains("final_strategies")) {
        cfg.final_strategies.clear();
        for (const auto& s : j.at("final_strategies")) {
            cfg.final_strategies.push_back(final_strategy_from_string(s.get<std::string>()));
        }
    }
    if (j.contains("learners")) {
        cfg.learners.clear();
        for (const auto& s : j.at("learners")) {
            cfg.learners.push_back(learner_kind_from_string(s.get<std::string>()));
        }
    }
    if (j.contains("ensemble_sizes")) j.at("ensemble_sizes").get_to(cfg.ensemble_sizes);
    if (j.contains("tree_grid")) {
        cfg.tree_grid.clear();
        for (const auto& h : j.at("tree_grid")) cfg.tree_grid.push_back(tree_hp_from_json(h));
    }
    if (j.contains("mlp_grid")) {
        cfg.mlp_grid.clear();
        for (const auto& h : j.at("mlp_grid")) cfg.mlp_grid.push_back(mlp_hp_from_json(h));
    }
    if (j.contains("q_levels")) j.at("q_levels").get_to(cfg.q_levels);
    cfg.use_fixed_tau = j.value("use_fixed_tau", cfg.use_fixed_tau);
    cfg.fixed_tau = j.value("fixed_tau", cfg.fixed_tau);
    if (j.contains("theta_levels")) j.at("theta_levels").get_to(cfg.theta_levels);
    if (j.contains("metrics")) {
        cfg.metrics.clear();
        for (const auto& s : j.at("metrics")) {
            cfg.metrics.push_back(uncertainty_metric_from_string(s.get<std::string>()));
        }
    }
    cfg.top_r = j.value("top_r", cfg.top_r);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.id_test_fraction = j.value("id_test_fraction", cfg.id_test_fraction);
    cfg.id_val_fraction = j.value("id_val_fraction", cfg.id_val_fraction);
    cfg.holdout_val_fraction = j.value("holdout_val_fraction", cfg.holdout_val_fraction);
    cfg.kfold_k = j.value("kfold_k", cfg.kfold_k);
    if (j.contains("rank_qs")) j.at("rank_qs").get_to(cfg.rank_qs);
    cfg.ood_penalty = j.value("ood_penalty", cfg.ood_penalty);
    if (j.contains("held_out_strata")) j.at("held_out_strata").get_to(cfg.held_out_strata);
    cfg.jobs = j.value("jobs", cfg.jobs);
}

void validate_config(const ExperimentConfig& cfg) {
    int sources = 0;
    if (!cfg.source.csv_path.empty()) ++sources;
    if (cfg.source.synthetic) ++sources;
    if (!cfg.source.preset.empty()) ++sources;
    if (sources != 1) {
        throw ParameterError("config: exactly one dataset source (csv, synthetic, preset) required");
    }
    if (cfg.strategies.empty()) throw ParameterError("config: strategies must be non-empty");
    if (cfg.final_strategies.empty()) {
        throw ParameterError("config: final_strategies must be non-empty");
    }
    if (cfg.learners.empty()) throw ParameterError("config: learners must be non-empty");
    if (cfg.ensemble_sizes.empty()) throw ParameterError("config: ensemble_sizes must be non-empty");
    for (std::size_t t : cfg.ensemble_sizes) {
        if (t < 1) throw ParameterError("config: ensemble sizes must be >= 1");
    }
    if (cfg.q_levels.empty() && !cfg.use_fixed_tau) {
        throw ParameterError("config: no threshold settings (empty q_levels, fixed tau disabled)");
    }
    for (double q : cfg.q_levels) {
        if (!(q > 0.0 && q < 1.0)) throw ParameterError("config: q levels must lie in (0,1)");
    }
    if (!(cfg.fixed_tau >= 0.0 && cfg.fixed_tau <= 1.0)) {
        throw ParameterError("config: fixed_tau must lie in [0,1]");
    }
    if (cfg.theta_levels.empty()) throw ParameterError("config: theta_levels must be non-empty");
    for (double t : cfg.theta_levels) {
        if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("config: theta levels must lie in [0,1]");
    }
    if (cfg.metrics.empty()) throw ParameterError("config: metrics must be non-empty");
    if (cfg.top_r < 1) throw ParameterError("config: top_r must be >= 1");
    for (LearnerKind kind : cfg.learners) {
        const std::size_t grid_size =
            kind == LearnerKind::tree ? cfg.tree_grid.size() : cfg.mlp_grid.size();
        if (grid_size == 0) {
            throw ParameterError("config: empty hyperparameter grid for " + to_string(kind));
        }
        if (cfg.top_r > grid_size) {
            throw ParameterError("config: top_r exceeds the " + to_string(kind) + " grid size");
        }
    }
    for (double f : {cfg.id_test_fraction, cfg.id_val_fraction, cfg.holdout_val_fraction}) {
        if (!(f > 0.0 && f < 1.0)) {
            throw ParameterError("config: split fractions must lie in (0,1)");
        }
    }
    if (cfg.ood_penalty < 0.0) throw ParameterError("config: ood_penalty must be >= 0");
    if (cfg.rank_qs.empty()) throw ParameterError("config: rank_qs must be non-empty");
    for (double q : cfg.rank_qs) {
        if (!(q > 0.0 && q < 1.0)) throw ParameterError("config: rank_qs must lie in (0,1)");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_config: " + path + ": " + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg = j.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_config: " + path + ": " + e.what());
    }
    validate_config(cfg);
    return cfg;
}

void to_json(nlohmann::json& j, const ReportRecord& r) {
    j = nlohmann::json{{"held_out_stratum", r.held_out_stratum},
                       {"strategy", r.strategy},
                       {"final_strategy", r.final_strategy},
                       {"learner", r.learner},
                       {"ensemble_size", r.ensemble_size},
                       {"config_rank", r.config_rank},
                       {"config", r.config},
                       {"threshold_kind", r.threshold_kind},
                       {"q", opt_json(r.q)},
                       {"metric", r.metric},
                       {"theta", r.theta},
                       {"status", r.status},
                       {"tau", opt_json(r.tau)},
                       {"u_threshold", opt_json(r.u_threshold)},
                       {"fnr_id", opt_json(r.fnr_id)},
                       {"fpr_id", opt_json(r.fpr_id)},
                       {"fnr_ood", opt_json(r.fnr_ood)},
                       {"fn_count_id", opt_json(r.fn_count_id)},
                       {"fn_count_ood", opt_json(r.fn_count_ood)},
                       {"flagged_count", opt_json(r.flagged_count)},
                       {"fn_precision", opt_json(r.fn_precision)},
                       {"remaining_fn_total", opt_json(r.remaining_fn_total)},
                       {"remaining_fn_ood", opt_json(r.remaining_fn_ood)},
                       {"seed", r.seed}};
}

void from_json(const nlohmann::json& j, ReportRecord& r) {
    r.held_out_stratum = j.at("held_out_stratum").get<std::string>();
    r.strategy = j.at("strategy").get<std::string>();
    r.final_strategy = j.at("final_strategy").get<std::string>();
    r.learner = j.at("learner").get<std::string>();
    r.ensemble_size = j.at("ensemble_size").get<std::size_t>();
    r.config_rank = j.at("config_rank").get<std::size_t>();
    r.config = j.at("config").get<std::string>();
    r.threshold_kind = j.at("threshold_kind").get<std::string>();
    r.q = opt_from_json<double>(j, "q");
    r.metric = j.at("metric").get<std::string>();
    r.theta = j.at("theta").get<double>();
    r.status = j.at("status").get<std::string>();
    r.tau = opt_from_json<double>(j, "tau");
    r.u_threshold = opt_from_json<double>(j, "u_threshold");
    r.fnr_id = opt_from_json<double>(j, "fnr_id");
    r.fpr_id = opt_from_json<double>(j, "fpr_id");
    r.fnr_ood = opt_from_json<double>(j, "fnr_ood");
    r.fn_count_id = opt_from_json<std::size_t>(j, "fn_count_id");
    r.fn_count_ood = opt_from_json<std::size_t>(j, "fn_count_ood");
    r.flagged_count = opt_from_json<std::size_t>(j, "flagged_count");
    r.fn_precision = opt_from_json<double>(j, "fn_precision");
    r.remaining_fn_total = opt_from_json<std::size_t>(j, "remaining_fn_total");
    r.remaining_fn_ood = opt_from_json<std::size_t>(j, "remaining_fn_ood");
    r.seed = j.at("seed").get<std::uint64_t>();
}

bool ExperimentReport::has_errors() const {
    return std::any_of(records.begin(), records.end(), [](const ReportRecord& r) {
        return r.status.rfind("error", 0) == 0;
    });
}

std::string fingerprint_config(const nlohmann::json& config_json) {
    const std::string canonical = config_json.dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

LabeledDataset load_universe(const ExperimentConfig& cfg) {
    if (!cfg.source.csv_path.empty()) return load_csv(cfg.source.csv_path);
    if (cfg.source.synthetic) return synthesize_dataset(*cfg.source.synthetic);
    for (const auto& preset : make_benchmarks(cfg.source.preset_seed)) {
        if (preset.name == cfg.source.preset) return synthesize_dataset(preset.spec);
    }
    throw ParameterError("unknown benchmark preset \"" + cfg.source.preset + "\"");
}

namespace {

struct Cell {
    std::string held_out;
    std::size_t partition_index = 0;
    Strategy strategy = Strategy::holdout;
    LearnerKind learner = LearnerKind::tree;
    std::size_t ensemble_size = 1;
};

struct ThresholdSetting {
    Calibration calibration;
    std::string kind_name() const {
        return calibration.kind == CalibrationKind::fixed ? "fixed" : "cfar";
    }
};

/// Records for a cell whose pipeline threw, one per sweep coordinate so
/// the report never has silent gaps.
std::vector<ReportRecord> error_records(const ExperimentConfig& cfg, const Cell& cell,
                                        std::uint64_t cell_seed, const std::string& message) {
    std::vector<ReportRecord> out;
    std::vector<ThresholdSetting> settings;
    if (cfg.use_fixed_tau) settings.push_back({Calibration::fixed()});
    for (double q : cfg.q_levels) settings.push_back({Calibration::cfar(q)});

    for (std::size_t rank = 0; rank < cfg.top_r; ++rank) {
        for (auto fs : cfg.final_strategies) {
            for (const auto& setting : settings) {
                for (auto metric : cfg.metrics) {
                    for (double theta : cfg.theta_levels) {
                        ReportRecord r;
                        r.held_out_stratum = cell.held_out;
                        r.strategy = to_string(cell.strategy);
                        r.final_strategy = to_string(fs);
                        r.learner = to_string(cell.learner);
                        r.ensemble_size = cell.ensemble_size;
                        r.config_rank = rank;
                        r.threshold_kind = setting.kind_name();
                        if (setting.calibration.kind == CalibrationKind::cfar) {
                            r.q = setting.calibration.q;
                        }
                        r.metric = to_string(metric);
                        r.theta = theta;
                        r.status = "error: " + message;
                        r.seed = cell_seed;
                        out.push_back(std::move(r));
                    }
                }
            }
        }
    }
    return out;
}

std::vector<ReportRecord> run_cell(const ExperimentConfig& cfg, const Cell& cell,
                                   const PartitionedData& part, std::uint64_t cell_seed) {
    const LabeledDataset& dev = part.dev;
    const LabeledDataset& test_id = part.test_id;
    const LabeledDataset& test_ood = part.test_ood;

    const BaseSpec base = cell.ensemble_size == 1 ? BaseSpec::single()
                                                  : BaseSpec::bagging(cell.ensemble_size);
    HyperparamGrid grid;
    grid.kind = cell.learner;
    if (cell.learner == LearnerKind::tree) {
        grid.configs.assign(cfg.tree_grid.begin(), cfg.tree_grid.end());
    } else {
        grid.configs.assign(cfg.mlp_grid.begin(), cfg.mlp_grid.end());
    }

    SplitParams split_params;
    split_params.holdout_val_fraction = cfg.holdout_val_fraction;
    split_params.k = cfg.kfold_k;
    split_params.id_val_fraction = cfg.id_val_fraction;
    split_params.rank_qs = cfg.rank_qs;

    const auto results = run_cv(dev, cell.strategy, grid, base, derive_seed(cell_seed, 1),
                                split_params, cfg.ood_penalty);
    const auto top = rank_top_r(results, cfg.top_r);

    std::vector<ThresholdSetting> settings;
    if (cfg.use_fixed_tau) settings.push_back({Calibration::fixed()});
    for (double q : cfg.q_levels) settings.push_back({Calibration::cfar(q)});

    // Combined test universe: i.d. rows first, then o.o.d. rows.
    std::vector<int> test_labels = test_id.labels();
    test_labels.insert(test_labels.end(), test_ood.labels().begin(), test_ood.labels().end());
    const std::size_t n_id = test_id.size();

    std::vector<ReportRecord> records;
    for (std::size_t rank = 0; rank < top.size(); ++rank) {
        for (auto fs : cfg.final_strategies) {
            const auto final_model =
                finalize(dev, top[rank], fs, base, derive_seed(cell_seed, 2 + rank * 2, fs == FinalStrategy::combine));
            const ScorerPtr& scorer = final_model.scorer;

            const auto dev_scores = scorer->score(dev.features());
            const auto id_scores = scorer->score(test_id.features());
            const auto ood_scores = scorer->score(test_ood.features());
            std::vector<double> test_scores = id_scores;
            test_scores.insert(test_scores.end(), ood_scores.begin(), ood_scores.end());

            std::vector<double> dev_neg_scores;
            for (std::size_t i = 0; i < dev.size(); ++i) {
                if (dev.label(i) == 0) dev_neg_scores.push_back(dev_scores[i]);
            }

            // Member-level scores feed the variance metric; a lone learner
            // has no spread to measure.
            const auto* ensemble = dynamic_cast<const Ensemble*>(scorer.get());
            const bool var_applicable = ensemble && ensemble->flat_members().size() >= 2;
            Matrix dev_members;
            Matrix test_members;
            std::optional<UncertaintyScores> var_u_dev;
            std::optional<UncertaintyScores> var_u_test;
            if (var_applicable) {
                dev_members = ensemble->flat_member_scores(dev.features());
                Matrix id_members = ensemble->flat_member_scores(test_id.features());
                Matrix ood_members = ensemble->flat_member_scores(test_ood.features());
                Matrix combined(id_members.rows(), id_members.cols() + ood_members.cols());
                for (std::size_t k = 0; k < id_members.rows(); ++k) {
                    auto dst = combined.row(k);
                    auto a = id_members.row(k);
                    auto b = ood_members.row(k);
                    std::copy(a.begin(), a.end(), dst.begin());
                    std::copy(b.begin(), b.end(),
                              dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
                }
                test_members = std::move(combined);
                var_u_dev = var_metric(dev_members);
                var_u_test = var_metric(test_members);
            }

            for (const auto& setting : settings) {
                const double tau = setting.calibration.kind == CalibrationKind::fixed
                                       ? cfg.fixed_tau
                                       : calibrate_cfar(dev_neg_scores, setting.calibration.q);

                const auto preds_dev = classify(dev_scores, tau);
                const auto preds_id = classify(id_scores, tau);
                const auto preds_ood = classify(ood_scores, tau);
                const auto metrics_id = evaluate(preds_id, test_id.labels());
                const auto metrics_ood = evaluate(preds_ood, test_ood.labels());
                std::vector<int> preds_test = preds_id;
                preds_test.insert(preds_test.end(), preds_ood.begin(), preds_ood.end());

                for (auto metric : cfg.metrics) {
                    const bool applicable =
                        metric == UncertaintyMetric::mean || var_applicable;

                    std::optional<UncertaintyScores> u_dev;
                    std::optional<UncertaintyScores> u_test;
                    if (applicable) {
                        if (metric == UncertaintyMetric::mean) {
                            u_dev = mean_metric(dev_scores, tau);
                            u_test = mean_metric(test_scores, tau);
                        } else {
                            u_dev = var_u_dev;
                            u_test = var_u_test;
                        }
                    }
                    std::vector<double> u_dev_negatives;
                    if (applicable) {
                        for (std::size_t i = 0; i < preds_dev.size(); ++i) {
                            if (preds_dev[i] == 0) u_dev_negatives.push_back(u_dev->u[i]);
                        }
                    }

                    for (double theta : cfg.theta_levels) {
                        ReportRecord r;
                        r.held_out_stratum = cell.held_out;
                        r.strategy = to_string(cell.strategy);
                        r.final_strategy = to_string(fs);
                        r.learner = to_string(cell.learner);
                        r.ensemble_size = cell.ensemble_size;
                        r.config_rank = rank;
                        r.config = config_label(top[rank].config);
                        r.threshold_kind = setting.kind_name();
                        if (setting.calibration.kind == CalibrationKind::cfar) {
                            r.q = setting.calibration.q;
                        }
                        r.metric = to_string(metric);
                        r.theta = theta;
                        r.tau = tau;
                        r.fnr_id = metrics_id.fnr;
                        r.fpr_id = metrics_id.fpr;
                        r.fnr_ood = metrics_ood.fnr;
                        r.fn_count_id = metrics_id.fn_count;
                        r.fn_count_ood = metrics_ood.fn_count;
                        r.seed = cell_seed;

                        if (!applicable) {
                            r.status = "not_applicable";
                            records.push_back(std::move(r));
                            continue;
                        }

                        const double u_thr =
                            calibrate_uncertainty_threshold(u_dev_negatives, theta);
                        const auto flagged =
                            flag_uncertain_negatives(preds_test, *u_test, u_thr);
                        const auto correction =
                            apply_oracle_correction(preds_test, flagged, test_labels);
                        std::size_t remaining_ood = 0;
                        for (std::size_t i = n_id; i < test_labels.size(); ++i) {
                            remaining_ood += static_cast<std::size_t>(
                                test_labels[i] == 1 && correction.corrected_preds[i] == 0);
                        }

                        r.status = "ok";
                        r.u_threshold = u_thr;
                        r.flagged_count = flagged.size();
                        r.fn_precision = fn_precision(flagged, test_labels);
                        r.remaining_fn_total = correction.remaining_fn_count;
                        r.remaining_fn_ood = remaining_ood;
                        records.push_back(std::move(r));
                    }
                }
            }
        }
    }
    return records;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const LabeledDataset universe = load_universe(cfg);

    std::vector<std::string> held_out = cfg.held_out_strata;
    if (held_out.empty()) {
        held_out = universe.fault_strata();
    } else {
        for (const auto& h : held_out) {
            if (universe.indices_of_stratum(h).empty()) {
                throw ParameterError("config: held-out stratum \"" + h +
                                     "\" not present in the dataset");
            }
        }
    }

    // One partition per held-out stratum, shared by every cell and
    // standardized with statistics fitted on its development set.
    std::vector<PartitionedData> partitions;
    partitions.reserve(held_out.size());
    for (const auto& h : held_out) {
        PartitionedData part = partition_leave_one_stratum(
            universe, h, cfg.id_test_fraction, derive_seed(cfg.seed, fnv1a64(h)));
        const auto standardizer = Standardizer::fit(part.dev);
        partitions.push_back(PartitionedData{standardizer.transform(part.dev),
                                             standardizer.transform(part.test_id),
                                             standardizer.transform(part.test_ood),
                                             part.held_out_stratum});
    }

    std::vector<Cell> cells;
    for (std::size_t h = 0; h < held_out.size(); ++h) {
        for (auto strategy : cfg.strategies) {
            for (auto learner : cfg.learners) {
                for (std::size_t T : cfg.ensemble_sizes) {
                    cells.push_back(Cell{held_out[h], h, strategy, learner, T});
                }
            }
        }
    }

    std::vector<std::vector<ReportRecord>> cell_records(cells.size());
    std::vector<CellTiming> timings(cells.size());

    auto run_one = [&](std::size_t index) {
        const Cell& cell = cells[index];
        const std::uint64_t cell_seed =
            derive_seed(derive_seed(cfg.seed, fnv1a64(cell.held_out)),
                        static_cast<std::uint64_t>(cell.strategy) * 1000000 +
                            static_cast<std::uint64_t>(cell.learner) * 10000 + cell.ensemble_size);
        const auto start = std::chrono::steady_clock::now();
        try {
            cell_records[index] = run_cell(cfg, cell, partitions[cell.partition_index], cell_seed);
        } catch (const std::exception& e) {
            cell_records[index] = error_records(cfg, cell, cell_seed, e.what());
        }
        const auto stop = std::chrono::steady_clock::now();
        std::ostringstream name;
        name << cell.held_out << '/' << to_string(cell.strategy) << '/' << to_string(cell.learner)
             << "/T=" << cell.ensemble_size;
        timings[index] = CellTiming{
            name.str(), std::chrono::duration<double, std::milli>(stop - start).count()};
    };

    std::size_t jobs = cfg.jobs > 0 ? cfg.jobs : std::thread::hardware_concurrency();
    jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_one(i);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    ExperimentReport report;
    to_json(report.config_json, cfg);
    report.config_fingerprint = fingerprint_config(report.config_json);
    for (auto& recs : cell_records) {
        report.records.insert(report.records.end(), std::make_move_iterator(recs.begin()),
                              std::make_move_iterator(recs.end()));
    }
    report.timings = std::move(timings);
    return report;
}

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "held_out_stratum,strategy,final_strategy,learner,ensemble_size,config_rank,config,"
           "threshold_kind,q,tau,metric,theta,u_threshold,status,fnr_id,fpr_id,fnr_ood,"
           "fn_count_id,fn_count_ood,flagged_count,fn_precision,remaining_fn_total,"
           "remaining_fn_ood,seed,config_fingerprint\n";

    auto opt_num = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string{}; };
    auto opt_count = [](const std::optional<std::size_t>& v) {
        return v ? std::to_string(*v) : std::string{};
    };

    for (const auto& r : report.records) {
        out << csv_field(r.held_out_stratum) << ',' << r.strategy << ',' << r.final_strategy << ','
            << r.learner << ',' << r.ensemble_size << ',' << r.config_rank << ','
            << csv_field(r.config) << ',' << r.threshold_kind << ',' << opt_num(r.q) << ','
            << opt_num(r.tau) << ',' << r.metric << ',' << fmt(r.theta) << ','
            << opt_num(r.u_threshold) << ',' << csv_field(r.status) << ',' << opt_num(r.fnr_id)
            << ',' << opt_num(r.fpr_id) << ',' << opt_num(r.fnr_ood) << ','
            << opt_count(r.fn_count_id) << ',' << opt_count(r.fn_count_ood) << ','
            << opt_count(r.flagged_count) << ',' << opt_num(r.fn_precision) << ','
            << opt_count(r.remaining_fn_total) << ',' << opt_count(r.remaining_fn_ood) << ','
            << r.seed << ',' << report.config_fingerprint << '\n';
    }
    return out.str();
}

nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& t : report.timings) {
        timings.push_back({{"cell", t.cell}, {"wall_ms", t.wall_ms}});
    }
    return nlohmann::json{{"format", "sacv-report"},
                          {"version", 1},
                          {"config", report.config_json},
                          {"config_fingerprint", report.config_fingerprint},
                          {"records", report.records},
                          {"timings", std::move(timings)}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "sacv-report") {
        throw ParseError("report_from_json: not a report document");
    }
    ExperimentReport report;
    report.config_json = j.at("config");
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    j.at("records").get_to(report.records);
    if (j.contains("timings")) {
        for (const auto& t : j.at("timings")) {
            report.timings.push_back(
                CellTiming{t.at("cell").get<std::string>(), t.at("wall_ms").get<double>()});
        }
    }
    return report;
}

void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("emit_report: cannot create directory " + out_dir);

    auto write_file = [&](const std::string& name, const std::string& content) {
        const auto path = fs::path(out_dir) / name;
        std::ofstream out(path);
        if (!out) throw IoError("emit_report: cannot open " + path.string() + " for writing");
        out << content;
        if (!out) throw IoError("emit_report: write failed for " + path.string());
    };

    if (format != "json" && format != "csv" && format != "both") {
        throw ParameterError("emit_report: format must be json, csv, or both");
    }
    if (format == "json" || format == "both") {
        write_file("report.json", report_to_json(report).dump(2) + "\n");
    }
    if (format == "csv" || format == "both") {
        write_file("report.csv", report_csv(report));
    }
    write_file("config.fingerprint", report.config_fingerprint + "\n");
}

std::vector<BenchmarkPreset> make_benchmarks(std::uint64_t seed) {
    struct Shape {
        const char* name;
        std::size_t fault_strata;
        std::size_t rows_per_stratum;
        std::vector<double> id_angles_deg;
        double hard_angle_deg;
        double normal_spread;
        double hard_signature;
    };
    // Stratum counts mirror the target domains: a chiller plant with six
    // fault types, a spring-season air handler with eleven, and a power
    // feeder with four (which gets more rows per stratum so per-fold
    // fault mass stays comparable). The identity angles are chosen so
    // that the hard stratum shares neither of its ring coordinates with
    // any observed stratum, while the observed strata still surround the
    // normal cluster (no half-plane covers them all).
    const Shape shapes[] = {
        {"chiller_like", 6, 150, {0, 72, 144, 216, 288}, 310, 3.0, 1.7},
        {"ahu_spring_like", 11, 90, {0, 52, 84, 121, 149, 176, 204, 241, 275, 302}, 324, 3.0, 1.7},
        {"power_ft_like", 4, 450, {0, 120, 240}, 142, 3.0, 1.7}};

    constexpr std::size_t d = 6;
    constexpr double ring_radius = 5.0;
    constexpr double deg = std::numbers::pi / 180.0;

    std::vector<BenchmarkPreset> presets;
    for (const auto& shape : shapes) {
        SyntheticSpec spec;
        spec.d = d;
        spec.seed = derive_seed(seed, fnv1a64(shape.name));

        // Normals are diffuse in the stratum-identity plane (f1, f2), so
        // no rule built on identity position alone separates faults from
        // normals; the transferable signal is the severity signature on
        // f0 together with the identity ring. High i.d. accuracy requires
        // per-stratum carves, which rotating strata out exposes. The last
        // three dimensions are noise with matched spread across classes.
        spec.normal_spec = StratumSpec{
            kNormalStratum,
            std::vector<double>(d, 0.0),
            {1.0, shape.normal_spread, shape.normal_spread, 1.0, 1.0, 1.0},
            2000};

        const std::size_t k_id = shape.fault_strata - 1;
        for (std::size_t s = 0; s < k_id; ++s) {
            const double frac = k_id > 1 ? static_cast<double>(s) / static_cast<double>(k_id - 1)
                                         : 0.0;
            // Tight per-stratum clusters on the identity ring, with
            // mildly varying signature strength.
            const double signature = 1.4 + 0.8 * frac;
            const double angle = shape.id_angles_deg[s] * deg;
            std::vector<double> center(d, 0.0);
            center[0] = signature;
            center[1] = ring_radius * std::cos(angle);
            center[2] = ring_radius * std::sin(angle);
            spec.strata_specs.push_back(StratumSpec{"FT-" + std::to_string(s + 1),
                                                    std::move(center),
                                                    {0.35, 0.35, 0.35, 1.0, 1.0, 1.0},
                                                    shape.rows_per_stratum});
        }

        // The designated hard OOD stratum sits on the ring at an angle
        // whose coordinates collide with no observed stratum, outside the
        // convex hull of the dev stratum centers, with a signature that
        // straddles the CFAR operating points.
        std::vector<double> hard_center(d, 0.0);
        hard_center[0] = shape.hard_signature;
        hard_center[1] = ring_radius * std::cos(shape.hard_angle_deg * deg);
        hard_center[2] = ring_radius * std::sin(shape.hard_angle_deg * deg);
        const std::string hard_name = "FT-" + std::to_string(shape.fault_strata);
        spec.strata_specs.push_back(StratumSpec{hard_name, std::move(hard_center),
                                                {0.7, 0.45, 0.45, 1.0, 1.0, 1.0},
                                                shape.rows_per_stratum});
        spec.ood_strata = {hard_name};

        presets.push_back(BenchmarkPreset{shape.name, std::move(spec)});
    }
    return presets;
}

} // namespace sacv
