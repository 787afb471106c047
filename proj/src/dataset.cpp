#include "sacv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

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

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

/// Shuffled per-stratum division. Returns indices selected for the
/// second part (test/validation); counts follow round(fraction * c),
/// clamped so strata with >= 2 rows contribute to both parts.
std::vector<std::size_t> pick_fraction(const std::vector<std::size_t>& idx,
                                       double fraction,
                                       std::mt19937_64& rng) {
    std::vector<std::size_t> shuffled = idx;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto want = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) {
        want = std::clamp<std::size_t>(want, 1, idx.size() - 1);
    } else {
        want = 0; // a singleton stratum stays on the first side
    }
    shuffled.resize(want);
    return shuffled;
}

} // namespace

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels,
                               std::vector<std::string> strata)
    : features_(std::move(features)), labels_(std::move(labels)), strata_(std::move(strata)) {
    const std::size_t n = labels_.size();
    if (features_.rows() != n || strata_.size() != n) {
        throw ParameterError("LabeledDataset: features, labels and strata must agree on n");
    }
    if (n == 0) throw ParameterError("LabeledDataset: no rows");
    if (features_.cols() == 0) throw ParameterError("LabeledDataset: no feature columns");
    for (std::size_t i = 0; i < n; ++i) {
        if (labels_[i] != 0 && labels_[i] != 1) {
            throw ParameterError("LabeledDataset: row " + std::to_string(i) +
                                 ": label must be 0 or 1");
        }
        const bool is_normal_name = (strata_[i] == kNormalStratum);
        if (labels_[i] == 0 && !is_normal_name) {
            throw ParameterError("LabeledDataset: row " + std::to_string(i) +
                                 ": normal row must carry stratum \"" + kNormalStratum + "\"");
        }
        if (labels_[i] == 1 && is_normal_name) {
            throw ParameterError("LabeledDataset: row " + std::to_string(i) +
                                 ": fault row carries reserved stratum \"" + kNormalStratum + "\"");
        }
    }
}

std::size_t LabeledDataset::count_label(int z) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), z));
}

std::vector<std::string> LabeledDataset::fault_strata() const {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels_[i] == 1) ids.insert(strata_[i]);
    }
    return {ids.begin(), ids.end()};
}

std::vector<std::size_t> LabeledDataset::indices_of_stratum(const std::string& id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (strata_[i] == id) out.push_back(i);
    }
    return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& idx) const {
    std::vector<int> labels;
    std::vector<std::string> strata;
    labels.reserve(idx.size());
    strata.reserve(idx.size());
    for (std::size_t i : idx) {
        labels.push_back(labels_[i]);
        strata.push_back(strata_[i]);
    }
    return LabeledDataset(features_.take_rows(idx), std::move(labels), std::move(strata));
}

void LabeledDataset::require_both_classes(const std::string& context) const {
    if (count_label(0) == 0 || count_label(1) == 0) {
        throw TrainingError(context + ": training data must contain both classes");
    }
}

namespace {

nlohmann::json cov_scale_json(const std::vector<double>& scale) {
    if (scale.size() == 1) return scale.front();
    return scale;
}

std::vector<double> cov_scale_from_json(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    return {j.get<double>()};
}

} // namespace

void to_json(nlohmann::json& j, const StratumSpec& s) {
    j = nlohmann::json{{"id", s.id}, {"center", s.center},
                       {"cov_scale", cov_scale_json(s.cov_scale)}, {"count", s.count}};
}

void from_json(const nlohmann::json& j, StratumSpec& s) {
    s.id = j.value("id", std::string{});
    j.at("center").get_to(s.center);
    s.cov_scale = cov_scale_from_json(j.at("cov_scale"));
    j.at("count").get_to(s.count);
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
    nlohmann::json normal{{"center", s.normal_spec.center},
                          {"cov_scale", cov_scale_json(s.normal_spec.cov_scale)},
                          {"count", s.normal_spec.count}};
    j = nlohmann::json{{"d", s.d},
                       {"strata_specs", s.strata_specs},
                       {"normal_spec", normal},
                       {"ood_strata", s.ood_strata},
                       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
    j.at("d").get_to(s.d);
    j.at("strata_specs").get_to(s.strata_specs);
    from_json(j.at("normal_spec"), s.normal_spec);
    s.normal_spec.id = kNormalStratum;
    j.at("ood_strata").get_to(s.ood_strata);
    j.at("seed").get_to(s.seed);
}

LabeledDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_csv: " + path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    if (header.size() < 3 || header[header.size() - 2] != "label" ||
        header[header.size() - 1] != "stratum") {
        throw ParseError("load_csv: " + path +
                         ": header must name feature columns followed by label,stratum");
    }
    const std::size_t d = header.size() - 2;

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> strata;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        const std::string where = "load_csv: " + path + ": row " + std::to_string(lineno);
        if (fields.size() != d + 2) {
            throw ParseError(where + ": expected " + std::to_string(d + 2) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < d; ++c) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(fields[c], &used));
                if (used != fields[c].size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw ParseError(where + ": column " + header[c] + ": not a number: \"" +
                                 fields[c] + "\"");
            }
        }
        const std::string& ls = fields[d];
        if (ls != "0" && ls != "1") {
            throw ParseError(where + ": label must be 0 or 1, got \"" + ls + "\"");
        }
        const int z = ls == "1" ? 1 : 0;
        const std::string& stratum = fields[d + 1];
        if (z == 0 && stratum != kNormalStratum) {
            throw ParseError(where + ": normal row must carry stratum \"" + kNormalStratum +
                             "\", got \"" + stratum + "\"");
        }
        if (z == 1 && stratum == kNormalStratum) {
            throw ParseError(where + ": fault row carries reserved stratum \"" + kNormalStratum +
                             "\"");
        }
        labels.push_back(z);
        strata.push_back(stratum);
    }
    if (labels.empty()) throw ParseError("load_csv: " + path + ": no rows");

    LabeledDataset ds(Matrix(labels.size(), d, std::move(values)), std::move(labels),
                      std::move(strata));
    if (ds.count_label(0) == 0 || ds.count_label(1) == 0) {
        throw ParseError("load_csv: " + path + ": dataset needs at least one normal and one fault row");
    }
    return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_csv: cannot open " + path + " for writing");
    for (std::size_t c = 0; c < ds.dim(); ++c) out << 'f' << c << ',';
    out << "label,stratum\n";
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t c = 0; c < ds.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.features().at(i, c));
            out << buf << ',';
        }
        out << ds.label(i) << ',' << ds.stratum(i) << '\n';
    }
    if (!out) throw IoError("save_csv: write failed for " + path);
}

LabeledDataset synthesize_dataset(const SyntheticSpec& spec) {
    if (spec.d == 0) throw ParameterError("synthesize_dataset: d must be >= 1");
    if (spec.strata_specs.empty()) {
        throw ParameterError("synthesize_dataset: at least one fault stratum required");
    }
    std::set<std::string> ids;
    for (const auto& st : spec.strata_specs) {
        if (st.id.empty() || st.id == kNormalStratum) {
            throw ParameterError("synthesize_dataset: invalid stratum id \"" + st.id + "\"");
        }
        if (!ids.insert(st.id).second) {
            throw ParameterError("synthesize_dataset: duplicate stratum id \"" + st.id + "\"");
        }
    }
    for (const auto& ood : spec.ood_strata) {
        if (!ids.count(ood)) {
            throw ParameterError("synthesize_dataset: ood stratum \"" + ood +
                                 "\" not declared in strata_specs");
        }
    }

    auto check_cluster = [&](const StratumSpec& st, const std::string& name) {
        if (st.cov_scale.size() != 1 && st.cov_scale.size() != spec.d) {
            throw ParameterError("synthesize_dataset: " + name +
                                 ": covariance scale must be a scalar or have d entries");
        }
        for (double s : st.cov_scale) {
            if (s <= 0.0) {
                throw ParameterError("synthesize_dataset: " + name +
                                     ": covariance scale must be > 0");
            }
        }
        if (st.count == 0) {
            throw ParameterError("synthesize_dataset: " + name + ": sample count must be >= 1");
        }
        if (st.center.size() != spec.d) {
            throw ParameterError("synthesize_dataset: " + name + ": center must have d entries");
        }
    };
    check_cluster(spec.normal_spec, "normal_spec");
    for (const auto& st : spec.strata_specs) check_cluster(st, st.id);

    std::size_t n = spec.normal_spec.count;
    for (const auto& st : spec.strata_specs) n += st.count;

    Matrix features(n, spec.d);
    std::vector<int> labels(n);
    std::vector<std::string> strata(n);

    std::size_t row = 0;
    auto emit_cluster = [&](const StratumSpec& st, int z, const std::string& name,
                            std::uint64_t lane) {
        auto rng = make_engine(derive_seed(spec.seed, lane));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const bool isotropic = st.cov_scale.size() == 1;
        for (std::size_t i = 0; i < st.count; ++i, ++row) {
            auto dst = features.row(row);
            for (std::size_t c = 0; c < spec.d; ++c) {
                const double scale = isotropic ? st.cov_scale.front() : st.cov_scale[c];
                dst[c] = st.center[c] + scale * gauss(rng);
            }
            labels[row] = z;
            strata[row] = name;
        }
    };

    emit_cluster(spec.normal_spec, 0, kNormalStratum, 0);
    for (std::size_t s = 0; s < spec.strata_specs.size(); ++s) {
        emit_cluster(spec.strata_specs[s], 1, spec.strata_specs[s].id, s + 1);
    }
    return LabeledDataset(std::move(features), std::move(labels), std::move(strata));
}

PartitionedData generate_synthetic(const SyntheticSpec& spec, double id_test_fraction) {
    if (spec.ood_strata.size() != 1) {
        throw ParameterError("generate_synthetic: exactly one OOD stratum must be designated");
    }
    LabeledDataset universe = synthesize_dataset(spec);
    return partition_leave_one_stratum(universe, spec.ood_strata.front(), id_test_fraction,
                                       derive_seed(spec.seed, 0x5B117));
}

PartitionedData partition_leave_one_stratum(const LabeledDataset& ds, const std::string& held_out,
                                            double id_test_fraction, std::uint64_t seed) {
    if (held_out == kNormalStratum) {
        throw ParameterError("partition_leave_one_stratum: the normal class cannot be held out");
    }
    if (!(id_test_fraction > 0.0 && id_test_fraction < 1.0)) {
        throw ParameterError("partition_leave_one_stratum: id_test_fraction must lie in (0,1)");
    }
    const auto ood_idx = ds.indices_of_stratum(held_out);
    if (ood_idx.empty()) {
        throw ParameterError("partition_leave_one_stratum: stratum \"" + held_out +
                             "\" not present in dataset");
    }

    // Group the remaining rows by stratum, in a name-keyed order so the
    // result is a pure function of (dataset, held_out, fraction, seed).
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.stratum(i) == held_out) continue;
        groups[ds.stratum(i)].push_back(i);
    }
    if (groups.empty()) {
        throw ParameterError("partition_leave_one_stratum: no rows left outside \"" + held_out +
                             "\"");
    }

    std::vector<std::size_t> dev_idx;
    std::vector<std::size_t> test_idx;
    for (auto& [name, idx] : groups) {
        auto rng = make_engine(derive_seed(seed, fnv1a64(name)));
        auto picked = pick_fraction(idx, id_test_fraction, rng);
        std::set<std::size_t> picked_set(picked.begin(), picked.end());
        for (std::size_t i : idx) {
            (picked_set.count(i) ? test_idx : dev_idx).push_back(i);
        }
    }
    std::sort(dev_idx.begin(), dev_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    return PartitionedData{ds.subset(dev_idx), ds.subset(test_idx), ds.subset(ood_idx), held_out};
}

Standardizer Standardizer::fit(const LabeledDataset& ds) {
    Standardizer s;
    const std::size_t d = ds.dim();
    const std::size_t n = ds.size();
    s.means_.assign(d, 0.0);
    s.scales_.assign(d, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = ds.features().row(i);
        for (std::size_t c = 0; c < d; ++c) s.means_[c] += row[c];
    }
    for (double& m : s.means_) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = ds.features().row(i);
        for (std::size_t c = 0; c < d; ++c) {
            const double dvi = row[c] - s.means_[c];
            var[c] += dvi * dvi;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / static_cast<double>(n));
        s.scales_[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

LabeledDataset Standardizer::transform(const LabeledDataset& ds) const {
    if (ds.dim() != means_.size()) {
        throw ParameterError("Standardizer: dimension mismatch");
    }
    Matrix out = ds.features();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        for (std::size_t c = 0; c < out.cols(); ++c) {
            row[c] = (row[c] - means_[c]) / scales_[c];
        }
    }
    return LabeledDataset(std::move(out), ds.labels(), ds.strata());
}

} // namespace sacv
