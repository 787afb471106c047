#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacv/matrix.hpp"

namespace sacv {

/// Reserved stratum identifier carried by every normal (z=0) row.
inline const std::string kNormalStratum = "NORMAL";

/// Feature matrix with binary labels and per-row stratum identifiers.
///
/// Structural invariants (checked at construction):
///   - features, labels and strata agree on n; n >= 1, d >= 1
///   - labels are 0/1; z=1 rows carry a non-"NORMAL" stratum, z=0 rows
///     carry exactly "NORMAL"
///
/// Subsets produced by partitioning may be single-class (an o.o.d. test
/// set holds only fault rows); callers that need both classes, such as
/// training, check require_both_classes().
class LabeledDataset {
public:
    LabeledDataset(Matrix features, std::vector<int> labels, std::vector<std::string> strata);

    std::size_t size() const { return labels_.size(); }
    std::size_t dim() const { return features_.cols(); }

    const Matrix& features() const { return features_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::string>& strata() const { return strata_; }

    int label(std::size_t i) const { return labels_[i]; }
    const std::string& stratum(std::size_t i) const { return strata_[i]; }

    std::size_t count_label(int z) const;

    /// Sorted unique fault stratum identifiers (never includes "NORMAL").
    std::vector<std::string> fault_strata() const;

    /// Row indices carrying the given stratum, in row order.
    std::vector<std::size_t> indices_of_stratum(const std::string& id) const;

    /// New dataset holding the given rows, in the given order.
    LabeledDataset subset(const std::vector<std::size_t>& idx) const;

    /// Throws TrainingError unless both classes are present.
    void require_both_classes(const std::string& context) const;

    bool operator==(const LabeledDataset& other) const = default;

private:
    Matrix features_;
    std::vector<int> labels_;
    std::vector<std::string> strata_;
};

/// One leave-one-stratum-out division of a dataset universe.
struct PartitionedData {
    LabeledDataset dev;
    LabeledDataset test_id;
    LabeledDataset test_ood;
    std::string held_out_stratum;
};

/// Gaussian cluster description for one fault stratum. cov_scale holds
/// the diagonal scale: a single entry means isotropic, d entries give a
/// per-dimension scale (serialized as a scalar or an array).
struct StratumSpec {
    std::string id;
    std::vector<double> center;
    std::vector<double> cov_scale{1.0};
    std::size_t count = 0;
};

/// Description of a synthetic domain-shift benchmark.
struct SyntheticSpec {
    std::size_t d = 0;
    std::vector<StratumSpec> strata_specs;
    StratumSpec normal_spec; // id field ignored; rows are labeled "NORMAL"
    std::vector<std::string> ood_strata;
    std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const StratumSpec& s);
void from_json(const nlohmann::json& j, StratumSpec& s);
void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

/// Load a dataset from CSV with header f0,...,f{d-1},label,stratum.
/// Throws ParseError naming the offending line on malformed input and
/// IoError when the file cannot be read.
LabeledDataset load_csv(const std::string& path);

/// Write a dataset as CSV with the canonical header.
void save_csv(const LabeledDataset& ds, const std::string& path);

/// Sample the full synthetic universe: one Gaussian cluster per stratum
/// plus the normal cluster. Deterministic given spec.seed. Normal rows
/// come first, then strata in listing order.
LabeledDataset synthesize_dataset(const SyntheticSpec& spec);

/// Sample the universe and split it into dev / i.d. test / o.o.d. test.
/// The designated OOD stratum goes entirely to test_ood; every other
/// stratum (and the normal rows) is divided between dev and test_id at
/// id_test_fraction. The spec must designate exactly one OOD stratum.
PartitionedData generate_synthetic(const SyntheticSpec& spec, double id_test_fraction = 0.3);

/// Leave-one-subgroup-out partition: all held_out fault rows go to
/// test_ood; the remaining rows are split per-stratum into dev and
/// test_id at id_test_fraction. Index sets are pairwise disjoint and
/// cover the source dataset.
PartitionedData partition_leave_one_stratum(const LabeledDataset& ds,
                                            const std::string& held_out,
                                            double id_test_fraction,
                                            std::uint64_t seed);

/// Column-wise standardization fitted on one dataset (the dev set) and
/// applied to any dataset of the same dimension. Constant columns are
/// centered only.
class Standardizer {
public:
    static Standardizer fit(const LabeledDataset& ds);

    LabeledDataset transform(const LabeledDataset& ds) const;

    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& scales() const { return scales_; }

private:
    std::vector<double> means_;
    std::vector<double> scales_;
};

} // namespace sacv
