#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fairbayes {

using GroupId = int;
using Label = int;

// Rows of (feature vector, protected group, binary label). Features are stored
// row-major. Immutable after construction.
class TabularDataset {
public:
    TabularDataset(std::size_t num_features, std::vector<double> features,
                   std::vector<GroupId> groups, std::vector<Label> labels, int num_groups,
                   std::vector<std::string> feature_names = {},
                   std::vector<std::string> group_names = {});

    std::size_t size() const { return groups_.size(); }
    std::size_t num_features() const { return num_features_; }
    int num_groups() const { return num_groups_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * num_features_, num_features_};
    }
    GroupId group(std::size_t i) const { return groups_[i]; }
    Label label(std::size_t i) const { return labels_[i]; }

    std::span<const double> features() const { return features_; }
    std::span<const GroupId> groups() const { return groups_; }
    std::span<const Label> labels() const { return labels_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    // Original group labels, indexed by dense group id.
    const std::vector<std::string>& group_names() const { return group_names_; }

    // Rows picked by index; indices may repeat (bootstrap).
    TabularDataset subset(std::span<const std::size_t> rows) const;

private:
    std::size_t num_features_;
    std::vector<double> features_;
    std::vector<GroupId> groups_;
    std::vector<Label> labels_;
    int num_groups_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> group_names_;
};

// Which CSV columns play which role.
struct CsvSchema {
    std::string group_column;
    std::string label_column;
    std::vector<std::string> numeric_columns;
    std::vector<std::string> categorical_columns;
};

struct LoadedDataset {
    TabularDataset data;
    // Columns removed because they carried no variation.
    std::vector<std::string> dropped_columns;
    std::vector<std::string> warnings;
};

// Reads an RFC-4180 CSV with a header row. Numeric columns are z-scored with
// statistics of the loaded file, categorical columns are one-hot encoded (one
// column per distinct value, in first-appearance order), constant columns are
// dropped with a warning. Group values map to dense ids in first-appearance
// order.
LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
LoadedDataset parse_csv(std::istream& in, const CsvSchema& schema);

// Writes features as columns x0..x{d-1}, then "group" and "label".
void write_csv(const TabularDataset& ds, const std::filesystem::path& path);

struct SplitSpec {
    double train_frac = 0.7;
    double calib_frac = 0.5;
    double test_frac = 0.3;
    bool with_replacement = true;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train, calib, test;
};

struct DatasetSplit {
    TabularDataset train, calib, test;
};

// With replacement, each part is an independent bootstrap draw of
// round(frac * n) rows. Without, the parts are consecutive slices of one
// seeded shuffle.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
DatasetSplit split(const TabularDataset& ds, const SplitSpec& spec);

// One protected group's scored rows, sorted by descending score with labels
// permuted in lockstep. Prefix positive counts make PPV queries O(log n).
class GroupView {
public:
    static GroupView build(GroupId group, std::vector<double> scores, std::vector<Label> labels);

    GroupId group() const { return group_; }
    std::size_t size() const { return scores_.size(); }
    std::span<const double> scores() const { return scores_; }
    std::span<const Label> labels() const { return labels_; }
    double max_score() const { return scores_.front(); }
    double min_score() const { return scores_.back(); }

    // Number of rows with score >= t.
    std::size_t count_at_least(double t) const;
    // Positive labels among the k highest-scored rows.
    std::size_t positives_in_top(std::size_t k) const { return prefix_pos_[k]; }
    std::size_t total_positives() const { return prefix_pos_.back(); }

private:
    GroupView() = default;

    GroupId group_ = 0;
    std::vector<double> scores_;
    std::vector<Label> labels_;
    std::vector<std::size_t> prefix_pos_;
};

// Partitions scored rows by group; element g of the result is group g.
std::vector<GroupView> group_views(std::span<const GroupId> groups, std::span<const Label> labels,
                                   int num_groups, std::span<const double> scores);
std::vector<GroupView> group_views(const TabularDataset& ds, std::span<const double> scores);

}  // namespace fairbayes
