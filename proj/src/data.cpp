#include "fairbayes/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fairbayes/errors.hpp"
#include "fairbayes/random.hpp"

namespace fairbayes {

TabularDataset::TabularDataset(std::size_t num_features, std::vector<double> features,
                               std::vector<GroupId> groups, std::vector<Label> labels,
                               int num_groups, std::vector<std::string> feature_names,
                               std::vector<std::string> group_names)
    : num_features_(num_features),
      features_(std::move(features)),
      groups_(std::move(groups)),
      labels_(std::move(labels)),
      num_groups_(num_groups),
      feature_names_(std::move(feature_names)),
      group_names_(std::move(group_names)) {
    const std::size_t n = groups_.size();
    if (n == 0) throw DataError("dataset must contain at least one row");
    if (labels_.size() != n) throw ShapeError("labels and groups differ in length");
    if (features_.size() != n * num_features_) {
        throw ShapeError("feature matrix size does not match rows x columns");
    }
    if (num_groups_ < 1) throw DataError("dataset needs at least one group");
    for (std::size_t i = 0; i < n; ++i) {
        if (groups_[i] < 0 || groups_[i] >= num_groups_) {
            throw DataError("group id " + std::to_string(groups_[i]) + " out of range at row " +
                            std::to_string(i));
        }
        if (labels_[i] != 0 && labels_[i] != 1) {
            throw DataError("non-binary label at row " + std::to_string(i));
        }
    }
    if (feature_names_.empty()) {
        for (std::size_t j = 0; j < num_features_; ++j) feature_names_.push_back("x" + std::to_string(j));
    }
    if (feature_names_.size() != num_features_) throw ShapeError("feature name count mismatch");
    if (group_names_.empty()) {
        for (int g = 0; g < num_groups_; ++g) group_names_.push_back(std::to_string(g));
    }
    if (group_names_.size() != static_cast<std::size_t>(num_groups_)) {
        throw ShapeError("group name count mismatch");
    }
}

TabularDataset TabularDataset::subset(std::span<const std::size_t> rows) const {
    std::vector<double> feats;
    feats.reserve(rows.size() * num_features_);
    std::vector<GroupId> groups;
    std::vector<Label> labels;
    groups.reserve(rows.size());
    labels.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= size()) throw ShapeError("subset row index out of range");
        auto x = row(r);
        feats.insert(feats.end(), x.begin(), x.end());
        groups.push_back(groups_[r]);
        labels.push_back(labels_[r]);
    }
    return TabularDataset(num_features_, std::move(feats), std::move(groups), std::move(labels),
                          num_groups_, feature_names_, group_names_);
}

namespace {

using Record = std::vector<std::string>;

// RFC-4180: quoted fields may contain separators, doubled quotes and line breaks.
std::vector<Record> read_records(std::istream& in) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char ch;
    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
        current.clear();
    };
    while (in.get(ch)) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field.push_back(ch);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (in.peek() == '\n') in.get(ch);
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(ch);
                field_started = true;
        }
    }
    if (in_quotes) throw DataError("unterminated quoted field");
    if (field_started || !field.empty() || !current.empty()) end_record();
    return records;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& column, std::size_t line) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw DataError("column '" + column + "' line " + std::to_string(line) +
                        ": not a finite number: '" + raw + "'");
    }
    return v;
}

}  // namespace

LoadedDataset parse_csv(std::istream& in, const CsvSchema& schema) {
    if (schema.group_column.empty() || schema.label_column.empty()) {
        throw SchemaError("schema must name a group column and a label column");
    }
    if (schema.numeric_columns.empty() && schema.categorical_columns.empty()) {
        throw SchemaError("schema must name at least one feature column");
    }
    const auto records = read_records(in);
    if (records.empty()) throw DataError("empty file");
    if (records.size() < 2) throw DataError("file has a header but no data rows");

    const Record& header = records.front();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < header.size(); ++j) index.emplace(trim(header[j]), j);
    auto column = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw SchemaError("missing column '" + name + "'");
        return it->second;
    };
    const std::size_t group_col = column(schema.group_column);
    const std::size_t label_col = column(schema.label_column);
    std::vector<std::size_t> num_cols, cat_cols;
    for (const auto& c : schema.numeric_columns) num_cols.push_back(column(c));
    for (const auto& c : schema.categorical_columns) cat_cols.push_back(column(c));

    const std::size_t n = records.size() - 1;
    std::vector<GroupId> groups(n);
    std::vector<Label> labels(n);
    std::vector<std::string> group_names;
    std::unordered_map<std::string, GroupId> group_ids;
    std::vector<std::vector<double>> numeric(num_cols.size(), std::vector<double>(n));
    std::vector<std::vector<std::size_t>> cat_codes(cat_cols.size(), std::vector<std::size_t>(n));
    std::vector<std::vector<std::string>> cat_levels(cat_cols.size());
    std::vector<std::unordered_map<std::string, std::size_t>> cat_lookup(cat_cols.size());

    for (std::size_t i = 0; i < n; ++i) {
        const Record& rec = records[i + 1];
        const std::size_t line = i + 2;
        if (rec.size() != header.size()) {
            throw DataError("line " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        const std::string g = trim(rec[group_col]);
        auto [it, inserted] = group_ids.try_emplace(g, static_cast<GroupId>(group_names.size()));
        if (inserted) group_names.push_back(g);
        groups[i] = it->second;

        const double y = parse_number(rec[label_col], schema.label_column, line);
        if (y != 0.0 && y != 1.0) {
            throw DataError("label column '" + schema.label_column + "' line " +
                            std::to_string(line) + ": value '" + rec[label_col] +
                            "' is not 0 or 1");
        }
        labels[i] = static_cast<Label>(y);

        for (std::size_t k = 0; k < num_cols.size(); ++k) {
            numeric[k][i] = parse_number(rec[num_cols[k]], schema.numeric_columns[k], line);
        }
        for (std::size_t k = 0; k < cat_cols.size(); ++k) {
            const std::string v = trim(rec[cat_cols[k]]);
            auto [cit, cnew] = cat_lookup[k].try_emplace(v, cat_levels[k].size());
            if (cnew) cat_levels[k].push_back(v);
            cat_codes[k][i] = cit->second;
        }
    }

    std::vector<std::string> dropped, warnings;
    std::vector<std::vector<double>> columns;
    std::vector<std::string> names;
    for (std::size_t k = 0; k < num_cols.size(); ++k) {
        auto& col = numeric[k];
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            dropped.push_back(schema.numeric_columns[k]);
            warnings.push_back("dropped constant numeric column '" + schema.numeric_columns[k] + "'");
            continue;
        }
        for (double& v : col) v = (v - mean) / sd;
        columns.push_back(std::move(col));
        names.push_back(schema.numeric_columns[k]);
    }
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
        if (cat_levels[k].size() < 2) {
            dropped.push_back(schema.categorical_columns[k]);
            warnings.push_back("dropped constant categorical column '" +
                                   schema.categorical_columns[k] + "'");
            continue;
        }
        for (std::size_t level = 0; level < cat_levels[k].size(); ++level) {
            std::vector<double> col(n);
            for (std::size_t i = 0; i < n; ++i) col[i] = cat_codes[k][i] == level ? 1.0 : 0.0;
            columns.push_back(std::move(col));
            names.push_back(schema.categorical_columns[k] + "=" + cat_levels[k][level]);
        }
    }

    const std::size_t d = columns.size();
    std::vector<double> features(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) features[i * d + j] = columns[j][i];
    }
    const int num_groups = static_cast<int>(group_names.size());
    return LoadedDataset{TabularDataset(d, std::move(features), std::move(groups), std::move(labels),
                                        num_groups, std::move(names), std::move(group_names)),
                         std::move(dropped), std::move(warnings)};
}

LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return parse_csv(in, schema);
}

void write_csv(const TabularDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (std::size_t j = 0; j < ds.num_features(); ++j) out << 'x' << j << ',';
    out << "group,label\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.row(i)) out << v << ',';
        out << ds.group_names()[static_cast<std::size_t>(ds.group(i))] << ',' << ds.label(i) << '\n';
    }
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    if (n == 0) throw PreconditionError("cannot split an empty dataset");
    for (double f : {spec.train_frac, spec.calib_frac, spec.test_frac}) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in (0,1]");
    }
    if (!spec.with_replacement && spec.train_frac + spec.calib_frac + spec.test_frac > 1.0 + 1e-12) {
        throw ConfigError("split fractions without replacement must sum to at most 1");
    }
    auto count = [n](double frac) {
        const auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
        if (k == 0) throw ConfigError("split fraction yields an empty part");
        return k;
    };
    const std::size_t n_train = count(spec.train_frac);
    const std::size_t n_calib = count(spec.calib_frac);
    const std::size_t n_test = count(spec.test_frac);

    Rng rng(spec.seed);
    SplitIndices out;
    if (spec.with_replacement) {
        auto draw = [&](std::size_t k) {
            std::vector<std::size_t> idx(k);
            for (auto& i : idx) i = rng.uniform_index(n);
            return idx;
        };
        out.train = draw(n_train);
        out.calib = draw(n_calib);
        out.test = draw(n_test);
    } else {
        if (n_train + n_calib + n_test > n) throw ConfigError("split parts exceed dataset size");
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        auto it = perm.begin();
        out.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
        it += static_cast<std::ptrdiff_t>(n_train);
        out.calib.assign(it, it + static_cast<std::ptrdiff_t>(n_calib));
        it += static_cast<std::ptrdiff_t>(n_calib);
        out.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
    }
    return out;
}

DatasetSplit split(const TabularDataset& ds, const SplitSpec& spec) {
    const auto idx = split_indices(ds.size(), spec);
    return {ds.subset(idx.train), ds.subset(idx.calib), ds.subset(idx.test)};
}

GroupView GroupView::build(GroupId group, std::vector<double> scores, std::vector<Label> labels) {
    if (scores.empty()) {
        throw CalibrationInputError("group " + std::to_string(group) + " has no rows");
    }
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("score outside [0,1] in group view");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    GroupView v;
    v.group_ = group;
    v.scores_.reserve(order.size());
    v.labels_.reserve(order.size());
    v.prefix_pos_.assign(order.size() + 1, 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        v.scores_.push_back(scores[order[k]]);
        v.labels_.push_back(labels[order[k]]);
        v.prefix_pos_[k + 1] = v.prefix_pos_[k] + (labels[order[k]] == 1 ? 1 : 0);
    }
    return v;
}

std::size_t GroupView::count_at_least(double t) const {
    // Scores are descending: find the first score strictly below t.
    auto it = std::partition_point(scores_.begin(), scores_.end(), [t](double s) { return s >= t; });
    return static_cast<std::size_t>(it - scores_.begin());
}

std::vector<GroupView> group_views(std::span<const GroupId> groups, std::span<const Label> labels,
                                   int num_groups, std::span<const double> scores) {
    if (scores.size() != groups.size() || labels.size() != groups.size()) {
        throw ShapeError("scores, groups and labels must have equal length");
    }
    std::vector<std::vector<double>> s(static_cast<std::size_t>(num_groups));
    std::vector<std::vector<Label>> l(static_cast<std::size_t>(num_groups));
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] < 0 || groups[i] >= num_groups) throw DataError("group id out of range");
        s[static_cast<std::size_t>(groups[i])].push_back(scores[i]);
        l[static_cast<std::size_t>(groups[i])].push_back(labels[i]);
    }
    std::vector<GroupView> views;
    views.reserve(s.size());
    for (std::size_t g = 0; g < s.size(); ++g) {
        views.push_back(GroupView::build(static_cast<GroupId>(g), std::move(s[g]), std::move(l[g])));
    }
    return views;
}

std::vector<GroupView> group_views(const TabularDataset& ds, std::span<const double> scores) {
    return group_views(ds.groups(), ds.labels(), ds.num_groups(), scores);
}

}  // namespace fairbayes
