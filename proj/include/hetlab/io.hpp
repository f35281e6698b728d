#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hetlab {

enum class Format { csv, json };

Format parse_format(const std::string& text);

/// Picks JSON for a ".json" extension and CSV otherwise.
Format format_from_path(const std::string& path);

/// Per-observation Gaussian latent codes: a mean and a log-variance vector
/// for each record, giving the diagonal covariance diag(exp(s)).
struct EmbeddingDataset {
    std::vector<std::string> ids;
    std::vector<std::optional<std::string>> labels;
    Eigen::MatrixXd means;          // N x n_z
    Eigen::MatrixXd log_variances;  // N x n_z

    Eigen::Index size() const { return means.rows(); }
    Eigen::Index dim() const { return means.cols(); }
    Eigen::MatrixXd variances() const { return log_variances.array().exp(); }

    /// Throws ValidationError on shape mismatches or non-finite values.
    void validate() const;
};

/// Soft category assignments, one distribution per row.
struct AssignmentTable {
    std::vector<std::string> ids;
    Eigen::MatrixXd probabilities;  // N x n_z
};

// CSV header: id,label,m_1..m_nz,s_1..s_nz. JSON: {"n_z": .., "records":
// [{"id", "label", "m": [..], "s": [..]}]}. Values are written in shortest
// round-trip form, so reading back reproduces every double exactly.
EmbeddingDataset read_embeddings(std::istream& in, Format format, const std::string& source = "<stream>");
EmbeddingDataset read_embeddings(const std::string& path);
void write_embeddings(std::ostream& out, const EmbeddingDataset& data, Format format);

// CSV header: id,p_1..p_nz. JSON: {"n_z": .., "records": [{"id", "p": [..]}]}.
// Every row must be a distribution; violations name the offending row.
AssignmentTable read_assignments(std::istream& in, Format format, const std::string& source = "<stream>");
AssignmentTable read_assignments(const std::string& path);
void write_assignments(std::ostream& out, const AssignmentTable& table, Format format);

/// Shortest decimal string that parses back to the same double.
std::string format_exact(double value);

/// Twelve significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_sweep_number(double value);

/// One table cell: a number, text, a flag, or an absent value.
using Cell = std::variant<std::monostate, double, std::string, bool>;

/// Plot-ready output of a CLI command. Rows are kept in grid order.
struct SweepResult {
    std::string command;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    std::size_t column_index(const std::string& name) const;
};

// CSV: "# key: value" metadata lines, a header, then rows; absent cells are
// empty. JSON: {"command", "metadata", "columns", "rows"}; absent cells and
// non-finite numbers are null.
void write_sweep(std::ostream& out, const SweepResult& result, Format format);

} // namespace hetlab
