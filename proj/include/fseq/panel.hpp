#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fseq {

/// Observed double sequence y_it: rows are cross-sectional units, columns are
/// time periods. Immutable after construction.
class Panel {
public:
    Panel() = default;

    /// Validates n >= 1, T >= 2, finite entries and unique labels. Labels
    /// default to "y1".."yn" when empty.
    Panel(Eigen::MatrixXd values, std::vector<std::string> labels = {}, long t0 = 0);

    [[nodiscard]] Eigen::Index n() const { return values_.rows(); }
    [[nodiscard]] Eigen::Index T() const { return values_.cols(); }
    [[nodiscard]] const Eigen::MatrixXd& values() const { return values_; }
    [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }
    [[nodiscard]] long t0() const { return t0_; }

    /// Original time-index strings (as read from CSV). Empty means t0 + offset.
    [[nodiscard]] const std::vector<std::string>& time_labels() const { return time_labels_; }
    /// Transform codes (1..7), one per series, when the source file had them.
    [[nodiscard]] const std::vector<int>& tcodes() const { return tcodes_; }
    /// Per-series shift/scale applied by standardize(); empty otherwise.
    [[nodiscard]] const Eigen::VectorXd& shift() const { return shift_; }
    [[nodiscard]] const Eigen::VectorXd& scale() const { return scale_; }

    [[nodiscard]] Panel with_time_labels(std::vector<std::string> labels) const;
    [[nodiscard]] Panel with_tcodes(std::vector<int> codes) const;
    /// Same metadata, new values (same shape required).
    [[nodiscard]] Panel with_values(Eigen::MatrixXd values) const;

    /// Inverse of standardize(): y = scale * z + shift.
    [[nodiscard]] Panel destandardized() const;

    /// Label of column t: the stored time label if present, else t0 + t.
    [[nodiscard]] std::string time_label(Eigen::Index t) const;

private:
    friend Panel standardize(const Panel& p);

    Eigen::MatrixXd values_;
    std::vector<std::string> labels_;
    long t0_ = 0;
    std::vector<std::string> time_labels_;
    std::vector<int> tcodes_;
    Eigen::VectorXd shift_;
    Eigen::VectorXd scale_;
};

struct CovMatrix {
    long lag = 0;
    Eigen::MatrixXd values;
};

/// Reads a panel stored with series as columns: header row of names, optional
/// transform-code row, first column the time index. Dates may be integers,
/// ISO dates (YYYY-MM-DD / YYYY-MM) or YYYY:MM.
[[nodiscard]] Panel load_panel_csv(const std::filesystem::path& path, bool has_tcode_row);

/// Writes in the same layout load_panel_csv reads (tcode row only when the
/// panel carries codes and `write_tcodes` is set).
void write_panel_csv(const Panel& p, const std::filesystem::path& path, bool write_tcodes = false);

/// Integer offset for a time label: plain integers map to themselves,
/// calendar labels to a month count (year * 12 + month - 1).
[[nodiscard]] long parse_time_index(const std::string& label);

/// FRED-MD stationarity transforms. Output is shorter by 0 (codes 1,4),
/// 1 (codes 2,5) or 2 (codes 3,6,7) elements.
[[nodiscard]] std::vector<double> apply_tcode(const std::vector<double>& series, int code);

/// Number of leading observations a code consumes.
[[nodiscard]] int tcode_lag_loss(int code);

/// Applies each series' code and trims all series to a common start.
[[nodiscard]] Panel apply_tcodes(const Panel& raw);

/// Row-wise demean and scale to unit sample variance (divisor T).
[[nodiscard]] Panel standardize(const Panel& p);

/// T^{-1} sum_{t=|k|+1}^T y_t y_{t-|k|}' for k >= 0 and its transpose for
/// k < 0. No demeaning is done here.
[[nodiscard]] CovMatrix sample_autocov(const Panel& p, long k);
[[nodiscard]] Eigen::MatrixXd sample_autocov(const Eigen::MatrixXd& y, long k);

}  // namespace fseq
