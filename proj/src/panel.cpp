#include "fseq/panel.hpp"

#include "fseq/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace fseq {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "N/A";
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

std::optional<long> parse_long(const std::string& s) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

Panel::Panel(Eigen::MatrixXd values, std::vector<std::string> labels, long t0)
    : values_(std::move(values)), labels_(std::move(labels)), t0_(t0) {
    if (values_.rows() < 1) throw DataError("panel needs at least one series");
    if (values_.cols() < 2) throw DataError("panel needs at least two time periods");
    if (!values_.allFinite()) throw DataError("panel contains non-finite values");
    if (labels_.empty()) {
        labels_.reserve(values_.rows());
        for (Eigen::Index i = 0; i < values_.rows(); ++i) labels_.push_back("y" + std::to_string(i + 1));
    }
    if (static_cast<Eigen::Index>(labels_.size()) != values_.rows())
        throw DataError("label count does not match number of series");
    std::set<std::string> seen;
    for (const auto& l : labels_)
        if (!seen.insert(l).second) throw DataError("duplicate series label '" + l + "'");
}

Panel Panel::with_time_labels(std::vector<std::string> labels) const {
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != T())
        throw DataError("time label count does not match T");
    Panel out = *this;
    out.time_labels_ = std::move(labels);
    return out;
}

Panel Panel::with_tcodes(std::vector<int> codes) const {
    if (!codes.empty() && static_cast<Eigen::Index>(codes.size()) != n())
        throw DataError("transform code count does not match n");
    Panel out = *this;
    out.tcodes_ = std::move(codes);
    return out;
}

Panel Panel::with_values(Eigen::MatrixXd values) const {
    if (values.rows() != n() || values.cols() != T()) throw DataError("with_values: shape mismatch");
    Panel out(std::move(values), labels_, t0_);
    out.time_labels_ = time_labels_;
    out.tcodes_ = tcodes_;
    out.shift_ = shift_;
    out.scale_ = scale_;
    return out;
}

Panel Panel::destandardized() const {
    if (scale_.size() == 0) return *this;
    Eigen::MatrixXd y = (values_.array().colwise() * scale_.array()).colwise() + shift_.array();
    Panel out(std::move(y), labels_, t0_);
    out.time_labels_ = time_labels_;
    out.tcodes_ = tcodes_;
    return out;
}

std::string Panel::time_label(Eigen::Index t) const {
    if (!time_labels_.empty()) return time_labels_[static_cast<std::size_t>(t)];
    return std::to_string(t0_ + t);
}

long parse_time_index(const std::string& label) {
    if (auto v = parse_long(label)) return *v;
    int y = 0, m = 0, d = 0;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(label);
    if (in >> y >> sep1 >> m && (sep1 == '-' || sep1 == ':') && m >= 1 && m <= 12) {
        if (in.eof()) return static_cast<long>(y) * 12 + (m - 1);
        if (sep1 == '-' && in >> sep2 >> d && sep2 == '-' && d >= 1 && d <= 31 && in.eof())
            return static_cast<long>(y) * 12 + (m - 1);
    }
    throw DataError("unrecognized time index '" + label + "' (expected integer, YYYY-MM-DD, YYYY-MM or YYYY:MM)");
}

Panel load_panel_csv(const std::filesystem::path& path, bool has_tcode_row) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2) throw DataError(path.string() + ": need a time column and at least one series");
    const std::size_t n = header.size() - 1;
    std::vector<std::string> labels(header.begin() + 1, header.end());

    std::size_t line_no = 1;
    std::vector<int> codes;
    if (has_tcode_row) {
        if (!std::getline(in, line)) throw DataError(path.string() + ": missing transform-code row");
        ++line_no;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(path.string() + ": transform-code row has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
        for (std::size_t j = 1; j < cells.size(); ++j) {
            auto v = parse_double(cells[j]);
            if (!v || *v != std::floor(*v) || *v < 1 || *v > 7)
                throw DataError(path.string() + ": invalid transform code '" + cells[j] + "' for series '" +
                                labels[j - 1] + "'");
            codes.push_back(static_cast<int>(*v));
        }
    }

    std::vector<std::string> dates;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> missing;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(path.string() + ": ragged row at line " + std::to_string(line_no) + " (" +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()) + ")");
        dates.push_back(cells[0]);
        std::vector<double> row(n, 0.0);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (is_missing_token(cells[j])) {
                missing.push_back("series '" + labels[j - 1] + "' at " + cells[0]);
                continue;
            }
            auto v = parse_double(cells[j]);
            if (!v || !std::isfinite(*v))
                throw DataError(path.string() + ": non-numeric cell '" + cells[j] + "' at line " +
                                std::to_string(line_no) + ", column " + std::to_string(j + 1));
            row[j - 1] = *v;
        }
        rows.push_back(std::move(row));
    }
    if (!missing.empty()) {
        std::string msg = path.string() + ": " + std::to_string(missing.size()) + " missing value(s): ";
        for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg += (k ? "; " : "") + missing[k];
        if (missing.size() > 20) msg += "; ...";
        throw DataError(msg);
    }
    if (rows.size() < 2) throw DataError(path.string() + ": need at least two time periods");

    std::vector<long> offsets;
    offsets.reserve(dates.size());
    for (const auto& d : dates) offsets.push_back(parse_time_index(d));
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return offsets[a] < offsets[b]; });

    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
    std::vector<std::string> sorted_dates;
    for (std::size_t t = 0; t < order.size(); ++t) {
        for (std::size_t i = 0; i < n; ++i)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[order[t]][i];
        sorted_dates.push_back(dates[order[t]]);
    }
    Panel p(std::move(values), std::move(labels), offsets[order.front()]);
    p = p.with_time_labels(std::move(sorted_dates));
    if (has_tcode_row) p = p.with_tcodes(std::move(codes));
    return p;
}

void write_panel_csv(const Panel& p, const std::filesystem::path& path, bool write_tcodes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "time";
    for (const auto& l : p.labels()) out << ',' << l;
    out << '\n';
    if (write_tcodes && !p.tcodes().empty()) {
        out << "Transform:";
        for (int c : p.tcodes()) out << ',' << c;
        out << '\n';
    }
    out << std::setprecision(17);
    for (Eigen::Index t = 0; t < p.T(); ++t) {
        out << p.time_label(t);
        for (Eigen::Index i = 0; i < p.n(); ++i) out << ',' << p.values()(i, t);
        out << '\n';
    }
}

int tcode_lag_loss(int code) {
    switch (code) {
        case 1: case 4: return 0;
        case 2: case 5: return 1;
        case 3: case 6: case 7: return 2;
        default: throw std::invalid_argument("transform code must be in 1..7, got " + std::to_string(code));
    }
}

std::vector<double> apply_tcode(const std::vector<double>& series, int code) {
    const int loss = tcode_lag_loss(code);
    if (static_cast<int>(series.size()) <= loss)
        throw DataError("series too short for transform code " + std::to_string(code));
    std::vector<double> x = series;
    if (code >= 4 && code <= 6) {
        for (double& v : x) {
            if (!(v > 0.0)) throw DataError("transform code " + std::to_string(code) + " needs positive values");
            v = std::log(v);
        }
    }
    auto diff = [](const std::vector<double>& v) {
        std::vector<double> d(v.size() - 1);
        for (std::size_t t = 1; t < v.size(); ++t) d[t - 1] = v[t] - v[t - 1];
        return d;
    };
    switch (code) {
        case 1: case 4: return x;
        case 2: case 5: return diff(x);
        case 3: case 6: return diff(diff(x));
        case 7: {
            std::vector<double> growth(x.size() - 1);
            for (std::size_t t = 1; t < x.size(); ++t) {
                if (x[t - 1] == 0.0) throw DataError("transform code 7 divides by a zero observation");
                growth[t - 1] = x[t] / x[t - 1] - 1.0;
            }
            return diff(growth);
        }
    }
    return x;
}

Panel apply_tcodes(const Panel& raw) {
    if (raw.tcodes().empty()) throw DataError("panel carries no transform codes");
    int max_loss = 0;
    for (int c : raw.tcodes()) max_loss = std::max(max_loss, tcode_lag_loss(c));
    const Eigen::Index T_out = raw.T() - max_loss;
    if (T_out < 2) throw DataError("too few observations left after transforming");
    Eigen::MatrixXd out(raw.n(), T_out);
    for (Eigen::Index i = 0; i < raw.n(); ++i) {
        const int code = raw.tcodes()[static_cast<std::size_t>(i)];
        std::vector<double> s(static_cast<std::size_t>(raw.T()));
        for (Eigen::Index t = 0; t < raw.T(); ++t) s[static_cast<std::size_t>(t)] = raw.values()(i, t);
        std::vector<double> tr;
        try {
            tr = apply_tcode(s, code);
        } catch (const DataError& e) {
            throw DataError("series '" + raw.labels()[static_cast<std::size_t>(i)] + "': " + e.what());
        }
        const auto skip = static_cast<std::size_t>(max_loss - tcode_lag_loss(code));
        for (Eigen::Index t = 0; t < T_out; ++t) out(i, t) = tr[skip + static_cast<std::size_t>(t)];
    }
    std::vector<std::string> times;
    for (Eigen::Index t = max_loss; t < raw.T(); ++t) times.push_back(raw.time_label(t));
    Panel p(std::move(out), raw.labels(), raw.t0() + max_loss);
    return p.with_time_labels(std::move(times));
}

Panel standardize(const Panel& p) {
    const double T = static_cast<double>(p.T());
    Eigen::VectorXd mean = p.values().rowwise().mean();
    Eigen::MatrixXd centered = p.values().colwise() - mean;
    Eigen::VectorXd sd = (centered.array().square().rowwise().sum() / T).sqrt();
    for (Eigen::Index i = 0; i < p.n(); ++i)
        if (!(sd(i) * sd(i) > 1e-12))
            throw DataError("series '" + p.labels()[static_cast<std::size_t>(i)] +
                            "' is degenerate (sample variance <= 1e-12)");
    Panel out = p.with_values(centered.array().colwise() / sd.array());
    if (p.scale_.size() == 0) {
        out.shift_ = mean;
        out.scale_ = sd;
    } else {
        out.shift_ = p.shift_ + p.scale_.cwiseProduct(mean);
        out.scale_ = p.scale_.cwiseProduct(sd);
    }
    return out;
}

Eigen::MatrixXd sample_autocov(const Eigen::MatrixXd& y, long k) {
    const Eigen::Index T = y.cols();
    const Eigen::Index lag = std::abs(k);
    if (lag >= T) throw std::invalid_argument("autocovariance lag |k| must be < T");
    const Eigen::Index len = T - lag;
    Eigen::MatrixXd g = y.rightCols(len) * y.leftCols(len).transpose() / static_cast<double>(T);
    if (k < 0) g.transposeInPlace();
    return g;
}

CovMatrix sample_autocov(const Panel& p, long k) { return {k, sample_autocov(p.values(), k)}; }

}  // namespace fseq
