#include "fseq/error.hpp"
#include "fseq/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <tuple>

namespace fseq {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

}  // namespace

const ReportCell& ExperimentReport::cell(const std::string& method, const std::string& set, Eigen::Index n,
                                         Eigen::Index T) const {
    for (const auto& c : cells)
        if (c.method == method && c.index_set == set && c.n == n && c.T == T) return c;
    throw std::out_of_range("report has no cell (" + method + ", " + set + ", n=" + std::to_string(n) +
                            ", T=" + std::to_string(T) + ")");
}

void verify_report(const ExperimentReport& report) {
    using Key = std::tuple<std::string, std::string, Eigen::Index, Eigen::Index>;
    std::map<Key, std::vector<std::pair<int, double>>> groups;
    for (const auto& row : report.log) groups[{row.method, row.index_set, row.n, row.T}].emplace_back(row.replication, row.value);
    for (const auto& c : report.cells) {
        auto it = groups.find({c.method, c.index_set, c.n, c.T});
        if (it == groups.end() || static_cast<int>(it->second.size()) != c.replications)
            throw NumericalError("report log does not match cell (" + c.method + ", " + c.index_set + ")");
        auto rows = it->second;
        std::sort(rows.begin(), rows.end());
        double sum = 0.0;
        for (const auto& [rep, v] : rows) sum += v;
        const double mean = sum / static_cast<double>(rows.size());
        double ss = 0.0;
        for (const auto& [rep, v] : rows) ss += (v - mean) * (v - mean);
        const double sd = rows.size() > 1 ? std::sqrt(ss / static_cast<double>(rows.size() - 1)) : 0.0;
        const double tol = 1e-9 * std::max(1.0, std::abs(mean));
        if (std::abs(mean - c.mean) > tol || std::abs(sd - c.std) > tol)
            throw NumericalError("report cell (" + c.method + ", " + c.index_set + ") disagrees with its log");
    }
}

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    verify_report(report);
    auto out = open_out(path);
    out << "method,index_set,n,T,mean,std,replications\n" << std::setprecision(10);
    for (const auto& c : report.cells)
        out << c.method << ',' << c.index_set << ',' << c.n << ',' << c.T << ',' << c.mean << ',' << c.std << ','
            << c.replications << '\n';
}

void write_report_log_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "replication,method,index_set,n,T,value\n" << std::setprecision(17);
    for (const auto& r : report.log)
        out << r.replication << ',' << r.method << ',' << r.index_set << ',' << r.n << ',' << r.T << ',' << r.value
            << '\n';
}

void write_report_markdown(const ExperimentReport& report, const std::filesystem::path& path) {
    verify_report(report);
    auto out = open_out(path);
    out << "# " << report.title << "\n\n";
    out << "base seed " << report.base_seed << ", threads " << report.threads << ", runtime " << std::fixed
        << std::setprecision(1) << report.runtime_seconds << " s\n\n";
    out << "| method | index set | n | T | mean | (std) | reps |\n|---|---|---|---|---|---|---|\n";
    out << std::setprecision(3);
    for (const auto& c : report.cells)
        out << "| " << c.method << " | " << c.index_set << " | " << c.n << " | " << c.T << " | " << c.mean << " | ("
            << c.std << ") | " << c.replications << " |\n";
}

}  // namespace fseq
