#include "fseq/error.hpp"
#include "fseq/harness.hpp"

#include <fstream>
#include <sstream>

namespace fseq {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = strip(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    if (n_grid.empty() || T_grid.empty()) throw std::invalid_argument("config: n_grid and T_grid must be nonempty");
    for (auto n : n_grid)
        if (n < 11) throw std::invalid_argument("config: every n must be >= 11 (ten weak series plus strong ones)");
    for (auto T : T_grid)
        if (T < 20) throw std::invalid_argument("config: every T must be >= 20");
    if (index_sets.empty()) throw std::invalid_argument("config: index_sets must be nonempty");
    for (const auto& s : index_sets) (void)index_set(s, n_grid.front());
    if (r < 0 || q < 0 || r_chi < 1 || p_max < 0) throw std::invalid_argument("config: invalid estimator parameter");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        auto grid = [&] {
            std::vector<Eigen::Index> g;
            for (const auto& item : split_list(value)) g.push_back(to_long(key, item));
            return g;
        };
        if (key == "n_grid") cfg.n_grid = grid();
        else if (key == "T_grid") cfg.T_grid = grid();
        else if (key == "replications") cfg.replications = static_cast<int>(to_long(key, value));
        else if (key == "methods") cfg.methods = split_list(value);
        else if (key == "base_seed" || key == "seed") cfg.base_seed = static_cast<std::uint64_t>(to_long(key, value));
        else if (key == "index_sets") cfg.index_sets = split_list(value);
        else if (key == "r") cfg.r = static_cast<int>(to_long(key, value));
        else if (key == "q") cfg.q = static_cast<int>(to_long(key, value));
        else if (key == "M" || key == "bandwidth") cfg.bandwidth = value == "auto" ? 0 : static_cast<int>(to_long(key, value));
        else if (key == "burn_in") cfg.burn_in = static_cast<int>(to_long(key, value));
        else if (key == "idio_weight_mode") {
            if (value == "divide") cfg.weight_mode = WeightMode::Divide;
            else if (value == "multiply") cfg.weight_mode = WeightMode::Multiply;
            else throw std::invalid_argument("config: idio_weight_mode must be divide or multiply");
        } else if (key == "standardize_dlra") cfg.standardize_dlra = to_bool(key, value);
        else if (key == "threads") cfg.threads = static_cast<unsigned>(to_long(key, value));
        else if (key == "factors") {
            if (value == "estimated") cfg.factor_source = FactorSource::Estimated;
            else if (value == "oracle") cfg.factor_source = FactorSource::Oracle;
            else throw std::invalid_argument("config: factors must be estimated or oracle");
        } else if (key == "p_max") cfg.p_max = static_cast<int>(to_long(key, value));
        else if (key == "r_chi") cfg.r_chi = static_cast<int>(to_long(key, value));
        else if (key == "strong_count") cfg.strong_count = value == "auto" ? -1 : static_cast<int>(to_long(key, value));
        else throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<Eigen::Index> index_set(const std::string& name, Eigen::Index n) {
    std::vector<Eigen::Index> idx;
    if (name == "weak") {
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(10, n); ++i) idx.push_back(i);
    } else if (name == "strong") {
        for (Eigen::Index i = 10; i < n; ++i) idx.push_back(i);
    } else if (name == "all") {
        for (Eigen::Index i = 0; i < n; ++i) idx.push_back(i);
    } else {
        throw std::invalid_argument("unknown index set '" + name + "' (expected weak, strong, all)");
    }
    return idx;
}

}  // namespace fseq
