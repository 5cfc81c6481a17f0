#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace fseq {

/// Stream identifiers used by the simulators. Each (seed, replication,
/// stream) key gives an independent generator, so draws of one kind never
/// shift when another kind changes length.
enum class Stream : std::uint64_t {
    StateShocks = 1,
    IdioCommon = 2,
    IdioSpecific = 3,
    IdioLoadings = 4,
    Auxiliary = 5,
};

/// Gaussian generator keyed by (seed, replication, stream).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t replication, Stream stream);

    double normal() { return dist_(engine_); }
    double uniform();

    /// rows x cols standard normals, filled column by column.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

/// SplitMix64 finalizer; used to fold key parts into seed material.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x);

}  // namespace fseq
