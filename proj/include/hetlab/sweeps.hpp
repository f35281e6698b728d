#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hetlab/io.hpp"
#include "hetlab/order.hpp"

namespace hetlab {

/// Parses "start:stop:step" (inclusive of stop within half a step) or a
/// comma-separated list. Range points are start + i * step, so they do not
/// accumulate rounding error.
std::vector<double> parse_grid(const std::string& text);

/// Comma-separated orders; "inf" is accepted.
std::vector<Order> parse_orders(const std::string& text);

/// Worker count from HETLAB_THREADS (0 or unset = hardware concurrency).
unsigned resolve_thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; the first exception is rethrown after all workers
/// stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

struct ThreeStateSweepOptions {
    std::vector<double> h_grid;
    double b = 1.0;
    std::vector<double> kappas{1.0};
    std::vector<Order> orders{Order(1.0)};
    std::vector<double> us{1.0};
    unsigned threads = 1;
};

/// Indices on the three-state triangle system for every (h, kappa, q, u).
/// Columns: h, b, kappa, q, u, pi_q, neqrqe, fhn, lci, is_metric,
/// is_ultrametric. neqrqe does not depend on q or u; it is evaluated on the
/// independently rescaled D(h, b).
SweepResult three_state_sweep(const ThreeStateSweepOptions& options);

enum class TauMode { optimal, grid };

TauMode parse_tau_mode(const std::string& text);

struct BmmSweepOptions {
    std::vector<double> theta1_grid;
    double theta2 = 5.0;
    double theta3 = 20.0;
    std::vector<Order> orders{Order(1.0)};
    double u = 1.0;
    TauMode tau_mode = TauMode::optimal;
    std::vector<double> tau_grid;
    unsigned threads = 1;
};

/// tau_mode = optimal: one comparison row per (theta1, q) with columns
/// theta1, theta2, theta3, q, u, tau, rrh, fhn, neqrqe, lci.
/// tau_mode = grid: columns theta1, theta2, theta3, q, tau, tau_optimal, rrh.
SweepResult bmm_sweep(const BmmSweepOptions& options);

/// Pooled, within and between heterogeneity of diagonal-Gaussian embeddings,
/// per label (sorted by label) or for the whole dataset. Groups of one record
/// are flagged "singleton".
SweepResult embeddings_decompose(const EmbeddingDataset& data, bool group_by_label, const std::vector<Order>& orders);

struct Neighborhood {
    std::size_t center;
    std::vector<std::size_t> members;  // center first, then by distance
    double pooled;
    double within;
    double between;
};

/// For every record, the record plus its k nearest records by Euclidean
/// distance between means (ties broken by lower index), with the Gaussian
/// decomposition at uniform weights over the k + 1 members.
std::vector<Neighborhood> neighborhood_heterogeneity(const EmbeddingDataset& data, std::size_t k, Order q,
                                                     unsigned threads = 1);

/// The `top` highest- and lowest-between neighborhoods, or every record in
/// index order when top is 0.
SweepResult embeddings_neighborhoods(const EmbeddingDataset& data, std::size_t k, Order q, std::size_t top,
                                     unsigned threads = 1);

/// Builds a synthetic embedding dataset from a JSON generator description:
///
///   {"n_z": 2, "labels": [{"name": "a", "count": 500,
///     "clusters": [{"mean": [0, 0], "spread": 1.0}],
///     "log_variance": [-6.2, -5.8]}]}
///
/// Each point picks a cluster uniformly, draws its mean from
/// N(cluster mean, spread^2 I) and each log-variance uniformly from the range.
/// The stream is fixed by the seed on every platform.
EmbeddingDataset synthesize_embeddings(const std::string& generator_json, std::uint64_t seed);

/// Soft-assignment decomposition at uniform weights for each order.
/// Columns: q, n, pooled, within, between, lande_warning, within_approximate.
SweepResult assignments_rrh(const AssignmentTable& table, const std::vector<Order>& orders);

} // namespace hetlab
