#include "hetlab/sweeps.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hetlab/beta_mixture.hpp"
#include "hetlab/categorical_rrh.hpp"
#include "hetlab/classic.hpp"
#include "hetlab/error.hpp"
#include "hetlab/gaussian.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

namespace {

constexpr const char* kVersion = "hetlab 0.1.0";

double parse_number(const std::string& raw) {
    std::string_view text(raw);
    while (!text.empty() && text.front() == ' ')
        text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ')
        text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw UsageError("cannot parse number '" + raw + "'");
    return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(text);
    while (std::getline(in, current, sep))
        parts.push_back(current);
    if (!text.empty() && text.back() == sep)
        parts.emplace_back();
    return parts;
}

std::string join_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out += (i ? "," : "") + format_sweep_number(values[i]);
    return out;
}

std::string join_orders(const std::vector<Order>& orders) {
    std::string out;
    for (std::size_t i = 0; i < orders.size(); ++i)
        out += (i ? "," : "") + format_order(orders[i]);
    return out;
}

Cell order_cell(Order q) {
    return q.is_infinite() ? Cell(std::numeric_limits<double>::infinity()) : Cell(q.value());
}

template <typename F>
Cell optional_value(F&& compute) {
    try {
        return Cell(compute());
    } catch (const NumericalError&) {
        return Cell{};
    }
}

// Deterministic variates built on the standard-specified mt19937_64 stream;
// std::*_distribution output differs between standard libraries.
class Variates {
public:
    explicit Variates(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do
            u1 = uniform();
        while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace

std::vector<double> parse_grid(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            throw UsageError("range grid must be start:stop:step, got '" + text + "'");
        const double start = parse_number(parts[0]);
        const double stop = parse_number(parts[1]);
        const double step = parse_number(parts[2]);
        if (!(step > 0.0) || stop < start)
            throw UsageError("range grid needs step > 0 and stop >= start, got '" + text + "'");
        const double span = (stop - start) / step;
        if (span > 1e7)
            throw UsageError("range grid '" + text + "' has too many points");
        const auto count = static_cast<long>(std::floor(span + 0.5 + 1e-9)) + 1;
        std::vector<double> grid;
        for (long i = 0; i < count; ++i) {
            const double v = start + static_cast<double>(i) * step;
            if (v > stop + 0.5 * step)
                break;
            grid.push_back(v);
        }
        return grid;
    }
    std::vector<double> grid;
    for (const auto& part : split(text, ','))
        grid.push_back(parse_number(part));
    if (grid.empty())
        throw UsageError("grid is empty");
    return grid;
}

std::vector<Order> parse_orders(const std::string& text) {
    std::vector<Order> orders;
    for (const auto& part : split(text, ',')) {
        try {
            orders.push_back(parse_order(part));
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }
    if (orders.empty())
        throw UsageError("order list is empty");
    return orders;
}

unsigned resolve_thread_count() {
    unsigned requested = 0;
    if (const char* env = std::getenv("HETLAB_THREADS")) {
        const std::string value(env);
        unsigned parsed = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
        if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
            throw UsageError("HETLAB_THREADS must be a non-negative integer, got '" + value + "'");
        requested = parsed;
    }
    if (requested == 0)
        requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
            try {
                body(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

SweepResult three_state_sweep(const ThreeStateSweepOptions& options) {
    if (options.h_grid.empty() || options.kappas.empty() || options.orders.empty() || options.us.empty())
        throw UsageError("three-state sweep grids must be non-empty");
    if (!(options.b > 0.0))
        throw UsageError("base b must be positive");
    for (double h : options.h_grid)
        if (!(h > 0.0))
            throw UsageError("heights must be positive");
    for (double k : options.kappas)
        if (!(k >= 0.0))
            throw UsageError("kappa must be non-negative");
    for (double u : options.us)
        if (!(u >= 0.0))
            throw UsageError("u must be non-negative");

    SweepResult result;
    result.command = "three-state-sweep";
    result.metadata = {{"version", kVersion},
                       {"h", join_numbers(options.h_grid)},
                       {"b", format_sweep_number(options.b)},
                       {"kappa", join_numbers(options.kappas)},
                       {"q", join_orders(options.orders)},
                       {"u", join_numbers(options.us)},
                       {"metric_tolerance", format_sweep_number(kMetricTolerance)},
                       {"neqrqe", "q = 2 semantics on D(h, b) rescaled per h"}};
    result.columns = {"h", "b", "kappa", "q", "u", "pi_q", "neqrqe", "fhn", "lci", "is_metric", "is_ultrametric"};

    const std::size_t per_h = options.kappas.size() * options.orders.size() * options.us.size();
    std::vector<std::vector<std::vector<Cell>>> blocks(options.h_grid.size());
    parallel_for(options.h_grid.size(), options.threads, [&](std::size_t hi) {
        const double h = options.h_grid[hi];
        const Eigen::Matrix3d d = three_state_distance(h, options.b);
        const bool metric = is_metric(d);
        const bool ultra = is_ultrametric(d);
        const Eigen::MatrixXd rescaled = rescale_distance(d);
        auto& block = blocks[hi];
        block.reserve(per_h);
        for (double kappa : options.kappas) {
            const Eigen::Vector3d p = three_state_probs(kappa);
            const Cell ne = optional_value([&] { return neqrqe(rescaled, p); });
            for (Order q : options.orders) {
                const double pi = renyi_heterogeneity(p, q);
                const Cell fhn = optional_value([&] { return functional_hill(d, p, q); });
                for (double u : options.us) {
                    const Cell lci = optional_value([&] { return leinster_cobbold(similarity_from_distance(d, u), p, q); });
                    block.push_back({h, options.b, kappa, order_cell(q), u, pi, ne, fhn, lci, metric, ultra});
                }
            }
        }
    });
    for (auto& block : blocks)
        for (auto& row : block)
            result.add_row(std::move(row));
    return result;
}

TauMode parse_tau_mode(const std::string& text) {
    if (text == "optimal")
        return TauMode::optimal;
    if (text == "grid")
        return TauMode::grid;
    throw UsageError("unknown tau mode '" + text + "' (expected optimal or grid)");
}

SweepResult bmm_sweep(const BmmSweepOptions& options) {
    if (options.theta1_grid.empty() || options.orders.empty())
        throw UsageError("bmm sweep grids must be non-empty");
    if (options.tau_mode == TauMode::grid && options.tau_grid.empty())
        throw UsageError("tau mode 'grid' needs a tau grid");
    for (double tau : options.tau_grid)
        if (!(tau >= 0.0 && tau <= 1.0))
            throw UsageError("tau values must lie in [0, 1]");
    if (!(options.u >= 0.0))
        throw UsageError("u must be non-negative");
    std::vector<BetaMixtureParams> thetas;
    for (double t1 : options.theta1_grid) {
        try {
            thetas.emplace_back(t1, options.theta2, options.theta3);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }

    SweepResult result;
    result.command = "bmm-sweep";
    result.metadata = {{"version", kVersion},
                       {"theta1", join_numbers(options.theta1_grid)},
                       {"theta2", format_sweep_number(options.theta2)},
                       {"theta3", format_sweep_number(options.theta3)},
                       {"q", join_orders(options.orders)},
                       {"tau_mode", options.tau_mode == TauMode::optimal ? "optimal" : "grid"}};
    if (options.tau_mode == TauMode::optimal) {
        result.metadata.emplace_back("u", format_sweep_number(options.u));
        result.columns = {"theta1", "theta2", "theta3", "q", "u", "tau", "rrh", "fhn", "neqrqe", "lci"};
    } else {
        result.metadata.emplace_back("tau", join_numbers(options.tau_grid));
        result.columns = {"theta1", "theta2", "theta3", "q", "tau", "tau_optimal", "rrh"};
    }

    std::vector<std::vector<std::vector<Cell>>> blocks(thetas.size());
    parallel_for(thetas.size(), options.threads, [&](std::size_t i) {
        const BetaMixtureParams& theta = thetas[i];
        const double tau_opt = optimal_threshold(theta);
        for (Order q : options.orders) {
            if (options.tau_mode == TauMode::optimal) {
                const ComparisonRow row = bmm_index_comparison(theta, q, options.u);
                blocks[i].push_back({theta.theta1, theta.theta2, theta.theta3, order_cell(q), options.u, tau_opt,
                                     row.rrh, row.fhn, row.neqrqe ? Cell(*row.neqrqe) : Cell{}, row.lci});
            } else {
                for (double tau : options.tau_grid)
                    blocks[i].push_back({theta.theta1, theta.theta2, theta.theta3, order_cell(q), tau, tau_opt,
                                         bmm_between_rrh(theta, tau, q)});
            }
        }
    });
    for (auto& block : blocks)
        for (auto& row : block)
            result.add_row(std::move(row));
    return result;
}

SweepResult embeddings_decompose(const EmbeddingDataset& data, bool group_by_label,
                                 const std::vector<Order>& orders) {
    data.validate();
    if (orders.empty())
        throw UsageError("order list is empty");
    for (Order q : orders)
        if (q.is_zero() || q.is_infinite())
            throw UsageError("embedding decomposition needs 0 < q < inf, got " + format_order(q));

    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto& label = data.labels[static_cast<std::size_t>(i)];
        if (group_by_label && !label)
            throw ValidationError("record '" + data.ids[static_cast<std::size_t>(i)] + "' has no label");
        groups[group_by_label ? *label : std::string("all")].push_back(i);
    }

    SweepResult result;
    result.command = "embeddings decompose";
    result.metadata = {{"version", kVersion},
                       {"group_by", group_by_label ? "label" : "none"},
                       {"q", join_orders(orders)},
                       {"records", std::to_string(data.size())},
                       {"n_z", std::to_string(data.dim())},
                       {"weights", "uniform within each group"}};
    result.columns = {"group", "n", "q", "pooled", "within", "between", "flag"};
    const Eigen::MatrixXd variances = data.variances();
    for (const auto& [name, members] : groups) {
        const auto count = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXd means(count, data.dim());
        Eigen::MatrixXd vars(count, data.dim());
        for (Eigen::Index r = 0; r < count; ++r) {
            means.row(r) = data.means.row(members[static_cast<std::size_t>(r)]);
            vars.row(r) = variances.row(members[static_cast<std::size_t>(r)]);
        }
        const DiagonalGaussianEnsemble ensemble(means, vars);
        for (Order q : orders) {
            const DecompositionResult d = gaussian_decompose(ensemble, q);
            const std::string flag = count == 1 ? "singleton" : "";
            result.add_row({name, static_cast<double>(count), order_cell(q), d.pooled, d.within,
                            count == 1 ? 1.0 : d.between, flag});
        }
    }
    return result;
}

std::vector<Neighborhood> neighborhood_heterogeneity(const EmbeddingDataset& data, std::size_t k, Order q,
                                                     unsigned threads) {
    data.validate();
    const auto n = static_cast<std::size_t>(data.size());
    if (k == 0 || k >= n)
        throw UsageError("neighborhood size k must satisfy 0 < k < N = " + std::to_string(n));
    if (q.is_zero() || q.is_infinite())
        throw UsageError("neighborhood heterogeneity needs 0 < q < inf");

    const Eigen::MatrixXd variances = data.variances();
    std::vector<Neighborhood> out(n);
    parallel_for(n, threads, [&](std::size_t center) {
        std::vector<std::pair<double, std::size_t>> candidates;
        candidates.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == center)
                continue;
            const double d2 = (data.means.row(static_cast<Eigen::Index>(j)) -
                               data.means.row(static_cast<Eigen::Index>(center)))
                                  .squaredNorm();
            candidates.emplace_back(d2, j);
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
        Neighborhood& hood = out[center];
        hood.center = center;
        hood.members.push_back(center);
        for (std::size_t r = 0; r < k; ++r)
            hood.members.push_back(candidates[r].second);

        const auto m = static_cast<Eigen::Index>(hood.members.size());
        Eigen::MatrixXd means(m, data.dim());
        Eigen::MatrixXd vars(m, data.dim());
        for (Eigen::Index r = 0; r < m; ++r) {
            means.row(r) = data.means.row(static_cast<Eigen::Index>(hood.members[static_cast<std::size_t>(r)]));
            vars.row(r) = variances.row(static_cast<Eigen::Index>(hood.members[static_cast<std::size_t>(r)]));
        }
        const DecompositionResult d = gaussian_decompose(DiagonalGaussianEnsemble(means, vars), q);
        hood.pooled = d.pooled;
        hood.within = d.within;
        hood.between = d.between;
    });
    return out;
}

SweepResult embeddings_neighborhoods(const EmbeddingDataset& data, std::size_t k, Order q, std::size_t top,
                                     unsigned threads) {
    const std::vector<Neighborhood> hoods = neighborhood_heterogeneity(data, k, q, threads);
    double lo = hoods.front().between;
    double hi = lo;
    for (const auto& h : hoods) {
        lo = std::min(lo, h.between);
        hi = std::max(hi, h.between);
    }

    SweepResult result;
    result.command = "embeddings neighborhoods";
    result.metadata = {{"version", kVersion},
                       {"k", std::to_string(k)},
                       {"q", format_order(q)},
                       {"top", std::to_string(top)},
                       {"records", std::to_string(data.size())},
                       {"between_min", format_sweep_number(lo)},
                       {"between_max", format_sweep_number(hi)},
                       {"tie_rule", "equal distances ordered by record index"}};
    result.columns = {"kind", "rank", "id", "label", "pooled", "within", "between", "members"};

    auto emit = [&](const char* kind, std::size_t rank, const Neighborhood& h) {
        std::string members;
        for (std::size_t i = 0; i < h.members.size(); ++i)
            members += (i ? ";" : "") + data.ids[h.members[i]];
        const auto& label = data.labels[h.center];
        result.add_row({std::string(kind), static_cast<double>(rank), data.ids[h.center],
                        label ? Cell(*label) : Cell(std::string()), h.pooled, h.within, h.between, members});
    };

    if (top == 0) {
        for (std::size_t i = 0; i < hoods.size(); ++i)
            emit("all", i + 1, hoods[i]);
        return result;
    }
    std::vector<std::size_t> order(hoods.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return hoods[a].between > hoods[b].between; });
    const std::size_t shown = std::min(top, order.size());
    for (std::size_t r = 0; r < shown; ++r)
        emit("highest", r + 1, hoods[order[r]]);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return hoods[a].between < hoods[b].between; });
    for (std::size_t r = 0; r < shown; ++r)
        emit("lowest", r + 1, hoods[order[r]]);
    return result;
}

EmbeddingDataset synthesize_embeddings(const std::string& generator_json, std::uint64_t seed) {
    using json = nlohmann::json;
    json spec;
    try {
        spec = json::parse(generator_json);
    } catch (const json::exception& e) {
        throw UsageError(std::string("generator spec is not valid JSON: ") + e.what());
    }
    auto fail = [](const std::string& what) { throw UsageError("generator spec: " + what); };
    if (!spec.is_object() || !spec.contains("n_z") || !spec["n_z"].is_number_integer())
        fail("needs an integer n_z");
    const long n_z = spec["n_z"].get<long>();
    if (n_z < 1)
        fail("n_z must be positive");
    if (!spec.contains("labels") || !spec["labels"].is_array() || spec["labels"].empty())
        fail("needs a non-empty labels array");

    struct Cluster {
        Eigen::VectorXd mean;
        double spread;
    };
    struct LabelSpec {
        std::string name;
        long count;
        std::vector<Cluster> clusters;
        double log_var_lo;
        double log_var_hi;
    };
    std::vector<LabelSpec> labels;
    long total = 0;
    for (const json& node : spec["labels"]) {
        LabelSpec l;
        if (!node.is_object() || !node.contains("name") || !node["name"].is_string())
            fail("every label needs a string name");
        l.name = node["name"].get<std::string>();
        if (!node.contains("count") || !node["count"].is_number_integer() || node["count"].get<long>() < 1)
            fail("label '" + l.name + "' needs a positive integer count");
        l.count = node["count"].get<long>();
        if (!node.contains("clusters") || !node["clusters"].is_array() || node["clusters"].empty())
            fail("label '" + l.name + "' needs a non-empty clusters array");
        for (const json& c : node["clusters"]) {
            if (!c.is_object() || !c.contains("mean") || !c["mean"].is_array() ||
                static_cast<long>(c["mean"].size()) != n_z)
                fail("cluster means of label '" + l.name + "' must have length n_z");
            Cluster cluster{Eigen::VectorXd(n_z), c.value("spread", 0.0)};
            for (long j = 0; j < n_z; ++j) {
                if (!c["mean"][static_cast<std::size_t>(j)].is_number())
                    fail("cluster means must be numbers");
                cluster.mean(j) = c["mean"][static_cast<std::size_t>(j)].get<double>();
            }
            if (!(cluster.spread >= 0.0) || !std::isfinite(cluster.spread))
                fail("cluster spread must be non-negative");
            l.clusters.push_back(std::move(cluster));
        }
        if (!node.contains("log_variance") || !node["log_variance"].is_array() || node["log_variance"].size() != 2 ||
            !node["log_variance"][0].is_number() || !node["log_variance"][1].is_number())
            fail("label '" + l.name + "' needs log_variance [lo, hi]");
        l.log_var_lo = node["log_variance"][0].get<double>();
        l.log_var_hi = node["log_variance"][1].get<double>();
        if (!(l.log_var_lo <= l.log_var_hi) || !std::isfinite(l.log_var_lo) || !std::isfinite(l.log_var_hi))
            fail("log_variance range must be finite with lo <= hi");
        if (l.name.find_first_of(",\n\r") != std::string::npos)
            fail("label names must not contain commas or line breaks");
        total += l.count;
        labels.push_back(std::move(l));
    }

    EmbeddingDataset data;
    data.means.resize(total, n_z);
    data.log_variances.resize(total, n_z);
    Variates rng(seed);
    const int width = static_cast<int>(std::to_string(total).size());
    Eigen::Index row = 0;
    for (const LabelSpec& l : labels) {
        for (long i = 0; i < l.count; ++i, ++row) {
            const auto pick = std::min<std::size_t>(
                static_cast<std::size_t>(rng.uniform() * static_cast<double>(l.clusters.size())), l.clusters.size() - 1);
            const Cluster& c = l.clusters[pick];
            for (long j = 0; j < n_z; ++j)
                data.means(row, j) = c.mean(j) + c.spread * rng.normal();
            for (long j = 0; j < n_z; ++j)
                data.log_variances(row, j) = l.log_var_lo + (l.log_var_hi - l.log_var_lo) * rng.uniform();
            std::string id = std::to_string(row);
            id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
            data.ids.push_back("x" + id);
            data.labels.emplace_back(l.name);
        }
    }
    data.validate();
    return data;
}

SweepResult assignments_rrh(const AssignmentTable& table, const std::vector<Order>& orders) {
    if (orders.empty())
        throw UsageError("order list is empty");
    SweepResult result;
    result.command = "assignments rrh";
    result.metadata = {{"version", kVersion},
                       {"q", join_orders(orders)},
                       {"records", std::to_string(table.probabilities.rows())},
                       {"n_z", std::to_string(table.probabilities.cols())},
                       {"weights", "uniform"},
                       {"within_inf_stand_in", format_sweep_number(kWithinInfinityStandIn)}};
    result.columns = {"q", "n", "pooled", "within", "between", "lande_warning", "within_approximate"};
    for (Order q : orders) {
        const DecompositionResult d = rrh_decompose(table.probabilities, q);
        result.add_row({order_cell(q), static_cast<double>(table.probabilities.rows()), d.pooled, d.within, d.between,
                        d.lande_warning, d.within_approximate});
    }
    return result;
}

} // namespace hetlab
