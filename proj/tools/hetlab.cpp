#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hetlab/error.hpp"
#include "hetlab/io.hpp"
#include "hetlab/sweeps.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4 };

struct OutputOptions {
    std::string out;
    std::string format;

    hetlab::Format resolve() const {
        if (!format.empty())
            return hetlab::parse_format(format);
        return out.empty() ? hetlab::Format::csv : hetlab::format_from_path(out);
    }
};

void add_output_flags(CLI::App* cmd, OutputOptions& options) {
    cmd->add_option("--out", options.out, "Output path (default: stdout)");
    cmd->add_option("--format", options.format, "csv or json (default: from --out extension, else csv)")
        ->check(CLI::IsMember({"csv", "json"}));
}

template <typename Writer>
void emit(const OutputOptions& options, Writer&& write) {
    const hetlab::Format format = options.resolve();
    if (options.out.empty()) {
        write(std::cout, format);
        std::cout.flush();
        return;
    }
    std::ofstream file(options.out, std::ios::binary);
    if (!file)
        throw hetlab::UsageError("cannot open '" + options.out + "' for writing");
    write(file, format);
    if (!file)
        throw hetlab::UsageError("failed writing '" + options.out + "'");
}

void emit_sweep(const OutputOptions& options, const hetlab::SweepResult& result) {
    emit(options, [&](std::ostream& os, hetlab::Format f) { hetlab::write_sweep(os, result, f); });
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw hetlab::UsageError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rényi heterogeneity and competing diversity indices"};
    app.require_subcommand(1);

    // three-state-sweep
    auto* three = app.add_subcommand("three-state-sweep", "Indices on the three-state triangle system");
    std::string three_grid = "0.1:3.0:0.1";
    double three_b = 1.0;
    std::string three_kappa = "1,10";
    std::string three_q = "1";
    std::string three_u = "1";
    OutputOptions three_out;
    three->add_option("--grid", three_grid, "Triangle heights h (start:stop:step or list)")->capture_default_str();
    three->add_option("--b", three_b, "Triangle base")->capture_default_str();
    three->add_option("--kappa", three_kappa, "Skewness values")->capture_default_str();
    three->add_option("--q", three_q, "Orders (list, 'inf' allowed)")->capture_default_str();
    three->add_option("--u", three_u, "Similarity scales u")->capture_default_str();
    add_output_flags(three, three_out);

    // bmm-sweep
    auto* bmm = app.add_subcommand("bmm-sweep", "Beta mixture heterogeneity and index comparison");
    std::string bmm_grid = "0.5:0.99:0.01";
    double bmm_theta2 = 5.0;
    double bmm_theta3 = 20.0;
    std::string bmm_q = "1,2";
    double bmm_u = 1.0;
    std::string bmm_tau_mode = "optimal";
    std::string bmm_tau_grid = "0:1:0.01";
    OutputOptions bmm_out;
    bmm->add_option("--grid", bmm_grid, "theta1 values")->capture_default_str();
    bmm->add_option("--theta2", bmm_theta2, "theta2")->capture_default_str();
    bmm->add_option("--theta3", bmm_theta3, "theta3")->capture_default_str();
    bmm->add_option("--q", bmm_q, "Orders (list, 'inf' allowed)")->capture_default_str();
    bmm->add_option("--u", bmm_u, "Similarity scale for the Leinster-Cobbold index")->capture_default_str();
    bmm->add_option("--tau-mode", bmm_tau_mode, "optimal or grid")
        ->check(CLI::IsMember({"optimal", "grid"}))
        ->capture_default_str();
    bmm->add_option("--tau-grid", bmm_tau_grid, "Thresholds for --tau-mode grid")->capture_default_str();
    add_output_flags(bmm, bmm_out);

    // embeddings
    auto* emb = app.add_subcommand("embeddings", "Gaussian embedding datasets");
    emb->require_subcommand(1);

    auto* dec = emb->add_subcommand("decompose", "Pooled/within/between heterogeneity per label or overall");
    std::string dec_input;
    std::string dec_group;
    std::string dec_q = "1,2";
    OutputOptions dec_out;
    dec->add_option("--input", dec_input, "Embedding file (.csv or .json)")->required();
    dec->add_option("--group-by", dec_group, "Group key (only 'label')")->check(CLI::IsMember({"label"}));
    dec->add_option("--q", dec_q, "Orders")->capture_default_str();
    add_output_flags(dec, dec_out);

    auto* hood = emb->add_subcommand("neighborhoods", "Heterogeneity of nearest-neighbor neighborhoods");
    std::string hood_input;
    std::size_t hood_k = 49;
    std::string hood_q = "1";
    std::size_t hood_top = 10;
    OutputOptions hood_out;
    hood->add_option("--input", hood_input, "Embedding file (.csv or .json)")->required();
    hood->add_option("--k", hood_k, "Neighbors per record (neighborhood = self + k)")->capture_default_str();
    hood->add_option("--q", hood_q, "Order")->capture_default_str();
    hood->add_option("--top", hood_top, "Highest/lowest neighborhoods to list (0 = all)")->capture_default_str();
    add_output_flags(hood, hood_out);

    auto* synth = emb->add_subcommand("synth", "Generate a synthetic embedding dataset");
    std::string synth_spec;
    std::uint64_t synth_seed = 0;
    OutputOptions synth_out;
    synth->add_option("--spec", synth_spec, "Generator JSON file")->required();
    synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
    add_output_flags(synth, synth_out);

    // assignments
    auto* assign = app.add_subcommand("assignments", "Soft category assignment tables");
    assign->require_subcommand(1);
    auto* rrh = assign->add_subcommand("rrh", "Pooled/within/between heterogeneity of soft assignments");
    std::string rrh_input;
    std::string rrh_q = "0,1,2,inf";
    OutputOptions rrh_out;
    rrh->add_option("--input", rrh_input, "Assignment file (.csv or .json)")->required();
    rrh->add_option("--q", rrh_q, "Orders")->capture_default_str();
    add_output_flags(rrh, rrh_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const unsigned threads = hetlab::resolve_thread_count();
        if (*three) {
            hetlab::ThreeStateSweepOptions o;
            o.h_grid = hetlab::parse_grid(three_grid);
            o.b = three_b;
            o.kappas = hetlab::parse_grid(three_kappa);
            o.orders = hetlab::parse_orders(three_q);
            o.us = hetlab::parse_grid(three_u);
            o.threads = threads;
            emit_sweep(three_out, hetlab::three_state_sweep(o));
        } else if (*bmm) {
            hetlab::BmmSweepOptions o;
            o.theta1_grid = hetlab::parse_grid(bmm_grid);
            o.theta2 = bmm_theta2;
            o.theta3 = bmm_theta3;
            o.orders = hetlab::parse_orders(bmm_q);
            o.u = bmm_u;
            o.tau_mode = hetlab::parse_tau_mode(bmm_tau_mode);
            if (o.tau_mode == hetlab::TauMode::grid)
                o.tau_grid = hetlab::parse_grid(bmm_tau_grid);
            o.threads = threads;
            emit_sweep(bmm_out, hetlab::bmm_sweep(o));
        } else if (*dec) {
            const auto data = hetlab::read_embeddings(dec_input);
            emit_sweep(dec_out, hetlab::embeddings_decompose(data, !dec_group.empty(), hetlab::parse_orders(dec_q)));
        } else if (*hood) {
            const auto data = hetlab::read_embeddings(hood_input);
            const auto orders = hetlab::parse_orders(hood_q);
            if (orders.size() != 1)
                throw hetlab::UsageError("neighborhoods takes a single order");
            emit_sweep(hood_out, hetlab::embeddings_neighborhoods(data, hood_k, orders.front(), hood_top, threads));
        } else if (*synth) {
            const auto data = hetlab::synthesize_embeddings(read_file(synth_spec), synth_seed);
            emit(synth_out, [&](std::ostream& os, hetlab::Format f) { hetlab::write_embeddings(os, data, f); });
        } else if (*rrh) {
            const auto table = hetlab::read_assignments(rrh_input);
            emit_sweep(rrh_out, hetlab::assignments_rrh(table, hetlab::parse_orders(rrh_q)));
        }
    } catch (const hetlab::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const hetlab::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const hetlab::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const hetlab::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
