#include "hetlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hetlab/error.hpp"
#include "hetlab/renyi.hpp"

namespace hetlab {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

std::string where(const std::string& source, long line) {
    return source + ":" + std::to_string(line) + ": ";
}

double parse_double(const std::string& text, const std::string& context) {
    std::string_view view(text);
    while (!view.empty() && view.front() == ' ')
        view.remove_prefix(1);
    while (!view.empty() && view.back() == ' ')
        view.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
    if (view.empty() || ec != std::errc() || ptr != view.data() + view.size())
        throw ValidationError(context + "cannot parse number '" + text + "'");
    if (!std::isfinite(value))
        throw ValidationError(context + "value '" + text + "' is not finite");
    return value;
}

void check_plain_field(const std::string& value, const char* what) {
    if (value.find_first_of(",\n\r") != std::string::npos)
        throw ValidationError(std::string(what) + " '" + value + "' contains a comma or line break");
}

// Matches a header against the expected prefix_1..prefix_n sequence.
long count_indexed(const std::vector<std::string>& header, std::size_t start, const std::string& prefix) {
    long n = 0;
    while (start + static_cast<std::size_t>(n) < header.size() &&
           header[start + static_cast<std::size_t>(n)] == prefix + std::to_string(n + 1))
        ++n;
    return n;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path + "'");
    return in;
}

json parse_json(std::istream& in, const std::string& source) {
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(source + ": malformed JSON: " + e.what());
    }
}

std::vector<double> json_vector(const json& node, const std::string& context) {
    if (!node.is_array())
        throw ValidationError(context + "expected an array of numbers");
    std::vector<double> out;
    for (const json& v : node) {
        if (!v.is_number())
            throw ValidationError(context + "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

double round_sweep(double value) {
    return std::stod(format_sweep_number(value));
}

} // namespace

Format parse_format(const std::string& text) {
    if (text == "csv")
        return Format::csv;
    if (text == "json")
        return Format::json;
    throw UsageError("unknown format '" + text + "' (expected csv or json)");
}

Format format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == "json")
            return Format::json;
    }
    return Format::csv;
}

void EmbeddingDataset::validate() const {
    const auto n = static_cast<std::size_t>(means.rows());
    if (n == 0 || means.cols() == 0)
        throw ValidationError("embedding dataset is empty");
    if (ids.size() != n || labels.size() != n || log_variances.rows() != means.rows() ||
        log_variances.cols() != means.cols())
        throw ValidationError("embedding dataset fields have inconsistent sizes");
    if (!means.allFinite() || !log_variances.allFinite())
        throw ValidationError("embedding means and log-variances must be finite");
}

EmbeddingDataset read_embeddings(std::istream& in, Format format, const std::string& source) {
    EmbeddingDataset data;
    std::vector<std::vector<double>> m_rows;
    std::vector<std::vector<double>> s_rows;
    long n_z = 0;

    if (format == Format::json) {
        const json doc = parse_json(in, source);
        if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
            throw ValidationError(source + ": expected an object with a \"records\" array");
        long index = 0;
        for (const json& rec : doc["records"]) {
            const std::string ctx = source + ": record " + std::to_string(index) + ": ";
            if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() || !rec.contains("m") ||
                !rec.contains("s"))
                throw ValidationError(ctx + "expected fields id, m, s");
            data.ids.push_back(rec["id"].get<std::string>());
            if (rec.contains("label") && rec["label"].is_string() && !rec["label"].get<std::string>().empty())
                data.labels.emplace_back(rec["label"].get<std::string>());
            else
                data.labels.emplace_back(std::nullopt);
            m_rows.push_back(json_vector(rec["m"], ctx));
            s_rows.push_back(json_vector(rec["s"], ctx));
            if (index == 0)
                n_z = static_cast<long>(m_rows.back().size());
            if (static_cast<long>(m_rows.back().size()) != n_z || static_cast<long>(s_rows.back().size()) != n_z)
                throw ValidationError(ctx + "m and s must both have length " + std::to_string(n_z));
            ++index;
        }
        if (doc.contains("n_z") && doc["n_z"].is_number_integer() && !m_rows.empty() &&
            doc["n_z"].get<long>() != n_z)
            throw ValidationError(source + ": n_z does not match the record vectors");
    } else {
        std::string line;
        long line_no = 0;
        std::vector<std::string> header;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            header = split_csv_line(line);
            break;
        }
        if (header.size() < 4 || header[0] != "id" || header[1] != "label")
            throw ValidationError(where(source, line_no) + "expected header id,label,m_1..m_nz,s_1..s_nz");
        n_z = count_indexed(header, 2, "m_");
        if (n_z == 0 || count_indexed(header, 2 + static_cast<std::size_t>(n_z), "s_") != n_z ||
            header.size() != 2 + 2 * static_cast<std::size_t>(n_z))
            throw ValidationError(where(source, line_no) + "expected header id,label,m_1..m_nz,s_1..s_nz");
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            const auto fields = split_csv_line(line);
            const std::string ctx = where(source, line_no);
            if (fields.size() != header.size())
                throw ValidationError(ctx + "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(fields.size()));
            data.ids.push_back(fields[0]);
            data.labels.push_back(fields[1].empty() ? std::nullopt : std::optional<std::string>(fields[1]));
            std::vector<double> m(static_cast<std::size_t>(n_z));
            std::vector<double> s(static_cast<std::size_t>(n_z));
            for (long j = 0; j < n_z; ++j) {
                m[static_cast<std::size_t>(j)] = parse_double(fields[2 + static_cast<std::size_t>(j)], ctx);
                s[static_cast<std::size_t>(j)] = parse_double(fields[2 + static_cast<std::size_t>(n_z + j)], ctx);
            }
            m_rows.push_back(std::move(m));
            s_rows.push_back(std::move(s));
        }
    }

    if (m_rows.empty())
        throw ValidationError(source + ": no embedding records");
    data.means.resize(static_cast<Eigen::Index>(m_rows.size()), n_z);
    data.log_variances.resize(static_cast<Eigen::Index>(m_rows.size()), n_z);
    for (std::size_t i = 0; i < m_rows.size(); ++i)
        for (long j = 0; j < n_z; ++j) {
            data.means(static_cast<Eigen::Index>(i), j) = m_rows[i][static_cast<std::size_t>(j)];
            data.log_variances(static_cast<Eigen::Index>(i), j) = s_rows[i][static_cast<std::size_t>(j)];
        }
    data.validate();
    return data;
}

EmbeddingDataset read_embeddings(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_embeddings(in, format_from_path(path), path);
}

void write_embeddings(std::ostream& out, const EmbeddingDataset& data, Format format) {
    data.validate();
    const Eigen::Index n_z = data.dim();
    if (format == Format::json) {
        json records = json::array();
        for (Eigen::Index i = 0; i < data.size(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            json rec;
            rec["id"] = data.ids[k];
            rec["label"] = data.labels[k] ? json(*data.labels[k]) : json(nullptr);
            rec["m"] = std::vector<double>(data.means.row(i).begin(), data.means.row(i).end());
            rec["s"] = std::vector<double>(data.log_variances.row(i).begin(), data.log_variances.row(i).end());
            records.push_back(std::move(rec));
        }
        json doc;
        doc["n_z"] = n_z;
        doc["records"] = std::move(records);
        out << doc.dump(1) << '\n';
        return;
    }
    out << "id,label";
    for (Eigen::Index j = 0; j < n_z; ++j)
        out << ",m_" << j + 1;
    for (Eigen::Index j = 0; j < n_z; ++j)
        out << ",s_" << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        check_plain_field(data.ids[k], "id");
        out << data.ids[k] << ',';
        if (data.labels[k]) {
            check_plain_field(*data.labels[k], "label");
            out << *data.labels[k];
        }
        for (Eigen::Index j = 0; j < n_z; ++j)
            out << ',' << format_exact(data.means(i, j));
        for (Eigen::Index j = 0; j < n_z; ++j)
            out << ',' << format_exact(data.log_variances(i, j));
        out << '\n';
    }
}

AssignmentTable read_assignments(std::istream& in, Format format, const std::string& source) {
    AssignmentTable table;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> row_context;
    long n_z = 0;

    if (format == Format::json) {
        const json doc = parse_json(in, source);
        if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
            throw ValidationError(source + ": expected an object with a \"records\" array");
        long index = 0;
        for (const json& rec : doc["records"]) {
            const std::string ctx = source + ": record " + std::to_string(index) + ": ";
            if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() || !rec.contains("p"))
                throw ValidationError(ctx + "expected fields id, p");
            table.ids.push_back(rec["id"].get<std::string>());
            rows.push_back(json_vector(rec["p"], ctx));
            if (index == 0)
                n_z = static_cast<long>(rows.back().size());
            if (static_cast<long>(rows.back().size()) != n_z || n_z == 0)
                throw ValidationError(ctx + "p must have length " + std::to_string(n_z));
            row_context.push_back(ctx);
            ++index;
        }
    } else {
        std::string line;
        long line_no = 0;
        std::vector<std::string> header;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            header = split_csv_line(line);
            break;
        }
        if (header.size() < 2 || header[0] != "id")
            throw ValidationError(where(source, line_no) + "expected header id,p_1..p_nz");
        n_z = count_indexed(header, 1, "p_");
        if (n_z == 0 || header.size() != 1 + static_cast<std::size_t>(n_z))
            throw ValidationError(where(source, line_no) + "expected header id,p_1..p_nz");
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r")
                continue;
            const auto fields = split_csv_line(line);
            const std::string ctx = where(source, line_no);
            if (fields.size() != header.size())
                throw ValidationError(ctx + "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(fields.size()));
            table.ids.push_back(fields[0]);
            std::vector<double> p(static_cast<std::size_t>(n_z));
            for (long j = 0; j < n_z; ++j)
                p[static_cast<std::size_t>(j)] = parse_double(fields[1 + static_cast<std::size_t>(j)], ctx);
            rows.push_back(std::move(p));
            row_context.push_back(ctx);
        }
    }

    if (rows.empty())
        throw ValidationError(source + ": no assignment rows");
    table.probabilities.resize(static_cast<Eigen::Index>(rows.size()), n_z);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (long j = 0; j < n_z; ++j)
            table.probabilities(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        try {
            validate_distribution(table.probabilities.row(static_cast<Eigen::Index>(i)).transpose());
        } catch (const ValidationError& e) {
            throw ValidationError(row_context[i] + "row '" + table.ids[i] + "': " + e.what());
        }
    }
    return table;
}

AssignmentTable read_assignments(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_assignments(in, format_from_path(path), path);
}

void write_assignments(std::ostream& out, const AssignmentTable& table, Format format) {
    const Eigen::Index n_z = table.probabilities.cols();
    if (format == Format::json) {
        json records = json::array();
        for (Eigen::Index i = 0; i < table.probabilities.rows(); ++i) {
            json rec;
            rec["id"] = table.ids[static_cast<std::size_t>(i)];
            rec["p"] = std::vector<double>(table.probabilities.row(i).begin(), table.probabilities.row(i).end());
            records.push_back(std::move(rec));
        }
        json doc;
        doc["n_z"] = n_z;
        doc["records"] = std::move(records);
        out << doc.dump(1) << '\n';
        return;
    }
    out << "id";
    for (Eigen::Index j = 0; j < n_z; ++j)
        out << ",p_" << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < table.probabilities.rows(); ++i) {
        check_plain_field(table.ids[static_cast<std::size_t>(i)], "id");
        out << table.ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n_z; ++j)
            out << ',' << format_exact(table.probabilities(i, j));
        out << '\n';
    }
}

std::string format_exact(double value) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc())
        throw NumericalError("cannot format value");
    return std::string(buffer, ptr);
}

std::string format_sweep_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return buffer;
}

void SweepResult::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw Error("row has " + std::to_string(row.size()) + " cells for " + std::to_string(columns.size()) +
                    " columns");
    rows.push_back(std::move(row));
}

std::size_t SweepResult::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
        throw Error("no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

void write_sweep(std::ostream& out, const SweepResult& result, Format format) {
    if (format == Format::json) {
        json doc;
        doc["command"] = result.command;
        json meta = json::object();
        for (const auto& [key, value] : result.metadata)
            meta[key] = value;
        doc["metadata"] = std::move(meta);
        doc["columns"] = result.columns;
        json rows = json::array();
        for (const auto& row : result.rows) {
            json r = json::array();
            for (const Cell& cell : row) {
                if (const auto* d = std::get_if<double>(&cell))
                    r.push_back(std::isfinite(*d) ? json(round_sweep(*d)) : json(nullptr));
                else if (const auto* s = std::get_if<std::string>(&cell))
                    r.push_back(*s);
                else if (const auto* b = std::get_if<bool>(&cell))
                    r.push_back(*b);
                else
                    r.push_back(nullptr);
            }
            rows.push_back(std::move(r));
        }
        doc["rows"] = std::move(rows);
        out << doc.dump(1) << '\n';
        return;
    }
    out << "# command: " << result.command << '\n';
    for (const auto& [key, value] : result.metadata)
        out << "# " << key << ": " << value << '\n';
    for (std::size_t c = 0; c < result.columns.size(); ++c)
        out << (c ? "," : "") << result.columns[c];
    out << '\n';
    for (const auto& row : result.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c)
                out << ',';
            const Cell& cell = row[c];
            if (const auto* d = std::get_if<double>(&cell))
                out << format_sweep_number(*d);
            else if (const auto* s = std::get_if<std::string>(&cell))
                out << *s;
            else if (const auto* b = std::get_if<bool>(&cell))
                out << (*b ? "true" : "false");
        }
        out << '\n';
    }
}

} // namespace hetlab
