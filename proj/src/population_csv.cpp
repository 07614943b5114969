#include "fairsel/population_csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view field, std::size_t line, std::size_t column) {
    field = trim(field);
    if (field.empty()) throw ParseError(line, column, "missing field");
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(line, column, "not a decimal number: '" + std::string(field) + "'");
    }
    if (!std::isfinite(value)) throw ParseError(line, column, "value is not finite");
    return value;
}

}  // namespace

PopulationTable read_population_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, 0, "empty file, expected header");
    const auto header = split_fields(trim(line));
    const std::size_t columns = header.size();
    if (columns < 3) throw ParseError(1, 0, "header needs at least x1,z,y");
    for (std::size_t c = 0; c + 2 < columns; ++c) {
        const std::string expected = "x" + std::to_string(c + 1);
        if (trim(header[c]) != expected) {
            throw ParseError(1, c + 1, "expected header field '" + expected + "'");
        }
    }
    if (trim(header[columns - 2]) != "z") throw ParseError(1, columns - 1, "expected 'z'");
    if (trim(header[columns - 1]) != "y") throw ParseError(1, columns, "expected 'y'");

    const std::size_t p = columns - 2;
    std::vector<double> xs;
    GroupLabels z;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != columns) {
            throw ParseError(line_no, 0,
                             "expected " + std::to_string(columns) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < p; ++c) xs.push_back(parse_number(fields[c], line_no, c + 1));
        const double group = parse_number(fields[p], line_no, p + 1);
        if (group != 0.0 && group != 1.0) throw ParseError(line_no, p + 1, "z must be 0 or 1");
        z.push_back(static_cast<int>(group));
        ys.push_back(parse_number(fields[p + 1], line_no, p + 2));
    }

    const auto n = static_cast<Eigen::Index>(z.size());
    PopulationTable table;
    table.features =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            xs.data(), n, static_cast<Eigen::Index>(p));
    table.z = std::move(z);
    table.y = Eigen::Map<const Vector>(ys.data(), n);
    table.validate();
    return table;
}

PopulationTable read_population_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open population file '" + path + "'");
    return read_population_csv(in);
}

void write_population_csv(std::ostream& out, const PopulationTable& table) {
    const auto p = table.features.cols();
    for (Eigen::Index c = 0; c < p; ++c) out << 'x' << (c + 1) << ',';
    out << "z,y\n";
    char buf[32];
    for (Eigen::Index r = 0; r < table.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < p; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", table.features(r, c));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", table.y[r]);
        out << table.z[static_cast<std::size_t>(r)] << ',' << buf << '\n';
    }
}

PopulationSummary summarize(const PopulationTable& table) {
    table.validate();
    PopulationSummary s;
    s.size = table.size();
    s.dimension = table.dimension();
    double sum0 = 0.0;
    double sum1 = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double y = table.y[static_cast<Eigen::Index>(i)];
        if (table.z[i] == 1) {
            ++s.n1;
            sum1 += y;
        } else {
            ++s.n0;
            sum0 += y;
        }
    }
    s.mean_y0 = sum0 / static_cast<double>(s.n0);
    s.mean_y1 = sum1 / static_cast<double>(s.n1);
    return s;
}

PopulationTable simulate_population(const DataGeneratingProcess& dgp, std::size_t size,
                                    RngStream& rng) {
    HistoryDataset h = sample_history(dgp, size, rng);
    return PopulationTable{h.features(), h.z(), h.y()};
}

}  // namespace fairsel
