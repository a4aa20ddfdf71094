#include "elfql/cli/format.hpp"

#include <json.hpp>

#include <algorithm>

namespace elfql::cli {

using engine::QueryResult;
using engine::Value;

std::optional<OutputFormat> parse_format(std::string_view name) {
    if (name == "table") return OutputFormat::Table;
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    return std::nullopt;
}

std::string format_table(const QueryResult &result) {
    const std::size_t ncols = result.columns.size();
    std::vector<std::vector<std::string>> cells;
    cells.reserve(result.rows.size());
    std::vector<std::size_t> width(ncols, 0);
    for (std::size_t c = 0; c < ncols; ++c) width[c] = result.columns[c].size();
    for (const auto &row : result.rows) {
        auto &line = cells.emplace_back();
        for (std::size_t c = 0; c < ncols; ++c) {
            line.push_back(engine::value_to_string(row.at(c)));
            width[c] = std::max(width[c], line.back().size());
        }
    }

    std::string out;
    auto emit = [&](const std::vector<std::string> &fields) {
        std::string line;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (c > 0) line += "  ";
            line += fields[c];
            if (c + 1 < ncols) line.append(width[c] - fields[c].size(), ' ');
        }
        out += line;
        out += '\n';
    };
    emit(result.columns);
    std::vector<std::string> rule;
    for (std::size_t c = 0; c < ncols; ++c) rule.emplace_back(width[c], '-');
    emit(rule);
    for (const auto &line : cells) emit(line);
    return out;
}

namespace {

std::string csv_field(const Value &v) {
    if (std::holds_alternative<std::monostate>(v)) return {};
    const std::string text = engine::value_to_string(v);
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char ch : text) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + "\"";
}

} // namespace

std::string format_csv(const QueryResult &result) {
    std::string out;
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
        if (c > 0) out += ',';
        out += csv_field(result.columns[c]);
    }
    out += '\n';
    for (const auto &row : result.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ',';
            out += csv_field(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string format_json(const QueryResult &result) {
    auto array = nlohmann::ordered_json::array();
    for (const auto &row : result.rows) {
        nlohmann::ordered_json object = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < result.columns.size(); ++c) {
            auto &slot = object[result.columns[c]];
            std::visit(
                [&](const auto &x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, std::monostate>) slot = nullptr;
                    else if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>) slot = engine::value_to_string(x);
                    else slot = x;
                },
                row.at(c));
        }
        array.push_back(std::move(object));
    }
    return array.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

std::string format_result(const QueryResult &result, OutputFormat format) {
    switch (format) {
    case OutputFormat::Table: return format_table(result);
    case OutputFormat::Csv: return format_csv(result);
    case OutputFormat::Json: return format_json(result);
    }
    return {};
}

} // namespace elfql::cli
