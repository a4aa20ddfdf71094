#pragma once

#include "elfql/engine/session.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace elfql::cli {

enum class OutputFormat { Table, Csv, Json };

std::optional<OutputFormat> parse_format(std::string_view name);

/// Aligned columns with a dashed rule under the header.
std::string format_table(const engine::QueryResult &result);
/// RFC 4180 quoting; NULL is an empty field, blobs are lowercase hex.
std::string format_csv(const engine::QueryResult &result);
/// Array of objects keyed by column name, in column order. Invalid UTF-8 in
/// text values is replaced with U+FFFD.
std::string format_json(const engine::QueryResult &result);

std::string format_result(const engine::QueryResult &result, OutputFormat format);

} // namespace elfql::cli
