#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vau::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Parses a JSON document, converting parse errors to ValidationError that
/// names the source and the 0-based byte offset.
Json parse_json(std::string_view text, const std::string& source);

/// Splits JSONL text into parsed documents; blank lines are skipped. Byte
/// offsets in errors are relative to the whole text.
std::vector<Json> parse_jsonl(std::string_view text, const std::string& source);

}  // namespace vau::detail
