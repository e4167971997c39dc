#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

namespace platoon {

/// 1-based line on which the value addressed by `pointer` starts in `text`.
/// Returns 0 when the pointer cannot be resolved (the text is assumed to be
/// valid JSON; it has already been parsed once).
std::size_t json_line_of(std::string_view text, const nlohmann::json::json_pointer& pointer);

/// 1-based line containing byte offset `byte` (as reported by parse errors).
std::size_t line_of_byte(std::string_view text, std::size_t byte);

/// Parses `text`, rethrowing syntax errors as InputError "<source>:<line>: ...".
nlohmann::json parse_json_document(std::string_view text, std::string_view source);

/// Reads a whole file; InputError if it cannot be opened.
std::string read_text_file(const std::string& path);

/// Builds the "<source>:<line>: <message>" diagnostic used by all loaders.
std::string located_message(std::string_view source, std::string_view text,
                            const nlohmann::json::json_pointer& pointer, std::string_view message);

}  // namespace platoon
