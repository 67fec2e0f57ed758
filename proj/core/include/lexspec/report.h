#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace lexspec {

// Deterministic JSON text: object keys sorted, floating-point numbers printed
// with 17 significant digits, non-finite numbers as null. indent < 0 yields a
// single line.
std::string format_json(const nlohmann::json& value, int indent = 2);

// format_json(value, 2) plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

// "%.17g" with a guaranteed decimal point or exponent.
std::string format_double(double v);

}  // namespace lexspec
