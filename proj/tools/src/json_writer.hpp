#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace rieszdml::cli {

/// Pretty-prints `value` with every floating-point number written as
/// "%.17g", so equal doubles always produce equal bytes. Non-finite numbers
/// become the strings "inf", "-inf" and "nan".
void write_json(std::ostream& out, const nlohmann::ordered_json& value, int indent = 2);

/// Single-line variant used for error reports.
std::string json_line(const nlohmann::ordered_json& value);

/// "%.17g" formatting of one double.
std::string format_double(double v);

}  // namespace rieszdml::cli
