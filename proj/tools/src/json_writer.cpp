#include "json_writer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rieszdml::cli {
namespace {

void write_value(std::ostream& out, const nlohmann::ordered_json& v, int indent, int depth) {
  const bool pretty = indent >= 0;
  const auto newline = [&](int d) {
    if (pretty) out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        out << nlohmann::json(key).dump() << (pretty ? ": " : ":");
        write_value(out, item, indent, depth + 1);
      }
      newline(depth);
      out << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(v.begin(), v.end(), [](const auto& e) { return e.is_structured(); });
      out << '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out << (flat && pretty ? ", " : ",");
        first = false;
        if (!flat) newline(depth + 1);
        write_value(out, item, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      if (std::isfinite(d)) {
        out << format_double(d);
      } else {
        out << '"' << (std::isnan(d) ? "nan" : d > 0 ? "inf" : "-inf") << '"';
      }
      return;
    }
    default:
      out << v.dump();
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(std::ostream& out, const nlohmann::ordered_json& value, int indent) {
  write_value(out, value, indent, 0);
  out << '\n';
}

std::string json_line(const nlohmann::ordered_json& value) {
  std::ostringstream out;
  write_value(out, value, -1, 0);
  return out.str();
}

}  // namespace rieszdml::cli
