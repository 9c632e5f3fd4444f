#include "xps/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <string>

#include "xps/errors.hpp"

namespace xps::units {

namespace {

struct UnitEntry {
  std::string_view name;
  Dimension dim;
  double scale;
};

constexpr std::array<UnitEntry, 17> kUnits{{
    {"s", Dimension::time, 1.0},
    {"ms", Dimension::time, 1e-3},
    {"us", Dimension::time, 1e-6},
    {"\xc2\xb5s", Dimension::time, 1e-6},
    {"ns", Dimension::time, 1e-9},
    {"ps", Dimension::time, 1e-12},
    {"Hz", Dimension::frequency, 1.0},
    {"kHz", Dimension::frequency, 1e3},
    {"MHz", Dimension::frequency, 1e6},
    {"GHz", Dimension::frequency, 1e9},
    {"rad", Dimension::phase, 1.0},
    {"mrad", Dimension::phase, 1e-3},
    {"urad", Dimension::phase, 1e-6},
    {"\xc2\xb5rad", Dimension::phase, 1e-6},
    {"nrad", Dimension::phase, 1e-9},
    {"", Dimension::dimensionless, 1.0},
    {"1", Dimension::dimensionless, 1.0},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::time: return "time";
    case Dimension::frequency: return "frequency";
    case Dimension::phase: return "phase";
    case Dimension::dimensionless: return "dimensionless";
  }
  return "?";
}

double unit_scale(std::string_view unit, Dimension dim) {
  for (const auto& u : kUnits) {
    if (u.name == unit) {
      if (u.dim != dim) {
        throw DomainError("unit '" + std::string(unit) + "' is not a " +
                          std::string(dimension_name(dim)) + " unit");
      }
      return u.scale;
    }
  }
  throw DomainError("unknown unit '" + std::string(unit) + "'");
}

double parse_quantity(std::string_view text, Dimension dim, std::string_view default_unit) {
  auto s = trim(text);
  if (s.empty()) throw DomainError("empty quantity");
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) {
    throw DomainError("not a number: '" + std::string(s) + "'");
  }
  const auto suffix = trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr)));
  const auto unit = suffix.empty() ? default_unit : suffix;
  return value * unit_scale(unit, dim);
}

}  // namespace xps::units
