#include "partypes/value.hpp"

#include <charconv>
#include <cstring>
#include <sstream>

namespace partypes {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  std::string s(buf, ptr);
  // Keep a decimal marker so floats stay visually distinct from ints.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string Value::to_string() const {
  if (is_int()) return "int(" + std::to_string(as_int()) + ")";
  if (is_float()) return "float(" + format_double(as_float()) + ")";
  const auto& items = as_array();
  std::ostringstream os;
  os << "array(len=" << items.size() << ")";
  if (items.size() <= 8) {
    os << "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) os << ", ";
      os << items[i].to_string();
    }
    os << "]";
  }
  return os.str();
}

static bool bits_equal(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, sizeof(double));
  std::memcpy(&ub, &b, sizeof(double));
  return ua == ub;
}

bool operator==(const Value& a, const Value& b) {
  if (a.data_.index() != b.data_.index()) return false;
  if (a.is_int()) return a.as_int() == b.as_int();
  if (a.is_float()) return bits_equal(a.as_float(), b.as_float());
  const auto& xs = a.as_array();
  const auto& ys = b.as_array();
  if (xs.size() != ys.size()) return false;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!(xs[i] == ys[i])) return false;
  return true;
}

bool same_shape(const Value& a, const Value& b) {
  if (a.is_int()) return b.is_int();
  if (a.is_float()) return b.is_float();
  if (!b.is_array()) return false;
  const auto& xs = a.as_array();
  const auto& ys = b.as_array();
  if (xs.size() != ys.size()) return false;
  return xs.empty() || same_shape(xs[0], ys[0]);
}

}  // namespace partypes
