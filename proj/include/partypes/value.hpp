#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace partypes {

/// Runtime payload value: a 64-bit integer, a double, or a homogeneous array.
class Value {
 public:
  Value() : data_(std::int64_t{0}) {}

  static Value of_int(std::int64_t v) { return Value(v); }
  static Value of_float(double v) { return Value(v); }
  static Value of_array(std::vector<Value> items) { return Value(std::move(items)); }

  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_float() const { return std::holds_alternative<double>(data_); }
  bool is_array() const { return std::holds_alternative<std::vector<Value>>(data_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  const std::vector<Value>& as_array() const { return std::get<std::vector<Value>>(data_); }

  /// Numeric view: as_float for Int or Float operands.
  double numeric() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }

  /// "int(5)", "float(1.5)", "array(len=3)[...]".
  std::string to_string() const;

  /// Bit-exact equality; floats are compared by representation, so NaN == NaN
  /// and 0.0 != -0.0. Used for collective agreement checks.
  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  explicit Value(std::int64_t v) : data_(v) {}
  explicit Value(double v) : data_(v) {}
  explicit Value(std::vector<Value> v) : data_(std::move(v)) {}

  std::variant<std::int64_t, double, std::vector<Value>> data_;
};

/// True when both values have the same kind and, for arrays, the same
/// length with element shapes matching recursively.
bool same_shape(const Value& a, const Value& b);

std::string format_double(double v);

}  // namespace partypes
