#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lasco {

class Value;

/// Finite set of values. Members are kept sorted by `compare` and unique.
struct ValueSet {
  std::vector<Value> items;
};

/// Atomic datum carried by attributes, parameters and variable bindings.
class Value {
 public:
  enum class Kind { Text = 0, Num = 1, Flag = 2, Set = 3 };

  Value() : data_(false) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(double n) : data_(n) {}
  Value(int n) : data_(static_cast<double>(n)) {}
  Value(long n) : data_(static_cast<double>(n)) {}
  Value(long long n) : data_(static_cast<double>(n)) {}
  Value(bool b) : data_(b) {}

  static Value set(std::vector<Value> members);

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  bool is_text() const { return kind() == Kind::Text; }
  bool is_num() const { return kind() == Kind::Num; }
  bool is_flag() const { return kind() == Kind::Flag; }
  bool is_set() const { return kind() == Kind::Set; }

  const std::string& text() const { return std::get<std::string>(data_); }
  double num() const { return std::get<double>(data_); }
  bool flag() const { return std::get<bool>(data_); }
  const std::vector<Value>& members() const { return std::get<ValueSet>(data_).items; }

  bool contains(const Value& v) const;

  std::string to_string() const;

  friend int compare(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Value& a, const Value& b) { return compare(a, b) != 0; }
  friend bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

 private:
  std::variant<std::string, double, bool, ValueSet> data_;
};

/// Total structural order used for canonical set storage and map keys.
/// It is NOT the `<` of the predicate language, which is numeric only.
inline int compare(const Value& a, const Value& b) {
  if (a.data_.index() != b.data_.index()) {
    return a.data_.index() < b.data_.index() ? -1 : 1;
  }
  switch (a.kind()) {
    case Value::Kind::Text:
      return a.text().compare(b.text()) < 0 ? -1 : (a.text() == b.text() ? 0 : 1);
    case Value::Kind::Num:
      return a.num() < b.num() ? -1 : (a.num() > b.num() ? 1 : 0);
    case Value::Kind::Flag:
      return a.flag() == b.flag() ? 0 : (a.flag() ? 1 : -1);
    case Value::Kind::Set: {
      const auto& x = a.members();
      const auto& y = b.members();
      for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (int c = compare(x[i], y[i]); c != 0) return c;
      }
      return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
    }
  }
  return 0;
}

inline Value Value::set(std::vector<Value> members) {
  std::sort(members.begin(), members.end(),
            [](const Value& l, const Value& r) { return compare(l, r) < 0; });
  members.erase(std::unique(members.begin(), members.end()), members.end());
  Value v;
  v.data_ = ValueSet{std::move(members)};
  return v;
}

inline bool Value::contains(const Value& v) const {
  const auto& m = members();
  return std::binary_search(m.begin(), m.end(), v,
                            [](const Value& l, const Value& r) { return compare(l, r) < 0; });
}

/// Numbers that are integral print without a fraction; others use the
/// shortest representation that round-trips.
inline std::string format_number(double n) {
  if (std::isfinite(n) && n == std::floor(n) && std::fabs(n) < 1e15) {
    return std::to_string(static_cast<long long>(n));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, n);
  return std::string(buf, res.ptr);
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string Value::to_string() const {
  switch (kind()) {
    case Kind::Text: return quote(text());
    case Kind::Num: return format_number(num());
    case Kind::Flag: return flag() ? "true" : "false";
    case Kind::Set: {
      std::string out = "{";
      bool first = true;
      for (const auto& m : members()) {
        if (!first) out += ",";
        first = false;
        out += m.to_string();
      }
      return out + "}";
    }
  }
  return {};
}

/// Name-to-value map: an object's attribute set or an event's parameter set.
using EvalContext = std::map<std::string, Value>;

/// Variable name (without the `$` sigil) to bound value.
using Bindings = std::map<std::string, Value>;

}  // namespace lasco
