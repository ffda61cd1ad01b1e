#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cexlab {

inline constexpr int kSchemaVersion = 1;

// 17 significant digits: enough for exact double round-trips, and identical
// inputs always serialize to identical bytes.
std::string fmt_double(double v);

// Minimal deterministic JSON emitter. Field order is insertion order and
// floating-point values go through fmt_double, so equal inputs give
// byte-identical documents.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& raw(std::string_view text);  // pre-serialized fragment

  // key/value in one go, for flat report objects
  JsonWriter& field(std::string_view k, double v) { return key(k).value(v); }
  JsonWriter& field(std::string_view k, std::int64_t v) { return key(k).value(v); }
  JsonWriter& field(std::string_view k, int v) { return key(k).value(v); }
  JsonWriter& field(std::string_view k, bool v) { return key(k).value(v); }
  JsonWriter& field(std::string_view k, std::string_view v) { return key(k).value(v); }

  const std::string& str() const { return out_; }

 private:
  void separate();
  std::string out_;
  std::vector<bool> has_item_;  // per open container
  bool after_key_ = false;
};

std::string json_escape(std::string_view s);

// One CSV row; numeric cells formatted with fmt_double.
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace cexlab
