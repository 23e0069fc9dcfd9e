#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regweights/table.hpp"

namespace regweights {

// Fixed-format numeric rendering used for every emitted value: 12 significant
// digits, negative zero normalized, so identical inputs yield identical bytes.
std::string format_number(double value);

// Minimal insertion-ordered JSON document: field order and number formatting
// are deterministic, which a general-purpose serializer does not pin down.
class JsonValue {
 public:
  static JsonValue null();
  static JsonValue boolean(bool v);
  static JsonValue integer(std::int64_t v);
  static JsonValue number(double v);
  static JsonValue string(std::string v);
  static JsonValue array();
  static JsonValue object();

  JsonValue& push_back(JsonValue v);              // arrays
  JsonValue& set(const std::string& key, JsonValue v);  // objects

  std::string dump(int indent = 2) const;

 private:
  enum class Kind { Null, Bool, Int, Number, String, Array, Object };
  Kind kind_ = Kind::Null;
  bool bool_ = false;
  std::int64_t int_ = 0;
  double number_ = 0.0;
  std::string string_;
  std::vector<JsonValue> array_;
  std::vector<std::pair<std::string, JsonValue>> object_;

  void dump_to(std::string& out, int indent, int depth) const;
};

JsonValue table_json(const Table& table);
std::string render_table(const Table& table, char delimiter);

void write_text_file(const std::string& path, const std::string& content);

inline constexpr const char* kToolName = "regweights";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace regweights
