#include "regweights/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "regweights/errors.hpp"

namespace regweights {

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // normalize -0
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

JsonValue JsonValue::null() { return JsonValue(); }

JsonValue JsonValue::boolean(bool v) {
  JsonValue j;
  j.kind_ = Kind::Bool;
  j.bool_ = v;
  return j;
}

JsonValue JsonValue::integer(std::int64_t v) {
  JsonValue j;
  j.kind_ = Kind::Int;
  j.int_ = v;
  return j;
}

JsonValue JsonValue::number(double v) {
  JsonValue j;
  j.kind_ = Kind::Number;
  j.number_ = v;
  return j;
}

JsonValue JsonValue::string(std::string v) {
  JsonValue j;
  j.kind_ = Kind::String;
  j.string_ = std::move(v);
  return j;
}

JsonValue JsonValue::array() {
  JsonValue j;
  j.kind_ = Kind::Array;
  return j;
}

JsonValue JsonValue::object() {
  JsonValue j;
  j.kind_ = Kind::Object;
  return j;
}

JsonValue& JsonValue::push_back(JsonValue v) {
  if (kind_ != Kind::Array)
    throw ConfigError("push_back on a non-array JSON value");
  array_.push_back(std::move(v));
  return *this;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue v) {
  if (kind_ != Kind::Object)
    throw ConfigError("set on a non-object JSON value");
  for (auto& entry : object_) {
    if (entry.first == key) {
      entry.second = std::move(v);
      return *this;
    }
  }
  object_.emplace_back(key, std::move(v));
  return *this;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buffer[8];
          std::snprintf(buffer, sizeof(buffer), "\\u%04x",
                        static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buffer;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void append_indent(std::string& out, int indent, int depth) {
  if (indent > 0) {
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent) * depth, ' ');
  }
}

}  // namespace

void JsonValue::dump_to(std::string& out, int indent, int depth) const {
  switch (kind_) {
    case Kind::Null:
      out += "null";
      break;
    case Kind::Bool:
      out += bool_ ? "true" : "false";
      break;
    case Kind::Int:
      out += std::to_string(int_);
      break;
    case Kind::Number:
      if (std::isfinite(number_)) {
        out += format_number(number_);
      } else {
        out += "null";  // JSON has no representation for non-finite numbers
      }
      break;
    case Kind::String:
      append_escaped(out, string_);
      break;
    case Kind::Array: {
      if (array_.empty()) {
        out += "[]";
        break;
      }
      out.push_back('[');
      for (std::size_t i = 0; i < array_.size(); ++i) {
        if (i > 0) out.push_back(',');
        append_indent(out, indent, depth + 1);
        array_[i].dump_to(out, indent, depth + 1);
      }
      append_indent(out, indent, depth);
      out.push_back(']');
      break;
    }
    case Kind::Object: {
      if (object_.empty()) {
        out += "{}";
        break;
      }
      out.push_back('{');
      for (std::size_t i = 0; i < object_.size(); ++i) {
        if (i > 0) out.push_back(',');
        append_indent(out, indent, depth + 1);
        append_escaped(out, object_[i].first);
        out += indent > 0 ? ": " : ":";
        object_[i].second.dump_to(out, indent, depth + 1);
      }
      append_indent(out, indent, depth);
      out.push_back('}');
      break;
    }
  }
}

std::string JsonValue::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  return out;
}

namespace {

JsonValue cell_json(const TableCell& cell) {
  if (std::holds_alternative<std::int64_t>(cell))
    return JsonValue::integer(std::get<std::int64_t>(cell));
  if (std::holds_alternative<double>(cell))
    return JsonValue::number(std::get<double>(cell));
  return JsonValue::string(std::get<std::string>(cell));
}

std::string cell_text(const TableCell& cell) {
  if (std::holds_alternative<std::int64_t>(cell))
    return std::to_string(std::get<std::int64_t>(cell));
  if (std::holds_alternative<double>(cell))
    return format_number(std::get<double>(cell));
  return std::get<std::string>(cell);
}

}  // namespace

JsonValue table_json(const Table& table) {
  JsonValue columns = JsonValue::array();
  for (const std::string& name : table.columns)
    columns.push_back(JsonValue::string(name));
  JsonValue rows = JsonValue::array();
  for (const std::vector<TableCell>& row : table.rows) {
    JsonValue row_json = JsonValue::array();
    for (const TableCell& cell : row) row_json.push_back(cell_json(cell));
    rows.push_back(std::move(row_json));
  }
  JsonValue out = JsonValue::object();
  out.set("name", JsonValue::string(table.name));
  out.set("columns", std::move(columns));
  out.set("rows", std::move(rows));
  return out;
}

std::string render_table(const Table& table, char delimiter) {
  std::string out;
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j > 0) out.push_back(delimiter);
    out += table.columns[j];
  }
  out.push_back('\n');
  for (const std::vector<TableCell>& row : table.rows) {
    if (row.size() != table.columns.size())
      throw ConfigError("table row width does not match the header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out.push_back(delimiter);
      out += cell_text(row[j]);
    }
    out.push_back('\n');
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace regweights
