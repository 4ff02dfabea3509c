#include "json_writer.hpp"

#include <cmath>
#include <cstdio>

#include "mitk/numeric.hpp"

namespace mitk::cli {

namespace {

void write_string(std::ostream& out, const std::string& s) {
  out << '"';
  for (char c : s) {
    switch (c) {
      case '"': out << "\\\""; break;
      case '\\': out << "\\\\"; break;
      case '\n': out << "\\n"; break;
      case '\t': out << "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out << buf;
        } else {
          out << c;
        }
    }
  }
  out << '"';
}

void indent(std::ostream& out, int depth) {
  for (int i = 0; i < depth; ++i) out << "  ";
}

}  // namespace

void Json::dump(std::ostream& out, int depth) const {
  switch (kind_) {
    case Kind::null: out << "null"; return;
    case Kind::number:
      if (std::isfinite(number_))
        out << format_real(number_);
      else
        out << "null";
      return;
    case Kind::integer: out << integer_; return;
    case Kind::boolean: out << (boolean_ ? "true" : "false"); return;
    case Kind::string: write_string(out, string_); return;
    case Kind::array:
    case Kind::object: {
      const bool obj = kind_ == Kind::object;
      if (items_.empty()) {
        out << (obj ? "{}" : "[]");
        return;
      }
      out << (obj ? "{\n" : "[\n");
      for (std::size_t i = 0; i < items_.size(); ++i) {
        indent(out, depth + 1);
        if (obj) {
          write_string(out, keys_[i]);
          out << ": ";
        }
        items_[i].dump(out, depth + 1);
        out << (i + 1 < items_.size() ? ",\n" : "\n");
      }
      indent(out, depth);
      out << (obj ? '}' : ']');
      return;
    }
  }
}

std::ostream& operator<<(std::ostream& out, const Json& j) {
  j.dump(out);
  return out;
}

}  // namespace mitk::cli
