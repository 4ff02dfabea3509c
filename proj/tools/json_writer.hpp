#pragma once

// Minimal ordered JSON tree. Numbers are written with 17 significant digits
// (non-finite values become null), which general-purpose JSON libraries do
// not offer.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace mitk::cli {

class Json {
 public:
  Json() = default;
  Json(double x) : kind_(Kind::number), number_(x) {}
  Json(int x) : kind_(Kind::integer), integer_(x) {}
  Json(std::int64_t x) : kind_(Kind::integer), integer_(x) {}
  Json(std::size_t x) : kind_(Kind::integer), integer_(static_cast<std::int64_t>(x)) {}
  Json(bool x) : kind_(Kind::boolean), boolean_(x) {}
  Json(std::string s) : kind_(Kind::string), string_(std::move(s)) {}
  Json(const char* s) : kind_(Kind::string), string_(s) {}

  static Json array() {
    Json j;
    j.kind_ = Kind::array;
    return j;
  }
  static Json object() {
    Json j;
    j.kind_ = Kind::object;
    return j;
  }

  Json& push(Json value) {
    items_.push_back(std::move(value));
    return *this;
  }
  Json& set(std::string key, Json value) {
    keys_.push_back(std::move(key));
    items_.push_back(std::move(value));
    return *this;
  }

  void dump(std::ostream& out, int depth = 0) const;

 private:
  enum class Kind { null, number, integer, boolean, string, array, object };

  Kind kind_ = Kind::null;
  double number_ = 0.0;
  std::int64_t integer_ = 0;
  bool boolean_ = false;
  std::string string_;
  std::vector<std::string> keys_;
  std::vector<Json> items_;
};

std::ostream& operator<<(std::ostream& out, const Json& j);

}  // namespace mitk::cli
