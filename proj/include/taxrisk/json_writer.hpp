#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <type_traits>
#include <vector>

#include "taxrisk/format.hpp"

namespace taxrisk {

// Streaming JSON writer with a fixed, caller-controlled key order and g17
// number formatting. Artifacts that must re-save byte-identically go
// through this writer instead of a DOM library, whose number formatting is
// not under our control.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return token("{", true); }
  JsonWriter& end_object() { return close("}"); }
  JsonWriter& begin_array() { return token("[", true); }
  JsonWriter& end_array() { return close("]"); }

  JsonWriter& key(const std::string& k) {
    comma();
    append_string(k);
    out_ += ':';
    pending_value_ = true;
    return *this;
  }

  JsonWriter& value(const std::string& v) { return scalar([&] { append_string(v); }); }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& value(double v) { return scalar([&] { out_ += g17(v); }); }
  template <typename T,
            std::enable_if_t<std::is_integral_v<T> && !std::is_same_v<T, bool>, int> = 0>
  JsonWriter& value(T v) { return scalar([&] { out_ += std::to_string(v); }); }
  JsonWriter& value(bool v) { return scalar([&] { out_ += v ? "true" : "false"; }); }
  JsonWriter& null() { return scalar([&] { out_ += "null"; }); }

  const std::string& str() const { return out_; }

 private:
  template <typename F>
  JsonWriter& scalar(F&& emit) {
    comma();
    emit();
    pending_value_ = false;
    need_comma_ = true;
    return *this;
  }

  JsonWriter& token(const char* t, bool opens) {
    comma();
    out_ += t;
    if (opens) {
      need_comma_ = false;
      pending_value_ = false;
    }
    return *this;
  }

  JsonWriter& close(const char* t) {
    out_ += t;
    need_comma_ = true;
    pending_value_ = false;
    return *this;
  }

  void comma() {
    if (pending_value_) {
      pending_value_ = false;
      return;  // value directly follows its key
    }
    if (need_comma_) out_ += ',';
    need_comma_ = false;
  }

  void append_string(const std::string& s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\r': out_ += "\\r"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }

  std::string out_;
  bool need_comma_ = false;
  bool pending_value_ = false;
};

// FNV-1a 64-bit, used to fingerprint resolved configs in manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace taxrisk
