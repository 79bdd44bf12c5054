#include "oracleloom/canonical_json.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace oracleloom {

namespace {

void append_real(std::string& out, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("canonical JSON cannot encode non-finite real");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string_view s{buf};
  if (s == "-0.000000") s = "0.000000";
  out.append(s);
}

void dump_into(std::string& out, const Json& v) {
  switch (v.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      // nlohmann's default object_t is a std::map, so iteration is key-sorted.
      for (const auto& [key, item] : v.items()) {
        if (!first) out.push_back(',');
        first = false;
        out.append(Json(key).dump());
        out.push_back(':');
        dump_into(out, item);
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& item : v) {
        if (!first) out.push_back(',');
        first = false;
        dump_into(out, item);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::number_float:
      append_real(out, v.get<double>());
      break;
    default:
      out.append(v.dump(-1, ' ', false, Json::error_handler_t::strict));
      break;
  }
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dump_into(out, value);
  return out;
}

double canonical_round(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return std::strtod(buf, nullptr);
}

std::string sha256_hex(std::string_view data, size_t hex_chars) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  if (hex_chars < out.size()) out.resize(hex_chars);
  return out;
}

}  // namespace oracleloom
