#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace oracleloom {

using Json = nlohmann::json;

/// Canonical JSON rendering used for every persisted or served document:
/// object keys sorted, no insignificant whitespace, reals as fixed-point with
/// six decimals (negative zero rendered as `0.000000`), integers verbatim.
/// serialize -> parse -> serialize is byte-identical.
std::string canonical_dump(const Json& value);

/// Rounds a real to the precision the canonical form keeps.
double canonical_round(double value);

/// Hex SHA-256 of `data`; `hex_chars` truncates the digest.
std::string sha256_hex(std::string_view data, size_t hex_chars = 64);

}  // namespace oracleloom
