#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace evalsys {

/// An IPv4 or IPv6 address in canonical text form. IPv4-mapped IPv6
/// addresses collapse to their IPv4 form so allowlist matching is exact.
class IpAddress {
 public:
  static std::optional<IpAddress> parse(std::string_view text);

  const std::string& str() const { return text_; }
  bool is_v6() const { return v6_; }

  auto operator<=>(const IpAddress&) const = default;

 private:
  IpAddress(std::string text, bool v6) : text_(std::move(text)), v6_(v6) {}

  std::string text_;
  bool v6_ = false;
};

using Timestamp = std::chrono::sys_seconds;

Timestamp now_utc();
std::string format_utc(Timestamp t);  // 2026-06-26T22:34:00Z
std::optional<Timestamp> parse_utc(std::string_view text);

}  // namespace evalsys
