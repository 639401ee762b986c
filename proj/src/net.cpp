#include "evalsys/net.hpp"

#include <arpa/inet.h>

#include <cstring>
#include <ctime>

namespace evalsys {

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  std::string s(text);
  char buf[INET6_ADDRSTRLEN] = {};

  in_addr v4{};
  if (inet_pton(AF_INET, s.c_str(), &v4) == 1) {
    inet_ntop(AF_INET, &v4, buf, sizeof buf);
    return IpAddress(buf, false);
  }
  in6_addr v6{};
  if (inet_pton(AF_INET6, s.c_str(), &v6) == 1) {
    if (IN6_IS_ADDR_V4MAPPED(&v6)) {
      std::memcpy(&v4, &v6.s6_addr[12], 4);
      inet_ntop(AF_INET, &v4, buf, sizeof buf);
      return IpAddress(buf, false);
    }
    inet_ntop(AF_INET6, &v6, buf, sizeof buf);
    return IpAddress(buf, true);
  }
  return std::nullopt;
}

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::seconds>(
      std::chrono::system_clock::now());
}

std::string format_utc(Timestamp t) {
  std::time_t raw = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&raw, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<Timestamp> parse_utc(std::string_view text) {
  std::tm tm{};
  std::string s(text);
  const char* end = strptime(s.c_str(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  if (end == nullptr || *end != '\0') return std::nullopt;
  return Timestamp(std::chrono::seconds(timegm(&tm)));
}

}  // namespace evalsys
