#pragma once

#include <string>
#include <string_view>

namespace ledgerlens {

// "http://host:port/path" split into the origin httplib wants and the path.
struct HttpUrl {
  std::string origin;
  std::string path;
};

HttpUrl parse_http_url(std::string_view url);

}  // namespace ledgerlens
