#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "dynmln/types.hpp"

namespace dynmln {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

// Shortest round-trippable decimal representation; used for all numeric
// output so artifacts are byte-stable across runs.
inline std::string fmt_double(double x) {
  char best[40];
  std::snprintf(best, sizeof(best), "%.17g", x);
  // shortest string (not just lowest precision) that still round-trips, so
  // 10 prints as "10" rather than "1e+01"
  for (int prec = 1; prec < 17; ++prec) {
    char cand[40];
    std::snprintf(cand, sizeof(cand), "%.*g", prec, x);
    if (std::strtod(cand, nullptr) == x && std::strlen(cand) < std::strlen(best))
      std::snprintf(best, sizeof(best), "%s", cand);
  }
  return best;
}

inline double parse_double(const std::string& tok, const std::string& what) {
  const std::string t = trim(tok);
  if (t.empty()) throw data_error("empty " + what);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw data_error("cannot parse " + what + ": '" + tok + "'");
  return v;
}

inline long parse_int(const std::string& tok, const std::string& what) {
  const std::string t = trim(tok);
  if (t.empty()) throw data_error("empty " + what);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw data_error("cannot parse " + what + ": '" + tok + "'");
  return v;
}

}  // namespace dynmln
