#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rulepress {

/// Library-wide error type. Every precondition violation, parse failure or
/// numerical breakdown surfaces as one of these with an actionable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Family { Gaussian, Binomial, Poisson };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Binomial: return "binomial";
    case Family::Poisson: return "poisson";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "binomial") return Family::Binomial;
  if (s == "poisson") return Family::Poisson;
  throw Error("unknown family '" + s + "' (gaussian, binomial, poisson)");
}

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Strict full-string parse of a finite decimal number. Returns false for
// trailing garbage, "inf", "nan" and empty input.
inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  double v = 0.0;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) return false;
  if (!std::isfinite(v)) return false;
  out = v;
  return true;
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Weighted mean; denominator must be positive.
inline double weighted_mean(const std::vector<double>& y,
                            const std::vector<double>& w) {
  double sy = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sy += w[i] * y[i];
    sw += w[i];
  }
  if (sw <= 0.0) throw Error("weighted mean undefined: total weight is zero");
  return sy / sw;
}

// Two-pass sample standard deviation (1/(N-1) denominator).
inline double sample_sd(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace rulepress
