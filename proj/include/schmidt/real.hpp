#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace schmidt {

namespace mp = boost::multiprecision;

// Wide enough for positions ~1e120 resolved to ~1e-120.
using HighPrecision = mp::number<mp::cpp_bin_float<300>, mp::et_off>;
using MediumPrecision = mp::number<mp::cpp_bin_float<60>, mp::et_off>;

template <class Real>
inline double to_double(const Real& x) {
  return static_cast<double>(x);
}

template <class Real>
inline Real ipow(Real base, long e) {
  if (e < 0) return Real(1) / ipow(base, -e);
  Real acc(1);
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

template <class Real>
inline std::string format_real(const Real& x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<Real>::max_digits10);
  os << x;
  return os.str();
}

template <class Real>
inline Real parse_real(const std::string& s) {
  if constexpr (std::is_floating_point_v<Real>) {
    std::istringstream is(s);
    Real v{};
    is >> v;
    return v;
  } else {
    return Real(s);
  }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

// Hash of an integer-valued Real of arbitrary magnitude.
template <class Real>
inline std::uint64_t hash_integer(Real v) {
  std::uint64_t h = 0x51ed27ULL;
  if (v < 0) {
    h = hash_combine(h, 1);
    v = -v;
  }
  const Real chunk(4294967296.0);
  int guard = 0;
  do {
    using std::floor;
    Real q = floor(v / chunk);
    Real r = v - q * chunk;
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<double>(r)));
    v = q;
  } while (v > 0 && ++guard < 64);
  return h;
}

class Rng {
 public:
  using result_type = std::uint64_t;
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  // Portable across standard libraries, unlike std::uniform_*_distribution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::size_t>(m >> 64);
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Point of R^n/Z^n with coordinates num[i]/den, reduced into [0, 1).
struct RationalPoint {
  std::vector<std::int64_t> num;
  std::int64_t den = 1;

  int dim() const { return static_cast<int>(num.size()); }

  static RationalPoint from_double(const std::vector<double>& x, std::int64_t den = (1LL << 30)) {
    RationalPoint p;
    p.den = den;
    for (double v : x) {
      double f = v - std::floor(v);
      auto k = static_cast<std::int64_t>(std::llround(f * static_cast<double>(den)));
      p.num.push_back(((k % den) + den) % den);
    }
    return p;
  }

  template <class Real>
  std::vector<Real> to_real() const {
    std::vector<Real> out;
    for (auto k : num) out.push_back(Real(k) / Real(den));
    return out;
  }

  bool operator==(const RationalPoint&) const = default;
};

// Image under the integer matrix (row-major, n x n), exact mod den.
inline RationalPoint apply_matrix(const std::vector<std::int64_t>& m, const RationalPoint& p) {
  const int n = p.dim();
  RationalPoint q;
  q.den = p.den;
  q.num.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    __int128 acc = 0;
    for (int j = 0; j < n; ++j) acc += static_cast<__int128>(m[i * n + j]) * p.num[j];
    acc %= p.den;
    if (acc < 0) acc += p.den;
    q.num[i] = static_cast<std::int64_t>(acc);
  }
  return q;
}

inline std::string to_string(const RationalPoint& p) {
  std::string s = "(";
  for (int i = 0; i < p.dim(); ++i) {
    if (i) s += ",";
    s += std::to_string(p.num[i]) + "/" + std::to_string(p.den);
  }
  return s + ")";
}

}  // namespace schmidt
