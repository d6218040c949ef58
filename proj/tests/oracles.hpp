#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// the library's engines: paths are listed one by one and probabilities come
// from Pascal's triangle.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

using Path = std::vector<std::int64_t>;

/// All 2^N nearest-neighbour paths from `start`, positions at times 0..N.
inline std::vector<Path> all_paths(std::int64_t N, std::int64_t start) {
  std::vector<Path> paths;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << N); ++m) {
    Path p{start};
    for (std::int64_t k = 0; k < N; ++k) p.push_back(p.back() + (((m >> k) & 1U) ? 1 : -1));
    paths.push_back(p);
  }
  return paths;
}

/// P_S[prod_k w(k, S_k) ; keep(path)] by listing paths.
inline double path_sum(std::int64_t N, std::int64_t start, const std::function<double(std::int64_t, std::int64_t)>& w,
                       const std::function<bool(const Path&)>& keep = {}) {
  double total = 0.0;
  for (const Path& p : all_paths(N, start)) {
    if (keep && !keep(p)) continue;
    double prod = 1.0;
    for (std::int64_t k = 1; k <= N; ++k) prod *= w(k, p[k]);
    total += prod;
  }
  return total / std::pow(2.0, static_cast<double>(N));
}

/// Row N of Pascal's triangle divided by 2^N: entry j is P(S_N = -N + 2j).
inline std::vector<double> pascal_row(std::int64_t N) {
  std::vector<double> row{1.0};
  for (std::int64_t k = 0; k < N; ++k) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += 0.5 * row[j];
      next[j + 1] += 0.5 * row[j];
    }
    row.swap(next);
  }
  return row;
}

/// Simpson's rule on [a, b] with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
