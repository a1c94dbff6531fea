// Reference implementations used only by the tests. Each is written directly
// from the definition, in long double or exact integer arithmetic, and shares
// no code with the library.
#ifndef ECM_TESTS_ORACLES_H_
#define ECM_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

using i128 = __int128;

// Largest remainder on rational weights num/den, exact. Ties in the remainder
// go to the lower index.
inline std::vector<int64_t> LargestRemainder(
    const std::vector<std::pair<int64_t, int64_t>>& weights, int64_t total) {
  int64_t lcm = 1;
  for (const auto& [num, den] : weights) lcm = std::lcm(lcm, den);
  std::vector<i128> w;
  i128 sum = 0;
  for (const auto& [num, den] : weights) {
    w.push_back(static_cast<i128>(num) * (lcm / den));
    sum += w.back();
  }
  std::vector<int64_t> counts(w.size());
  std::vector<i128> rem(w.size());
  int64_t assigned = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    counts[i] = static_cast<int64_t>(total * w[i] / sum);
    rem[i] = total * w[i] % sum;
    assigned += counts[i];
  }
  std::vector<size_t> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rem[a] > rem[b]; });
  for (size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i]];
  return counts;
}

// round(sum · p/q), half away from zero, for nonnegative inputs.
inline int64_t RoundHalfAway(int64_t sum, int64_t p, int64_t q) {
  const i128 twice = 2 * static_cast<i128>(sum) * p;
  return static_cast<int64_t>((twice + q) / (2 * static_cast<i128>(q)));
}

inline long double AveragePrecision(const std::vector<double>& pos,
                                    const std::vector<double>& neg, long double alpha) {
  long double total = 0.0L;
  for (double s : pos) {
    long double tp = 0;
    long double fp = 0;
    for (double p : pos) tp += p >= s;
    for (double n : neg) fp += n >= s;
    const long double r = tp / pos.size();
    const long double f = fp / neg.size();
    total += r / (r + alpha * f);
  }
  return total / pos.size();
}

// Half-credit (or strict) pairwise ranking error by enumeration.
inline long double RankingError(const std::vector<double>& pos,
                                const std::vector<double>& neg, bool strict = false) {
  long double wrong = 0;
  for (double p : pos) {
    for (double n : neg) {
      if (p < n) {
        wrong += 1;
      } else if (p == n) {
        wrong += strict ? 0.0L : 0.5L;
      }
    }
  }
  return wrong / (static_cast<long double>(pos.size()) * neg.size());
}

inline long double ApUpper(long double alpha, long double r) {
  return 1.0L + alpha * std::log(1.0L - r / (1.0L + alpha));
}

inline long double ApLower(long double alpha, long double r) {
  return std::max(1.0L - std::sqrt(2.0L * alpha * r / 3.0L),
                  (8.0L / 9.0L) / (1.0L + 2.0L * alpha * r));
}

inline long double GammaPlus(long double n_plus, long double n_minus) {
  const long double a = std::pow(n_plus, 0.25L);
  const long double b = std::pow(n_minus, 0.25L);
  return b / (a + b);
}

// ŝ in probability form.
inline long double Surrogate(long double f, long double wp, long double wm) {
  const long double a = wp * std::exp(f);
  const long double b = wm * std::exp(-f);
  return a / (a + b);
}

// 1 - ŝ, formed directly so it keeps full precision when ŝ is close to 1.
inline long double SurrogateComplement(long double f, long double wp, long double wm) {
  return Surrogate(-f, wm, wp);
}

inline long double EcmValue(long double f, bool positive, long double wp,
                            long double wm, long double m) {
  return -m * std::log(positive ? Surrogate(f, wp, wm) : SurrogateComplement(f, wp, wm));
}

inline long double FocalValue(long double f, bool positive, long double wp,
                              long double wm, long double m, long double gamma,
                              long double a) {
  const long double s = Surrogate(f, wp, wm);
  const long double t = SurrogateComplement(f, wp, wm);
  return positive ? a * std::pow(t, gamma) * -m * std::log(s)
                  : (1.0L - a) * std::pow(s, gamma) * -m * std::log(t);
}

template <typename F>
long double CentralDifference(F&& fn, long double x, long double h = 1e-6L) {
  return (fn(x + h) - fn(x - h)) / (2.0L * h);
}

}  // namespace oracle

#endif  // ECM_TESTS_ORACLES_H_
