#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rulepress/common.hpp"
#include "rulepress/dataset.hpp"
#include "rulepress/parallel.hpp"

namespace rulepress {

enum class Measure { Deviance, Mse, Mae, Class };

inline const char* to_string(Measure m) {
  switch (m) {
    case Measure::Deviance: return "deviance";
    case Measure::Mse: return "mse";
    case Measure::Mae: return "mae";
    case Measure::Class: return "class";
  }
  return "?";
}

inline Measure measure_from_string(const std::string& s) {
  if (s == "deviance") return Measure::Deviance;
  if (s == "mse") return Measure::Mse;
  if (s == "mae") return Measure::Mae;
  if (s == "class") return Measure::Class;
  throw Error("unknown measure '" + s + "' (deviance, mse, mae, class)");
}

inline std::string measure_label(Measure m, Family f) {
  switch (m) {
    case Measure::Deviance:
      if (f == Family::Gaussian) return "Half Mean-Squared Error";
      if (f == Family::Binomial) return "Binomial Deviance";
      return "Poisson Deviance";
    case Measure::Mse: return "Mean-Squared Error";
    case Measure::Mae: return "Mean Absolute Error";
    case Measure::Class: return "Misclassification Error";
  }
  return "?";
}

struct LambdaPath {
  std::vector<double> lambdas;  // strictly decreasing
  std::vector<double> intercepts;
  std::vector<std::vector<double>> coefficients;  // one vector per lambda
  std::vector<int> nonzero;                       // df per lambda
  double alpha_mix = 1.0;
};

struct CVResult {
  std::vector<double> lambdas;
  std::vector<double> mean_loss;
  std::vector<double> se;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  Measure measure = Measure::Deviance;
  Family family = Family::Gaussian;
};

struct PenaltyCriterion {
  enum class Kind { Lambda1se, LambdaMin, Numeric };
  Kind kind = Kind::Lambda1se;
  double value = 0.0;

  static PenaltyCriterion lambda_1se() { return {Kind::Lambda1se, 0.0}; }
  static PenaltyCriterion lambda_min() { return {Kind::LambdaMin, 0.0}; }
  static PenaltyCriterion numeric(double v) {
    if (v < 0.0) throw Error("penalty value must be >= 0");
    return {Kind::Numeric, v};
  }
  std::string describe() const {
    switch (kind) {
      case Kind::Lambda1se: return "lambda.1se";
      case Kind::LambdaMin: return "lambda.min";
      case Kind::Numeric: return format_double(value);
    }
    return "?";
  }
  static PenaltyCriterion parse(const std::string& s) {
    if (s == "lambda.1se") return lambda_1se();
    if (s == "lambda.min") return lambda_min();
    double v;
    if (!parse_double(s, v))
      throw Error("penalty criterion must be lambda.1se, lambda.min or a number");
    return numeric(v);
  }
};

namespace detail {

inline double null_response_mean(Family family, const std::vector<double>& y,
                                 const std::vector<double>& w) {
  return weighted_mean(y, w);  // response-scale null prediction for all families
}

inline double null_intercept(Family family, const std::vector<double>& y,
                             const std::vector<double>& w) {
  const double m = weighted_mean(y, w);
  switch (family) {
    case Family::Gaussian: return m;
    case Family::Binomial:
      if (m <= 0.0 || m >= 1.0)
        throw Error("binomial response has a single class; both classes required");
      return std::log(m / (1.0 - m));
    case Family::Poisson:
      if (m <= 0.0) throw Error("poisson response mean is zero");
      return std::log(m);
  }
  return m;
}

inline double dot_weighted(const std::vector<double>& x,
                           const std::vector<double>& a,
                           const std::vector<double>& b) {
  double s = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) s += x[i] * a[i] * b[i];
  return s;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Cache of weighted column cross-moments, shared along a path fit so the
// subspace solver only ever computes each pair once.
struct GramCache {
  std::size_t n_cols = 0;
  std::unordered_map<std::uint64_t, double> cross;  // <x_a, om x_b>, a <= b
  std::vector<double> col_sum;                      // <om, x_a>
  std::vector<bool> col_sum_ready;

  void reset(std::size_t k) {
    n_cols = k;
    cross.clear();
    col_sum.assign(k, 0.0);
    col_sum_ready.assign(k, false);
  }
};

// Dense symmetric positive-definite solve (Cholesky, lower). Returns false
// when a pivot collapses even after the caller's jitter.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& rhs,
                           std::size_t m) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * m + k] * a[j * m + k];
      if (i == j) {
        if (s <= 0.0) return false;
        a[i * m + i] = std::sqrt(s);
      } else {
        a[i * m + j] = s / a[j * m + j];
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * m + k] * rhs[k];
    rhs[i] = s / a[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < m; ++k) s -= a[k * m + i] * rhs[k];
    rhs[i] = s / a[i * m + i];
  }
  return true;
}

// Penalized weighted least squares by coordinate descent with active-set
// cycling and full KKT sweeps:
//   (1/(2N)) sum_i om_i (z_i - a0 - x_i'b)^2
//     + lambda (alpha |b|_1 + (1-alpha)/2 |b|_2^2)
// Intercept unpenalized. b/a0 are warm-started in place. Throws after
// max_sweeps sweeps without convergence. When `trace` is given the penalized
// objective is appended after every sweep.
//
// Near-duplicate rule columns make plain cyclic descent crawl along flat
// directions, so when a round of sweeps fails to settle, the sign-fixed
// subproblem on the active set is solved exactly (Cholesky on the weighted
// Gram, entries cached across calls via `gram`). The exact step is kept only
// if it does not increase the objective; every exit still passes the full
// KKT sweep.
inline void cd_weighted_lasso(const std::vector<const std::vector<double>*>& X,
                              const std::vector<double>& om,
                              const std::vector<double>& z, double n_scale,
                              double lambda, double alpha,
                              std::vector<double>& b, double& a0,
                              long max_sweeps = 100000, double tol = 1e-7,
                              std::vector<double>* trace = nullptr,
                              GramCache* gram = nullptr) {
  const std::size_t K = X.size();
  const std::size_t n = z.size();
  double sw = 0.0;
  for (double v : om) sw += v;
  if (sw <= 0.0) throw Error("all working weights are zero");

  // Residual from scratch each call; keeps drift out of long warm-started paths.
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = z[i] - a0;
  for (std::size_t j = 0; j < K; ++j) {
    if (b[j] == 0.0) continue;
    const auto& xj = *X[j];
    for (std::size_t i = 0; i < n; ++i) r[i] -= b[j] * xj[i];
  }

  std::vector<double> xv(K, -1.0);  // (1/N) sum om x^2, computed lazily
  auto xv_of = [&](std::size_t j) {
    if (xv[j] < 0.0) {
      const auto& xj = *X[j];
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += om[i] * xj[i] * xj[i];
      xv[j] = s / n_scale;
    }
    return xv[j];
  };

  std::vector<std::size_t> working;
  for (std::size_t j = 0; j < K; ++j)
    if (b[j] != 0.0) working.push_back(j);

  const double thresh = lambda * alpha;
  const double ridge = lambda * (1.0 - alpha);
  long sweeps = 0;

  auto objective = [&]() {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += om[i] * r[i] * r[i];
    obj /= 2.0 * n_scale;
    double l1 = 0.0, l2 = 0.0;
    for (double v : b) {
      l1 += std::abs(v);
      l2 += v * v;
    }
    return obj + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
  };

  // Stationarity residual over the working set and intercept, in gradient
  // units; certifies the KKT conditions directly.
  auto kkt_active_residual = [&]() {
    double worst = 0.0;
    double d0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d0 += om[i] * r[i];
    worst = std::abs(d0) / sw;
    for (std::size_t j : working) {
      const auto& xj = *X[j];
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += om[i] * xj[i] * r[i];
      g /= n_scale;
      double resid;
      if (b[j] > 0.0) resid = std::abs(g - thresh - ridge * b[j]);
      else if (b[j] < 0.0) resid = std::abs(g + thresh - ridge * b[j]);
      else resid = std::max(0.0, std::abs(g) - thresh);
      worst = std::max(worst, resid);
    }
    return worst;
  };
  constexpr double kKktTol = 1e-8;

  GramCache local_gram;
  if (!gram) {
    local_gram.reset(K);
    gram = &local_gram;
  } else if (gram->n_cols != K) {
    gram->reset(K);
  }
  auto cross_of = [&](std::size_t a, std::size_t c) {
    const std::uint64_t key =
        a <= c ? (static_cast<std::uint64_t>(a) << 32 | c)
               : (static_cast<std::uint64_t>(c) << 32 | a);
    auto it = gram->cross.find(key);
    if (it != gram->cross.end()) return it->second;
    const auto& xa = *X[a];
    const auto& xc = *X[c];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += om[i] * xa[i] * xc[i];
    gram->cross.emplace(key, s);
    return s;
  };
  auto sum_of = [&](std::size_t a) {
    if (!gram->col_sum_ready[a]) {
      const auto& xa = *X[a];
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += om[i] * xa[i];
      gram->col_sum[a] = s;
      gram->col_sum_ready[a] = true;
    }
    return gram->col_sum[a];
  };

  double z_wmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) z_wmean += om[i] * z[i];
  z_wmean /= sw;

  // Exact solve of the sign-fixed subproblem on the nonzero set. Offending
  // coefficients whose solved sign flips are dropped and the system re-solved.
  // Returns false (state untouched) when the step would not help.
  auto polish = [&]() -> bool {
    std::vector<std::size_t> act;
    std::vector<double> sign;
    for (std::size_t j : working)
      if (b[j] != 0.0) {
        act.push_back(j);
        sign.push_back(b[j] > 0.0 ? 1.0 : -1.0);
      }
    if (act.empty()) return false;

    const std::vector<double> b_saved = b;
    const double a0_saved = a0;
    const double obj_before = objective();

    for (int round = 0; round < 30 && !act.empty(); ++round) {
      const std::size_t m = act.size();
      std::vector<double> A(m * m), rhs(m);
      double max_diag = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        const double sp = sum_of(act[p]);
        for (std::size_t q = 0; q <= p; ++q) {
          const double sq = sum_of(act[q]);
          const double centered = cross_of(act[p], act[q]) - sp * sq / sw;
          A[p * m + q] = A[q * m + p] = centered / n_scale;
        }
        A[p * m + p] += ridge;
        max_diag = std::max(max_diag, A[p * m + p]);
        const auto& xp = *X[act[p]];
        double xz = 0.0;
        for (std::size_t i = 0; i < n; ++i) xz += om[i] * xp[i] * z[i];
        rhs[p] = (xz - sp * z_wmean) / n_scale - thresh * sign[p];
      }
      double jitter = 1e-12 * std::max(max_diag, 1e-300);
      bool solved = false;
      std::vector<double> sol;
      for (int attempt = 0; attempt < 5 && !solved; ++attempt) {
        std::vector<double> Aj = A;
        for (std::size_t p = 0; p < m; ++p) Aj[p * m + p] += jitter;
        sol = rhs;
        solved = cholesky_solve(Aj, sol, m);
        jitter *= 1e3;
      }
      if (!solved) {
        b = b_saved;
        a0 = a0_saved;
        return false;
      }
      // Drop coefficients whose solution crosses zero, then re-solve.
      std::vector<std::size_t> keep;
      for (std::size_t p = 0; p < m; ++p)
        if (sol[p] * sign[p] > 0.0) keep.push_back(p);
      if (keep.size() == m) {
        for (std::size_t j : working) b[j] = 0.0;
        double xb_mean = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
          b[act[p]] = sol[p];
          xb_mean += sol[p] * sum_of(act[p]);
        }
        a0 = z_wmean - xb_mean / sw;
        for (std::size_t i = 0; i < n; ++i) r[i] = z[i] - a0;
        for (std::size_t p = 0; p < m; ++p) {
          const auto& xp = *X[act[p]];
          const double bp = sol[p];
          for (std::size_t i = 0; i < n; ++i) r[i] -= bp * xp[i];
        }
        if (objective() > obj_before * (1.0 + 1e-12) + 1e-300) {
          b = b_saved;
          a0 = a0_saved;
          for (std::size_t i = 0; i < n; ++i) r[i] = z[i] - a0;
          for (std::size_t j : working) {
            if (b[j] == 0.0) continue;
            const auto& xj = *X[j];
            for (std::size_t i = 0; i < n; ++i) r[i] -= b[j] * xj[i];
          }
          return false;
        }
        return true;
      }
      std::vector<std::size_t> next_act;
      std::vector<double> next_sign;
      for (std::size_t p : keep) {
        next_act.push_back(act[p]);
        next_sign.push_back(sign[p]);
      }
      act = std::move(next_act);
      sign = std::move(next_sign);
    }
    b = b_saved;
    a0 = a0_saved;
    return false;
  };

  for (;;) {
    // Converge on the current working set: rounds of sweeps, with the exact
    // subspace step as a rescue when plain descent fails to settle.
    for (;;) {
      bool settled = false;
      for (int round_sweeps = 0; round_sweeps < 15; ++round_sweeps) {
        if (++sweeps > max_sweeps)
          throw Error("coordinate descent did not converge within " +
                      std::to_string(max_sweeps) + " sweeps");
        double move = 0.0;
        double d0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) d0 += om[i] * r[i];
        d0 /= sw;
        if (d0 != 0.0) {
          a0 += d0;
          for (std::size_t i = 0; i < n; ++i) r[i] -= d0;
          move = std::max(move, std::abs(d0));
        }
        for (std::size_t j : working) {
          const auto& xj = *X[j];
          double g = 0.0;
          for (std::size_t i = 0; i < n; ++i) g += om[i] * xj[i] * r[i];
          g /= n_scale;
          const double v = xv_of(j);
          const double bn = soft_threshold(g + v * b[j], thresh) / (v + ridge);
          const double d = bn - b[j];
          if (d != 0.0) {
            b[j] = bn;
            for (std::size_t i = 0; i < n; ++i) r[i] -= d * xj[i];
            move = std::max(move, std::abs(d));
          }
        }
        if (trace) trace->push_back(objective());
        if (move < tol) { settled = true; break; }
        if (sweeps % 5 == 0 && kkt_active_residual() <= kKktTol) {
          settled = true;
          break;
        }
      }
      if (settled) break;
      if (polish() && kkt_active_residual() <= kKktTol) break;
    }
    // Full KKT sweep; pull violators into the working set.
    std::vector<std::size_t> violators;
    for (std::size_t j = 0; j < K; ++j) {
      if (b[j] != 0.0) continue;
      const auto& xj = *X[j];
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += om[i] * xj[i] * r[i];
      g /= n_scale;
      if (std::abs(g) > thresh * (1.0 + 1e-12) + 1e-14) violators.push_back(j);
    }
    if (violators.empty()) break;
    working.insert(working.end(), violators.begin(), violators.end());
    std::sort(working.begin(), working.end());
    working.erase(std::unique(working.begin(), working.end()), working.end());
    // Members that settled at zero drop out; violations bring them back.
    working.erase(std::remove_if(working.begin(), working.end(),
                                 [&](std::size_t j) {
                                   return b[j] == 0.0 &&
                                          !std::binary_search(violators.begin(),
                                                              violators.end(),
                                                              j);
                                 }),
                  working.end());
  }
}

inline double binomial_deviance(const std::vector<double>& y,
                                const std::vector<double>& eta,
                                const std::vector<double>& w) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p =
        std::clamp(1.0 / (1.0 + std::exp(-eta[i])), 1e-10, 1.0 - 1e-10);
    dev += w[i] * -2.0 * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  return dev;
}

inline double poisson_deviance(const std::vector<double>& y,
                               const std::vector<double>& eta,
                               const std::vector<double>& w) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double mu = std::exp(std::clamp(eta[i], -30.0, 30.0));
    double t = -(y[i] - mu);
    if (y[i] > 0.0) t += y[i] * std::log(y[i] / mu);
    dev += w[i] * 2.0 * t;
  }
  return dev;
}

// Penalized IRLS for binomial/poisson: quadratic approximation around the
// current eta, inner coordinate descent, until the relative deviance change
// falls below 1e-8.
inline void irls_solve(const std::vector<const std::vector<double>*>& X,
                       const std::vector<double>& y,
                       const std::vector<double>& w, Family family,
                       double n_scale, double lambda, double alpha,
                       std::vector<double>& b, double& a0) {
  const std::size_t n = y.size();
  std::vector<double> eta(n), om(n), z(n);
  auto recompute_eta = [&]() {
    for (std::size_t i = 0; i < n; ++i) eta[i] = a0;
    for (std::size_t j = 0; j < X.size(); ++j) {
      if (b[j] == 0.0) continue;
      const auto& xj = *X[j];
      for (std::size_t i = 0; i < n; ++i) eta[i] += b[j] * xj[i];
    }
  };
  recompute_eta();
  double dev_prev = family == Family::Binomial
                        ? binomial_deviance(y, eta, w)
                        : poisson_deviance(y, eta, w);
  const int max_outer = 200;
  for (int it = 0; it < max_outer; ++it) {
    if (family == Family::Binomial) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p =
            std::clamp(1.0 / (1.0 + std::exp(-eta[i])), 1e-5, 1.0 - 1e-5);
        const double v = p * (1.0 - p);
        om[i] = w[i] * v;
        z[i] = eta[i] + (y[i] - p) / v;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = std::exp(std::clamp(eta[i], -30.0, 30.0));
        om[i] = w[i] * mu;
        z[i] = eta[i] + (y[i] - mu) / mu;
      }
    }
    cd_weighted_lasso(X, om, z, n_scale, lambda, alpha, b, a0);
    recompute_eta();
    const double dev = family == Family::Binomial
                           ? binomial_deviance(y, eta, w)
                           : poisson_deviance(y, eta, w);
    if (std::abs(dev - dev_prev) <= 1e-8 * (std::abs(dev_prev) + 1e-30)) return;
    dev_prev = dev;
  }
  throw Error("IRLS did not converge within " + std::to_string(max_outer) +
              " iterations");
}

inline std::vector<const std::vector<double>*> column_pointers(
    const std::vector<std::vector<double>>& X) {
  std::vector<const std::vector<double>*> p;
  p.reserve(X.size());
  for (const auto& c : X) p.push_back(&c);
  return p;
}

}  // namespace detail

/// Descending geometric lambda grid. lambda_max is the smallest value zeroing
/// all penalized coefficients at the null model; the grid spans down to
/// lambda_max * 1e-4 (1e-2 when the design is wider than tall).
inline std::vector<double> lambda_sequence(
    const std::vector<std::vector<double>>& X, const std::vector<double>& y,
    const std::vector<double>& w, Family family, double alpha_mix,
    int nlambda = 100) {
  if (X.empty()) throw Error("design matrix has no columns");
  if (nlambda < 2) throw Error("nlambda must be >= 2");
  if (!(alpha_mix >= 0.0) || alpha_mix > 1.0)
    throw Error("alpha_mix must be in [0, 1]");
  const std::size_t n = y.size();

  bool any_nonzero = false;
  for (const auto& col : X)
    for (double v : col)
      if (v != 0.0) { any_nonzero = true; break; }
  if (!any_nonzero) throw Error("design matrix is all zeros");

  const double yhat0 = detail::null_response_mean(family, y, w);
  std::vector<double> r0(n);
  for (std::size_t i = 0; i < n; ++i) r0[i] = y[i] - yhat0;

  double gmax = 0.0;
  for (const auto& col : X)
    gmax = std::max(gmax, std::abs(detail::dot_weighted(col, w, r0)) /
                              static_cast<double>(n));
  if (gmax <= 0.0) throw Error("response orthogonal to design");

  // Pure ridge has no finite zeroing lambda; use the conventional surrogate.
  const double alpha_eff = alpha_mix > 0.0 ? alpha_mix : 0.001;
  const double lambda_max = gmax / alpha_eff;
  const double ratio = n > X.size() ? 1e-4 : 1e-2;
  std::vector<double> lambdas(static_cast<std::size_t>(nlambda));
  const double step = std::log(ratio) / static_cast<double>(nlambda - 1);
  for (int l = 0; l < nlambda; ++l)
    lambdas[static_cast<std::size_t>(l)] = lambda_max * std::exp(step * l);
  return lambdas;
}

/// Fits the penalized GLM along a descending lambda grid with warm starts.
/// Loss is (1/N)-scaled: half squared error for gaussian, negative
/// log-likelihood otherwise; the intercept is unpenalized.
inline LambdaPath fit_path(const std::vector<std::vector<double>>& X,
                           const std::vector<double>& y,
                           const std::vector<double>& w, Family family,
                           double alpha_mix, std::vector<double> lambdas) {
  if (X.empty()) throw Error("design matrix has no columns");
  const std::size_t n = y.size();
  if (w.size() != n) throw Error("weights length mismatch");
  for (const auto& col : X)
    if (col.size() != n) throw Error("design column length mismatch");
  for (std::size_t l = 1; l < lambdas.size(); ++l)
    if (!(lambdas[l] < lambdas[l - 1]))
      throw Error("lambda grid must be strictly decreasing");
  if (lambdas.empty()) throw Error("empty lambda grid");

  const auto cols = detail::column_pointers(X);
  LambdaPath path;
  path.alpha_mix = alpha_mix;
  path.lambdas = lambdas;
  path.intercepts.resize(lambdas.size());
  path.coefficients.resize(lambdas.size());
  path.nonzero.resize(lambdas.size());

  std::vector<double> b(X.size(), 0.0);
  double a0 = detail::null_intercept(family, y, w);
  detail::GramCache gram;  // weights are fixed along a gaussian path
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    try {
      if (family == Family::Gaussian) {
        detail::cd_weighted_lasso(cols, w, y, static_cast<double>(n),
                                  lambdas[l], alpha_mix, b, a0, 100000, 1e-7,
                                  nullptr, &gram);
      } else {
        detail::irls_solve(cols, y, w, family, static_cast<double>(n),
                           lambdas[l], alpha_mix, b, a0);
      }
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (lambda index " +
                  std::to_string(l) + ", lambda = " +
                  format_double(lambdas[l]) + ")");
    }
    path.intercepts[l] = a0;
    path.coefficients[l] = b;
    int nz = 0;
    for (double v : b)
      if (v != 0.0) ++nz;
    path.nonzero[l] = nz;
  }
  return path;
}

/// Linear predictor for one row of the design.
inline double linear_predictor(const std::vector<std::vector<double>>& X,
                               std::size_t row, double a0,
                               const std::vector<double>& b) {
  double eta = a0;
  for (std::size_t j = 0; j < X.size(); ++j)
    if (b[j] != 0.0) eta += b[j] * X[j][row];
  return eta;
}

namespace detail {

inline double response_scale(Family family, double eta) {
  switch (family) {
    case Family::Gaussian: return eta;
    case Family::Binomial: return 1.0 / (1.0 + std::exp(-eta));
    case Family::Poisson: return std::exp(std::clamp(eta, -30.0, 30.0));
  }
  return eta;
}

inline double pointwise_loss(Measure measure, Family family, double y,
                             double eta) {
  switch (measure) {
    case Measure::Deviance:
      switch (family) {
        case Family::Gaussian: {
          const double d = y - eta;
          return 0.5 * d * d;
        }
        case Family::Binomial: {
          const double p =
              std::clamp(response_scale(family, eta), 1e-10, 1.0 - 1e-10);
          return -2.0 * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
        case Family::Poisson: {
          const double mu = response_scale(family, eta);
          double t = -(y - mu);
          if (y > 0.0) t += y * std::log(y / mu);
          return 2.0 * t;
        }
      }
      return 0.0;
    case Measure::Mse: {
      const double d = y - response_scale(family, eta);
      return d * d;
    }
    case Measure::Mae:
      return std::abs(y - response_scale(family, eta));
    case Measure::Class: {
      if (family != Family::Binomial)
        throw Error("class measure requires the binomial family");
      const double p = response_scale(family, eta);
      const double label = p > 0.5 ? 1.0 : 0.0;
      return label == y ? 0.0 : 1.0;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Applies the selection rules to mean losses: lambda_min is the (largest)
/// minimizer, lambda_1se the largest lambda whose mean loss stays within one
/// standard error of the minimum.
inline void finalize_cv_selection(CVResult& cv) {
  if (cv.lambdas.empty() || cv.lambdas.size() != cv.mean_loss.size() ||
      cv.lambdas.size() != cv.se.size())
    throw Error("cv result arrays are inconsistent");
  std::size_t l_min = 0;
  for (std::size_t l = 1; l < cv.lambdas.size(); ++l)
    if (cv.mean_loss[l] < cv.mean_loss[l_min]) l_min = l;
  cv.lambda_min = cv.lambdas[l_min];
  const double threshold = cv.mean_loss[l_min] + cv.se[l_min];
  std::size_t l_1se = l_min;
  for (std::size_t l = 0; l <= l_min; ++l)
    if (cv.mean_loss[l] <= threshold) { l_1se = l; break; }
  cv.lambda_1se = cv.lambdas[l_1se];
}

/// K-fold cross-validation over a shared lambda grid: per-fold path fits on
/// the training part, held-out loss per lambda, then the 1-SE rule.
inline CVResult cv_path(const std::vector<std::vector<double>>& X,
                        const std::vector<double>& y,
                        const std::vector<double>& w, Family family,
                        double alpha_mix, const FoldAssignment& folds,
                        Measure measure,
                        std::vector<double> lambdas = {}, int nlambda = 100,
                        int threads = 1) {
  const std::size_t n = y.size();
  if (folds.fold_of_row.size() != n) throw Error("fold assignment length mismatch");
  if (lambdas.empty())
    lambdas = lambda_sequence(X, y, w, family, alpha_mix, nlambda);

  const int k = folds.k;
  if (family == Family::Binomial) {
    for (int f = 1; f <= k; ++f) {
      bool has0 = false, has1 = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (folds.fold_of_row[i] == f) continue;
        (y[i] == 1.0 ? has1 : has0) = true;
      }
      if (!has0 || !has1)
        throw Error("fold " + std::to_string(f) +
                    " training data has a single response class; "
                    "use stratified folds");
    }
  }

  const std::size_t L = lambdas.size();
  std::vector<std::vector<double>> fold_loss(
      static_cast<std::size_t>(k), std::vector<double>(L, 0.0));

  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t fi) {
    const int f = static_cast<int>(fi) + 1;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < n; ++i)
      (folds.fold_of_row[i] == f ? test : train).push_back(i);

    std::vector<std::vector<double>> Xtr(X.size());
    for (std::size_t j = 0; j < X.size(); ++j) {
      Xtr[j].reserve(train.size());
      for (std::size_t i : train) Xtr[j].push_back(X[j][i]);
    }
    std::vector<double> ytr, wtr;
    ytr.reserve(train.size());
    wtr.reserve(train.size());
    for (std::size_t i : train) {
      ytr.push_back(y[i]);
      wtr.push_back(w[i]);
    }
    const LambdaPath path = fit_path(Xtr, ytr, wtr, family, alpha_mix, lambdas);

    for (std::size_t l = 0; l < L; ++l) {
      double loss = 0.0, sw = 0.0;
      for (std::size_t i : test) {
        const double eta =
            linear_predictor(X, i, path.intercepts[l], path.coefficients[l]);
        loss += w[i] * detail::pointwise_loss(measure, family, y[i], eta);
        sw += w[i];
      }
      fold_loss[fi][l] = sw > 0.0 ? loss / sw : 0.0;
    }
  });

  CVResult cv;
  cv.lambdas = lambdas;
  cv.measure = measure;
  cv.family = family;
  cv.mean_loss.resize(L);
  cv.se.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    double m = 0.0;
    for (int f = 0; f < k; ++f) m += fold_loss[static_cast<std::size_t>(f)][l];
    m /= k;
    double ss = 0.0;
    for (int f = 0; f < k; ++f) {
      const double d = fold_loss[static_cast<std::size_t>(f)][l] - m;
      ss += d * d;
    }
    cv.mean_loss[l] = m;
    cv.se[l] = std::sqrt(ss / (k - 1)) / std::sqrt(static_cast<double>(k));
  }

  finalize_cv_selection(cv);
  return cv;
}

/// Resolves a penalty criterion against a CV result. Numeric values must sit
/// on the fitted grid.
inline double select_lambda(const CVResult& cv,
                            const PenaltyCriterion& criterion) {
  switch (criterion.kind) {
    case PenaltyCriterion::Kind::Lambda1se: return cv.lambda_1se;
    case PenaltyCriterion::Kind::LambdaMin: return cv.lambda_min;
    case PenaltyCriterion::Kind::Numeric: {
      for (double l : cv.lambdas) {
        const double tol = 1e-9 * std::max(1.0, std::abs(l));
        if (std::abs(l - criterion.value) <= tol) return l;
      }
      throw Error("penalty value " + format_double(criterion.value) +
                  " is not on the lambda grid [" +
                  format_double(cv.lambdas.back()) + ", " +
                  format_double(cv.lambdas.front()) + "]");
    }
  }
  throw Error("unreachable criterion");
}

}  // namespace rulepress
