#ifndef GCOVTEST_OPTIMIZE_HPP
#define GCOVTEST_OPTIMIZE_HPP

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "gcovtest/errors.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

using Objective = std::function<double(const Vector&)>;

struct SimplexOptions {
  double initial_step = 0.25;
  double tolerance = 1e-7;  // simplex characteristic size
  int max_iter = 4000;
};

struct LocalResult {
  Vector x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

struct MultiStartResult {
  Vector x;
  double f = std::numeric_limits<double>::infinity();
  std::size_t best_start = 0;
  std::vector<LocalResult> runs;
};

namespace detail {

constexpr double kPenalty = 1e100;

inline void gsl_quiet() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

struct GslContext {
  const Objective* f;
  Vector buf;
};

inline double gsl_trampoline(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<GslContext*>(params);
  for (Index i = 0; i < ctx->buf.size(); ++i)
    ctx->buf[i] = gsl_vector_get(v, static_cast<std::size_t>(i));
  double y;
  try {
    y = (*ctx->f)(ctx->buf);
  } catch (const Error&) {
    return kPenalty;
  }
  return std::isfinite(y) ? y : kPenalty;
}

/** Evaluates f and maps library errors and non-finite values to +inf. */
inline double safe_eval(const Objective& f, const Vector& x) {
  try {
    const double y = f(x);
    return std::isfinite(y) ? y : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/** Nelder-Mead (GSL nmsimplex2) from x0 on an unconstrained space. */
inline LocalResult nelder_mead(const Objective& f, const Vector& x0,
                               const SimplexOptions& opt = {}) {
  detail::gsl_quiet();
  const std::size_t n = static_cast<std::size_t>(x0.size());
  if (n == 0) {
    LocalResult r;
    r.x = x0;
    r.f = detail::safe_eval(f, x0);
    r.converged = true;
    return r;
  }
  detail::GslContext ctx{&f, Vector(x0.size())};
  gsl_multimin_function fn{&detail::gsl_trampoline, n, &ctx};
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n),
                                                            &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> step(gsl_vector_alloc(n),
                                                               &gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x.get(), i, x0[static_cast<Index>(i)]);
    gsl_vector_set(step.get(), i, opt.initial_step);
  }
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
      &gsl_multimin_fminimizer_free);
  LocalResult r;
  if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) {
    r.x = x0;
    return r;
  }
  int status = GSL_CONTINUE;
  int it = 0;
  while (status == GSL_CONTINUE && it < opt.max_iter) {
    ++it;
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.tolerance);
  }
  r.x.resize(x0.size());
  for (std::size_t i = 0; i < n; ++i)
    r.x[static_cast<Index>(i)] = gsl_vector_get(s->x, i);
  r.f = s->fval >= detail::kPenalty ? std::numeric_limits<double>::infinity() : s->fval;
  r.iterations = it;
  r.converged = status == GSL_SUCCESS;
  return r;
}

/**
 * Local searches from every start; the lowest value wins and ties go to
 * the earliest start.
 */
inline MultiStartResult multistart(const Objective& f, const std::vector<Vector>& starts,
                                   const SimplexOptions& opt = {}) {
  if (starts.empty()) throw AllStartsFailed("no starting values");
  MultiStartResult out;
  out.runs.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    out.runs.push_back(nelder_mead(f, starts[i], opt));
    const auto& r = out.runs.back();
    if (r.f < out.f) {
      out.f = r.f;
      out.x = r.x;
      out.best_start = i;
    }
  }
  if (!std::isfinite(out.f)) throw AllStartsFailed("objective undefined at every start");
  return out;
}

/**
 * Evaluates f on candidate points and returns the indices of the `keep`
 * smallest finite values, ordered by value then index.
 */
inline std::vector<std::size_t> best_candidates(const Objective& f,
                                                const std::vector<Vector>& points,
                                                std::size_t keep) {
  std::vector<std::pair<double, std::size_t>> vals;
  vals.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = detail::safe_eval(f, points[i]);
    if (std::isfinite(v)) vals.emplace_back(v, i);
  }
  std::stable_sort(vals.begin(), vals.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vals.size() && i < keep; ++i) out.push_back(vals[i].second);
  return out;
}

}  // namespace gcovtest

#endif  // GCOVTEST_OPTIMIZE_HPP
