#ifndef GCOVTEST_SERIES_HPP
#define GCOVTEST_SERIES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gcovtest/errors.hpp"

namespace gcovtest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * T x m block of finite observations, row 0 is the earliest.
 */
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(Matrix values, std::vector<std::string> labels = {},
                      std::string origin = {})
      : values_(std::move(values)),
        labels_(std::move(labels)),
        origin_(std::move(origin)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw ShapeMismatch("time series must have at least one row and column");
    if (!values_.allFinite())
      throw DomainViolation(first_nonfinite_row(), "finite-check");
    if (!labels_.empty() && static_cast<Index>(labels_.size()) != values_.cols())
      throw ShapeMismatch("label count does not match column count");
  }

  static TimeSeries univariate(const Vector& v, std::string origin = {}) {
    return TimeSeries(Matrix(v), {}, std::move(origin));
  }

  static TimeSeries univariate(const std::vector<double>& v,
                               std::string origin = {}) {
    Vector x = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    return univariate(x, std::move(origin));
  }

  Index length() const noexcept { return values_.rows(); }
  Index dim() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  Vector column(Index j) const { return values_.col(j); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& origin() const noexcept { return origin_; }

 private:
  std::size_t first_nonfinite_row() const {
    for (Index i = 0; i < values_.rows(); ++i)
      if (!values_.row(i).allFinite()) return static_cast<std::size_t>(i);
    return 0;
  }

  Matrix values_;
  std::vector<std::string> labels_;
  std::string origin_;
};

enum class TransformKind {
  identity,
  power,
  signed_power,
  abs_power,
  log_abs,
  log_square,
  exp_weighted_power,
  custom
};

/**
 * Scalar map a_k applied to one input column.  Evaluation returns NaN
 * outside the domain; apply_transforms turns that into DomainViolation.
 */
class Transform {
 public:
  static Transform identity(Index column = 0) {
    return Transform(TransformKind::identity, 1.0, 0.0, column, "identity");
  }
  static Transform power(double p, Index column = 0) {
    check_positive(p, "power");
    return Transform(TransformKind::power, p, 0.0, column,
                     "power(" + fmt(p) + ")");
  }
  static Transform signed_power(double p, Index column = 0) {
    check_positive(p, "signed-power");
    return Transform(TransformKind::signed_power, p, 0.0, column,
                     "signed-power(" + fmt(p) + ")");
  }
  static Transform abs_power(double p, Index column = 0) {
    check_positive(p, "abs-power");
    return Transform(TransformKind::abs_power, p, 0.0, column,
                     "abs-power(" + fmt(p) + ")");
  }
  static Transform log_abs(Index column = 0) {
    return Transform(TransformKind::log_abs, 0.0, 0.0, column, "log-abs");
  }
  static Transform log_square(Index column = 0) {
    return Transform(TransformKind::log_square, 0.0, 0.0, column, "log-square");
  }
  static Transform exp_weighted_power(int p, double t, Index column = 0) {
    if (p < 0) throw UsageError("exp-weighted-power needs a nonnegative power");
    if (!(t >= 0.0 && t <= 1.0))
      throw UsageError("exp-weighted-power weight must lie in [0,1]");
    return Transform(TransformKind::exp_weighted_power, p, t, column,
                     "exp-weighted-power(" + std::to_string(p) + "," + fmt(t) +
                         ")");
  }
  static Transform custom(std::string label, std::function<double(double)> f,
                          Index column = 0) {
    Transform tr(TransformKind::custom, 0.0, 0.0, column, std::move(label));
    tr.fn_ = std::make_shared<const std::function<double(double)>>(std::move(f));
    return tr;
  }

  TransformKind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  double t() const noexcept { return t_; }
  Index column() const noexcept { return column_; }
  const std::string& label() const noexcept { return label_; }

  double operator()(double x) const {
    switch (kind_) {
      case TransformKind::identity:
        return x;
      case TransformKind::power:
        return int_p_ > 0 ? ipow(x, int_p_) : std::pow(x, p_);
      case TransformKind::signed_power: {
        const double m = int_p_ > 0 ? ipow(std::abs(x), int_p_)
                                    : std::pow(std::abs(x), p_);
        return std::signbit(x) ? -m : m;
      }
      case TransformKind::abs_power:
        if (p_ == 0.5) return std::sqrt(std::abs(x));
        return int_p_ > 0 ? ipow(std::abs(x), int_p_)
                          : std::pow(std::abs(x), p_);
      case TransformKind::log_abs:
        return x == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                        : std::log(std::abs(x));
      case TransformKind::log_square:
        return x == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                        : std::log(x * x);
      case TransformKind::exp_weighted_power:
        return ipow(x, static_cast<int>(p_)) * std::exp(-t_ * x);
      case TransformKind::custom:
        return (*fn_)(x);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

 private:
  Transform(TransformKind kind, double p, double t, Index column,
            std::string label)
      : kind_(kind), p_(p), t_(t), column_(column), label_(std::move(label)) {
    if (column_ < 0) throw UsageError("negative transform column");
    if (column_ > 0) label_ += "@" + std::to_string(column_);
    if (p_ == std::floor(p_) && p_ >= 1.0 && p_ <= 32.0)
      int_p_ = static_cast<int>(p_);
  }

  static double ipow(double x, int n) {
    double r = 1.0;
    for (; n > 0; n >>= 1) {
      if (n & 1) r *= x;
      x *= x;
    }
    return r;
  }

  static void check_positive(double p, const char* name) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw UsageError(std::string(name) + " needs a positive exponent");
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
  }

  TransformKind kind_;
  double p_;
  double t_;
  Index column_;
  std::string label_;
  int int_p_ = 0;
  std::shared_ptr<const std::function<double(double)>> fn_;
};

/** Ordered list of K transforms with unique labels. */
class TransformSet {
 public:
  TransformSet() = default;

  TransformSet(std::initializer_list<Transform> ts)
      : TransformSet(std::vector<Transform>(ts)) {}

  explicit TransformSet(std::vector<Transform> ts) : ts_(std::move(ts)) {
    if (ts_.empty()) throw UsageError("transform set must not be empty");
    std::set<std::string> seen;
    for (const auto& t : ts_)
      if (!seen.insert(t.label()).second)
        throw UsageError("duplicate transform label '" + t.label() + "'");
  }

  /** Default set for univariate data: {identity, power(2)}. */
  static TransformSet linear_quadratic() {
    return TransformSet{Transform::identity(), Transform::power(2.0)};
  }

  Index size() const noexcept { return static_cast<Index>(ts_.size()); }
  const Transform& operator[](Index k) const { return ts_[static_cast<std::size_t>(k)]; }
  auto begin() const { return ts_.begin(); }
  auto end() const { return ts_.end(); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& t : ts_) out.push_back(t.label());
    return out;
  }

  Index max_column() const {
    Index m = 0;
    for (const auto& t : ts_) m = std::max(m, t.column());
    return m;
  }

 private:
  std::vector<Transform> ts_;
};

/** Raw-matrix kernel behind apply_transforms. */
inline Matrix transform_matrix(const Matrix& x, const TransformSet& ts) {
  if (ts.max_column() >= x.cols())
    throw ShapeMismatch("transform refers to a missing input column");
  const Index n = x.rows();
  Matrix out(n, ts.size());
  for (Index k = 0; k < ts.size(); ++k) {
    const Transform& tr = ts[k];
    const Index c = tr.column();
    for (Index i = 0; i < n; ++i) {
      const double v = tr(x(i, c));
      if (!std::isfinite(v))
        throw DomainViolation(static_cast<std::size_t>(i), tr.label());
      out(i, k) = v;
    }
  }
  return out;
}

inline TimeSeries apply_transforms(const TimeSeries& series,
                                   const TransformSet& ts) {
  return TimeSeries(transform_matrix(series.values(), ts), ts.labels(),
                    series.origin());
}

/**
 * Least-squares residuals of a univariate series on {1, t, ..., t^degree}.
 * Time is rescaled to [-1, 1] before building the design.
 */
inline TimeSeries detrend_polynomial(const TimeSeries& series, int degree) {
  if (series.dim() != 1) throw ShapeMismatch("detrend expects one column");
  if (degree < 0) throw UsageError("negative detrend degree");
  const Index n = series.length();
  if (n <= degree + 1)
    throw RankDeficient("series too short for detrend of degree " +
                        std::to_string(degree));
  Matrix X(n, degree + 1);
  for (Index i = 0; i < n; ++i) {
    const double s = n > 1 ? 2.0 * static_cast<double>(i) / (n - 1) - 1.0 : 0.0;
    double v = 1.0;
    for (int d = 0; d <= degree; ++d) {
      X(i, d) = v;
      v *= s;
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < degree + 1) throw RankDeficient("singular detrend design");
  const Vector y = series.values().col(0);
  const Vector beta = qr.solve(y);
  Vector resid = y - X * beta;
  // one refinement pass keeps the regressors orthogonal to roundoff level
  resid -= X * qr.solve(resid);
  return TimeSeries(Matrix(resid), series.labels(), series.origin());
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  std::istringstream is(t);
  is.imbue(std::locale::classic());
  is >> out;
  return !is.fail() && is.eof();
}

}  // namespace detail

/**
 * Reads comma-separated columns with an optional header line.
 * The header is detected when any field of the first line is not numeric.
 */
inline TimeSeries read_csv(std::istream& in, std::string origin = {}) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = detail::split(t, ',');
    std::vector<double> vals;
    bool numeric = true;
    for (const auto& f : fields) {
      double v;
      if (!detail::parse_double(f, v)) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && labels.empty()) {
        for (const auto& f : fields) labels.push_back(detail::trim(f));
        width = labels.size();
        continue;
      }
      throw UsageError("non-numeric field on CSV line " + std::to_string(lineno));
    }
    if (width == 0) width = vals.size();
    if (vals.size() != width)
      throw ShapeMismatch("ragged CSV at line " + std::to_string(lineno));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InsufficientSample("CSV contains no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return TimeSeries(std::move(m), std::move(labels), std::move(origin));
}

inline TimeSeries read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const TimeSeries& series) {
  out << std::setprecision(17);
  if (!series.labels().empty()) {
    for (std::size_t j = 0; j < series.labels().size(); ++j)
      out << (j ? "," : "") << series.labels()[j];
    out << '\n';
  }
  const Matrix& v = series.values();
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index j = 0; j < v.cols(); ++j) out << (j ? "," : "") << v(i, j);
    out << '\n';
  }
}

/**
 * Parses "identity", "power:2", "signed-power:3", "abs-power:0.5",
 * "log-abs", "log-square", "exp-weighted-power:1:0.5", each optionally
 * suffixed by "@column".
 */
inline Transform parse_transform(const std::string& text) {
  std::string body = detail::trim(text);
  Index column = 0;
  if (const auto at = body.find('@'); at != std::string::npos) {
    double c;
    if (!detail::parse_double(body.substr(at + 1), c) || c < 0 ||
        c != std::floor(c))
      throw UsageError("bad column in transform '" + text + "'");
    column = static_cast<Index>(c);
    body = body.substr(0, at);
  }
  const auto parts = detail::split(body, ':');
  const std::string& name = parts.at(0);
  auto arg = [&](std::size_t i) {
    double v;
    if (parts.size() <= i || !detail::parse_double(parts[i], v))
      throw UsageError("missing or bad argument in transform '" + text + "'");
    return v;
  };
  auto arity = [&](std::size_t n) {
    if (parts.size() != n + 1)
      throw UsageError("wrong argument count in transform '" + text + "'");
  };
  if (name == "identity") { arity(0); return Transform::identity(column); }
  if (name == "log-abs") { arity(0); return Transform::log_abs(column); }
  if (name == "log-square") { arity(0); return Transform::log_square(column); }
  if (name == "power") { arity(1); return Transform::power(arg(1), column); }
  if (name == "signed-power") { arity(1); return Transform::signed_power(arg(1), column); }
  if (name == "abs-power") { arity(1); return Transform::abs_power(arg(1), column); }
  if (name == "exp-weighted-power") {
    arity(2);
    const double p = arg(1);
    if (p != std::floor(p)) throw UsageError("exp-weighted-power needs an integer power");
    return Transform::exp_weighted_power(static_cast<int>(p), arg(2), column);
  }
  throw UsageError("unknown transform '" + name + "'");
}

/** Comma-separated list of parse_transform items. */
inline TransformSet parse_transform_set(const std::string& text) {
  std::vector<Transform> out;
  for (const auto& item : detail::split(text, ','))
    if (!detail::trim(item).empty()) out.push_back(parse_transform(item));
  return TransformSet(std::move(out));
}

}  // namespace gcovtest

#endif  // GCOVTEST_SERIES_HPP
