// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "o3aed/common.hpp"

namespace o3aed {

// ---------------------------------------------------------------------------
// BoxDomain
// ---------------------------------------------------------------------------

/// Axis-aligned box [lower, upper] in R^n. All evaluation points must lie
/// inside; designs and perturbations are clipped to it elsewhere.
class BoxDomain {
 public:
  BoxDomain(Point lower, Point upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty() || lower_.size() != upper_.size())
      throw std::invalid_argument("BoxDomain: dimension mismatch or empty");
    for (std::size_t k = 0; k < lower_.size(); ++k) {
      if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]) || !(lower_[k] < upper_[k]))
        throw std::invalid_argument("BoxDomain: require finite lower < upper per coordinate");
    }
  }

  /// [-1,1]^n, [0,1]^n, etc.
  static BoxDomain cube(std::size_t n, double lo, double hi) {
    return BoxDomain(Point(n, lo), Point(n, hi));
  }

  std::size_t dim() const { return lower_.size(); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  double range(std::size_t k) const { return upper_[k] - lower_[k]; }

  bool contains(const Point& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k)
      if (!(x[k] >= lower_[k] && x[k] <= upper_[k])) return false;
    return true;
  }

  /// Affine map into the unit cube.
  Point normalize(const Point& x) const {
    if (!contains(x)) throw OutOfDomain("normalize: point outside domain");
    Point u(dim());
    for (std::size_t k = 0; k < dim(); ++k) u[k] = (x[k] - lower_[k]) / range(k);
    return u;
  }

  /// Inverse of normalize.
  Point denormalize(const Point& u) const {
    if (u.size() != dim()) throw OutOfDomain("denormalize: dimension mismatch");
    for (double c : u)
      if (!(c >= 0.0 && c <= 1.0)) throw OutOfDomain("denormalize: point outside unit cube");
    Point x(dim());
    for (std::size_t k = 0; k < dim(); ++k) x[k] = lower_[k] + u[k] * range(k);
    return x;
  }

  Point clip(Point x) const {
    for (std::size_t k = 0; k < dim(); ++k) x[k] = std::clamp(x[k], lower_[k], upper_[k]);
    return x;
  }

  bool operator==(const BoxDomain& o) const { return lower_ == o.lower_ && upper_ == o.upper_; }

 private:
  Point lower_, upper_;
};

// ---------------------------------------------------------------------------
// Evaluation log
// ---------------------------------------------------------------------------

/// Provenance of an expensive-function evaluation.
enum class Tag { opt, lhd, oo, direct, reference };

inline const char* to_string(Tag t) {
  switch (t) {
    case Tag::opt: return "opt";
    case Tag::lhd: return "lhd";
    case Tag::oo: return "oo";
    case Tag::direct: return "direct";
    case Tag::reference: return "reference";
  }
  return "?";
}

inline Tag tag_from_string(const std::string& s) {
  if (s == "opt") return Tag::opt;
  if (s == "lhd") return Tag::lhd;
  if (s == "oo") return Tag::oo;
  if (s == "direct") return Tag::direct;
  if (s == "reference") return Tag::reference;
  throw std::invalid_argument("unknown evaluation tag: " + s);
}

struct EvaluationRecord {
  std::size_t seq;
  Tag tag;
  Point x;
  double y;
};

/// Ordered, deduplicated record of every expensive evaluation. The budget is
/// a hard cap on the number of stored records; near-duplicate queries return
/// the cached value without charging the budget.
class EvaluationLog {
 public:
  explicit EvaluationLog(BoxDomain domain, std::optional<std::size_t> budget = std::nullopt,
                         double dedup_tol = 1e-8)
      : domain_(std::move(domain)), budget_(budget), dedup_tol_(dedup_tol) {
    if (dedup_tol_ < 0) throw std::invalid_argument("EvaluationLog: dedup_tol must be >= 0");
  }

  const BoxDomain& domain() const { return domain_; }
  const std::vector<EvaluationRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::optional<std::size_t> budget() const { return budget_; }
  double dedup_tol() const { return dedup_tol_; }

  std::size_t count(Tag t) const {
    std::size_t c = 0;
    for (const auto& r : records_)
      if (r.tag == t) ++c;
    return c;
  }

  std::size_t remaining() const {
    if (!budget_) return SIZE_MAX;
    return *budget_ - records_.size();
  }

  /// Index of the record within dedup_tol of x (normalized metric), or npos.
  std::size_t find_near(const Point& x) const {
    const Point u = domain_.normalize(x);
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (dist(domain_.normalize(records_[i].x), u) <= dedup_tol_) return i;
    }
    return SIZE_MAX;
  }

  const EvaluationRecord& append(Point x, double y, Tag tag) {
    if (!domain_.contains(x)) throw OutOfDomain("EvaluationLog::append: point outside domain");
    if (!std::isfinite(y)) throw EvalFailed("EvaluationLog::append: non-finite value");
    if (budget_ && records_.size() >= *budget_)
      throw BudgetExhausted("EvaluationLog::append: budget exhausted");
    if (find_near(x) != SIZE_MAX)
      throw std::invalid_argument("EvaluationLog::append: duplicate within dedup_tol");
    records_.push_back(EvaluationRecord{next_seq_++, tag, std::move(x), y});
    return records_.back();
  }

  /// CSV with header `seq,tag,y,x1..xn`, floats at 17 significant digits.
  void save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "seq,tag,y";
    for (std::size_t k = 1; k <= domain_.dim(); ++k) out << ",x" << k;
    out << "\n";
    for (const auto& r : records_) {
      out << r.seq << ',' << to_string(r.tag) << ',' << format_double(r.y);
      for (double c : r.x) out << ',' << format_double(c);
      out << "\n";
    }
  }

  static EvaluationLog load_csv(const std::filesystem::path& path, BoxDomain domain,
                                std::optional<std::size_t> budget = std::nullopt,
                                double dedup_tol = 1e-8) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    EvaluationLog log(std::move(domain), budget, dedup_tol);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty log file: " + path.string());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      const std::size_t seq = std::stoull(cell);
      std::getline(ss, cell, ',');
      const Tag tag = tag_from_string(cell);
      std::getline(ss, cell, ',');
      const double y = std::stod(cell);
      Point x;
      while (std::getline(ss, cell, ',')) x.push_back(std::stod(cell));
      if (x.size() != log.domain_.dim()) throw Error("log row dimension mismatch");
      log.records_.push_back(EvaluationRecord{seq, tag, std::move(x), y});
      log.next_seq_ = std::max(log.next_seq_, seq + 1);
    }
    return log;
  }

 private:
  BoxDomain domain_;
  std::optional<std::size_t> budget_;
  double dedup_tol_;
  std::vector<EvaluationRecord> records_;
  std::size_t next_seq_ = 0;
};

// ---------------------------------------------------------------------------
// Black box functions
// ---------------------------------------------------------------------------

/// A deterministic scalar function on a box domain. Builtins wrap analytic
/// formulas; external black boxes talk to a child process over pipes.
class BlackBox {
 public:
  BlackBox(std::string kind, BoxDomain domain, std::function<double(const Point&)> fn)
      : kind_(std::move(kind)), domain_(std::move(domain)), fn_(std::move(fn)) {}

  std::size_t dim() const { return domain_.dim(); }
  const BoxDomain& domain() const { return domain_; }
  const std::string& kind() const { return kind_; }

  double operator()(const Point& x) const {
    if (!domain_.contains(x)) throw OutOfDomain("BlackBox: evaluation outside domain");
    const double y = fn_(x);
    if (!std::isfinite(y)) throw EvalFailed("BlackBox: non-finite function value");
    return y;
  }

 private:
  std::string kind_;
  BoxDomain domain_;
  std::function<double(const Point&)> fn_;
};

namespace detail {

/// Coefficients of the ten-dimensional exponential test function. The
/// inner logarithm runs over all coordinates: f(x) = sum_i exp(x_i) *
/// (c_i + x_i - ln sum_k exp(x_k)) on [-1,1]^10.
inline const Point& testproblem1_c() {
  static const Point c = {-35.0, -28.0, -20.0, -16.0, -10.0, -6.0, -4.0, -2.0, -1.0, -0.02};
  return c;
}

inline double testproblem1_f(const Point& x) {
  double sum_exp = 0.0;
  for (double xi : x) sum_exp += std::exp(xi);
  const double log_sum = std::log(sum_exp);
  const Point& c = testproblem1_c();
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) f += std::exp(x[i]) * (c[i] + x[i] - log_sum);
  return f;
}

/// Weights 512, 256, ..., 1 for the heterogeneous additive benchmark.
inline const Point& additive10_w() {
  static const Point w = {512, 256, 128, 64, 32, 16, 8, 4, 2, 1};
  return w;
}

/// 20-d quadratic with a sparse set of pair interactions and an interior
/// minimum. Weights fall geometrically, w_i = 400 * 0.7^(i-1); each listed
/// pair gets v = 0.5 * min(w_i, w_j), which keeps the quadratic form
/// diagonally dominant so the minimum stays at the documented center m,
/// m_i = 0.3 + 0.04 * ((i-1) mod 11). The +100 offset keeps f positive
/// everywhere so relative perturbation effects are well defined.
struct Interaction20 {
  Point w, m;
  std::vector<std::tuple<int, int, double>> v;  // (i, j, v_ij), 0-based i < j

  Interaction20() {
    w.resize(20);
    m.resize(20);
    for (int i = 0; i < 20; ++i) {
      w[i] = 400.0 * std::pow(0.7, i);
      m[i] = 0.3 + 0.04 * (i % 11);
    }
    const int pairs[12][2] = {{1, 2},  {3, 4},  {5, 6},  {7, 8},   {9, 10},  {2, 11},
                              {4, 13}, {6, 15}, {8, 17}, {10, 19}, {12, 14}, {16, 18}};
    for (const auto& p : pairs) {
      const int i = p[0] - 1, j = p[1] - 1;
      v.emplace_back(i, j, 0.5 * std::min(w[i], w[j]));
    }
  }

  double operator()(const Point& x) const {
    double f = 100.0;
    for (int i = 0; i < 20; ++i) f += w[i] * sq(x[i] - m[i]);
    for (const auto& [i, j, vij] : v) f += vij * (x[i] - m[i]) * (x[j] - m[j]);
    return f;
  }
};

inline const Interaction20& interaction20() {
  static const Interaction20 f;
  return f;
}

}  // namespace detail

/// Named analytic test functions: `testproblem1`, `additive10`,
/// `interaction20`, and `sphere<N>` (sum of squares on [-1,1]^N).
inline BlackBox builtin(const std::string& name) {
  if (name == "testproblem1") {
    return BlackBox(name, BoxDomain::cube(10, -1.0, 1.0), detail::testproblem1_f);
  }
  if (name == "additive10") {
    return BlackBox(name, BoxDomain::cube(10, 0.0, 1.0), [](const Point& x) {
      const Point& w = detail::additive10_w();
      double f = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) f += w[i] * sq(x[i]);
      return f;
    });
  }
  if (name == "interaction20") {
    return BlackBox(name, BoxDomain::cube(20, 0.0, 1.0),
                    [](const Point& x) { return detail::interaction20()(x); });
  }
  if (name.rfind("sphere", 0) == 0) {
    const std::string rest = name.substr(6);
    if (!rest.empty() && std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(c); })) {
      const std::size_t n = std::stoul(rest);
      if (n >= 1) {
        return BlackBox(name, BoxDomain::cube(n, -1.0, 1.0), [](const Point& x) {
          double f = 0.0;
          for (double xi : x) f += sq(xi);
          return f;
        });
      }
    }
  }
  throw UnknownBuiltin("unknown builtin function: " + name);
}

// ---------------------------------------------------------------------------
// External process black box
// ---------------------------------------------------------------------------

namespace detail {

/// Long-lived child process speaking the line protocol: one request line of
/// n space-separated floats on stdin, one reply line with a single float on
/// stdout. Exchanges are serialized.
class ExternalProcess {
 public:
  ExternalProcess(std::vector<std::string> argv, double timeout_sec)
      : argv_(std::move(argv)), timeout_sec_(timeout_sec) {
    if (argv_.empty()) throw std::invalid_argument("external: empty command");
    start();
  }

  ~ExternalProcess() { stop(); }

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  double eval(const Point& x) {
    std::lock_guard<std::mutex> lock(mu_);
    if (pid_ < 0) throw EvalFailed("external: child process is not running");
    std::string line;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k) line += ' ';
      line += format_double(x[k]);
    }
    line += '\n';
    if (!write_all(line)) {
      stop();
      throw EvalFailed("external: failed to write to child stdin");
    }
    std::string reply = read_line();
    char* end = nullptr;
    const double y = std::strtod(reply.c_str(), &end);
    while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (reply.empty() || end == reply.c_str() || (end && *end != '\0')) {
      stop();
      throw EvalFailed("external: non-numeric reply '" + reply + "'");
    }
    return y;
  }

 private:
  void start() {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw EvalFailed("external: pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw EvalFailed("external: fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> cargv;
      for (auto& a : argv_) cargv.push_back(a.data());
      cargv.push_back(nullptr);
      execvp(cargv[0], cargv.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  void stop() {
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
      pid_ = -1;
    }
  }

  bool write_all(const std::string& s) {
    std::size_t off = 0;
    while (off < s.size()) {
      const ssize_t n = ::write(in_fd_, s.data() + off, s.size() - off);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  std::string read_line() {
    std::string line;
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int pr = poll(&pfd, 1, static_cast<int>(timeout_sec_ * 1000));
      if (pr == 0) {
        stop();
        throw EvalFailed("external: timeout waiting for child reply");
      }
      if (pr < 0) {
        stop();
        throw EvalFailed("external: poll failed");
      }
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n <= 0) {
        stop();
        throw EvalFailed("external: child closed its output (exited?)");
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::vector<std::string> argv_;
  double timeout_sec_;
  pid_t pid_ = -1;
  int in_fd_ = -1, out_fd_ = -1;
  std::string buf_;
  std::mutex mu_;
};

}  // namespace detail

/// Wrap an external simulator as a BlackBox. The child is launched once and
/// reused for every evaluation.
inline BlackBox external(std::vector<std::string> argv, std::size_t dim, BoxDomain domain,
                         double timeout_sec = 60.0) {
  if (domain.dim() != dim) throw std::invalid_argument("external: domain/dim mismatch");
  auto proc = std::make_shared<detail::ExternalProcess>(std::move(argv), timeout_sec);
  return BlackBox("external", std::move(domain),
                  [proc](const Point& x) { return proc->eval(x); });
}

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

/// Evaluate `points` on `bb`, appending one record per fresh point to `log`.
/// Points within the log's dedup tolerance of an existing record (or of an
/// earlier point in the same batch) reuse the cached value and do not charge
/// the budget. Throws before any evaluation if the fresh points alone would
/// exceed the budget.
inline std::vector<double> evaluate_batch(const BlackBox& bb, const std::vector<Point>& points,
                                          EvaluationLog& log, Tag tag) {
  if (!(bb.domain() == log.domain()))
    throw std::invalid_argument("evaluate_batch: black box and log domains differ");
  std::vector<Point> unit(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!bb.domain().contains(points[i]))
      throw OutOfDomain("evaluate_batch: point outside domain");
    unit[i] = bb.domain().normalize(points[i]);
  }

  // Resolve duplicates against the log and within the batch before spending
  // any budget.
  constexpr std::size_t kFresh = SIZE_MAX;
  std::vector<std::size_t> dup_of(points.size(), kFresh);
  std::vector<std::size_t> log_hit(points.size(), SIZE_MAX);
  std::vector<std::size_t> fresh_order;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t near = log.find_near(points[i]);
    if (near != SIZE_MAX) {
      log_hit[i] = near;
      continue;
    }
    bool dup = false;
    for (std::size_t j : fresh_order) {
      if (dist(unit[i], unit[j]) <= log.dedup_tol()) {
        dup_of[i] = j;
        dup = true;
        break;
      }
    }
    if (!dup) fresh_order.push_back(i);
  }
  if (log.budget() && log.size() + fresh_order.size() > *log.budget())
    throw BudgetExhausted("evaluate_batch: batch would exceed the evaluation budget");

  std::vector<double> values(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (log_hit[i] != SIZE_MAX) {
      values[i] = log.records()[log_hit[i]].y;
    } else if (dup_of[i] != kFresh) {
      values[i] = values[dup_of[i]];
    } else {
      const double y = bb(points[i]);
      log.append(points[i], y, tag);
      values[i] = y;
    }
  }
  return values;
}

}  // namespace o3aed
