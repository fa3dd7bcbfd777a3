#include "fsc/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "fsc/error.hpp"

namespace fsc {

namespace {

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the bracket away from its ends; falls back to bisection.
double cubic_step(const Point& a, const Point& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double width = hi - lo;
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
      if (std::isfinite(cand)) t = cand;
    }
  }
  return std::clamp(t, lo + 0.1 * width, hi - 0.1 * width);
}

class Searcher {
 public:
  Searcher(const ObjectiveFn& fn, const LbfgsOptions& opt, std::size_t& n_evals)
      : fn_(fn), opt_(opt), n_evals_(n_evals) {}

  // Searches along `dir` from x for a step satisfying the strong Wolfe
  // conditions and returns true when one is found. Either way, `accepted`
  // reports whether (x_new, f_new, g_new) holds a point with sufficient
  // decrease; on failure it is the lowest such point evaluated.
  bool search(const Vector& x, double f0, const Vector& g0, const Vector& dir, double initial_step,
              Vector& x_new, double& f_new, Vector& g_new, bool& accepted) {
    f0_ = f0;
    d0_ = g0.dot(dir);
    best_ = Point{0.0, f0, d0_};
    Point prev = best_;
    double step = initial_step;
    bool found = false;

    for (std::size_t it = 0; it < opt_.max_line_search; ++it) {
      if (!eval(x, dir, step)) break;
      const Point cur{step, trial_f_, trial_g_.dot(dir)};
      if (!armijo(cur) || (it > 0 && cur.value >= prev.value)) {
        found = zoom(x, dir, prev, cur);
        break;
      }
      remember(cur);
      if (curvature(cur)) {
        found = true;
        break;
      }
      if (cur.slope >= 0.0) {
        found = zoom(x, dir, cur, prev);
        break;
      }
      prev = cur;
      step *= 2.0;
    }

    accepted = best_.step > 0.0;
    if (accepted) {
      x_new = best_x_;
      g_new = best_g_;
      f_new = best_.value;
    }
    return found;
  }

  bool budget_exhausted() const { return n_evals_ >= opt_.max_evals; }

 private:
  bool armijo(const Point& p) const { return p.value <= f0_ + opt_.c1 * p.step * d0_; }
  bool curvature(const Point& p) const { return std::abs(p.slope) <= -opt_.c2 * d0_; }

  bool zoom(const Vector& x, const Vector& dir, Point lo, Point hi) {
    for (std::size_t it = 0; it < opt_.max_line_search; ++it) {
      if (std::abs(hi.step - lo.step) <= 1e-14 * std::max(1.0, std::abs(lo.step))) return false;
      if (!eval(x, dir, cubic_step(lo, hi))) return false;
      const Point cur{last_step_, trial_f_, trial_g_.dot(dir)};
      if (!armijo(cur) || cur.value >= lo.value) {
        hi = cur;
        continue;
      }
      remember(cur);
      if (curvature(cur)) return true;
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = cur;
    }
    return false;
  }

  bool eval(const Vector& x, const Vector& dir, double step) {
    if (budget_exhausted()) return false;
    last_step_ = step;
    trial_x_ = x + step * dir;
    trial_g_.resize(x.size());
    trial_f_ = fn_(trial_x_, trial_g_);
    ++n_evals_;
    if (!std::isfinite(trial_f_) || !trial_g_.allFinite())
      fail(ErrorCode::NonFiniteObjective, "objective or gradient became non-finite during inference");
    return true;
  }

  // Called only for trials with sufficient decrease.
  void remember(const Point& cur) {
    if (cur.value < best_.value || best_.step == 0.0) {
      best_ = cur;
      best_x_ = trial_x_;
      best_g_ = trial_g_;
    }
  }

  const ObjectiveFn& fn_;
  const LbfgsOptions& opt_;
  std::size_t& n_evals_;
  double f0_ = 0.0;
  double d0_ = 0.0;
  Point best_;
  Vector trial_x_, trial_g_, best_x_, best_g_;
  double trial_f_ = 0.0;
  double last_step_ = 0.0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& fn, Vector x0, const LbfgsOptions& opt) {
  if (opt.max_evals == 0) fail(ErrorCode::InvalidArgument, "L-BFGS: max_evals must be >= 1");
  if (opt.memory == 0) fail(ErrorCode::InvalidArgument, "L-BFGS: memory must be >= 1");

  LbfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(res.x.size());
  res.value = fn(res.x, res.gradient);
  res.n_evals = 1;
  if (!std::isfinite(res.value) || !res.gradient.allFinite())
    fail(ErrorCode::NonFiniteObjective, "objective or gradient is non-finite at the starting point");

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  Vector dir(res.x.size());
  std::vector<double> alpha_buf;

  while (true) {
    if (res.x.size() == 0 || res.gradient.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.status = LbfgsStatus::Converged;
      return res;
    }
    if (res.n_evals >= opt.max_evals) {
      res.status = LbfgsStatus::EvalLimit;
      return res;
    }

    // Two-loop recursion.
    dir = -res.gradient;
    const std::size_t h = s_hist.size();
    alpha_buf.assign(h, 0.0);
    for (std::size_t j = h; j-- > 0;) {
      alpha_buf[j] = rho_hist[j] * s_hist[j].dot(dir);
      dir -= alpha_buf[j] * y_hist[j];
    }
    if (h > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t j = 0; j < h; ++j) {
      const double b = rho_hist[j] * y_hist[j].dot(dir);
      dir += (alpha_buf[j] - b) * s_hist[j];
    }
    if (!(res.gradient.dot(dir) < 0.0)) {
      // Not a descent direction: drop the history and use steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -res.gradient;
    }

    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / res.gradient.norm()) : 1.0;
    Searcher searcher(fn, opt, res.n_evals);
    Vector x_new, g_new;
    double f_new = res.value;
    bool accepted = false;
    const bool ok = searcher.search(res.x, res.value, res.gradient, dir, initial_step, x_new, f_new, g_new, accepted);

    if (accepted) {
      Vector s = x_new - res.x;
      Vector y = g_new - res.gradient;
      const double sy = s.dot(y);
      res.x = std::move(x_new);
      res.gradient = std::move(g_new);
      res.value = f_new;
      ++res.iterations;
      if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (s_hist.size() > opt.memory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
    }
    if (!ok) {
      if (res.gradient.lpNorm<Eigen::Infinity>() <= opt.grad_tol)
        res.status = LbfgsStatus::Converged;
      else
        res.status = searcher.budget_exhausted() ? LbfgsStatus::EvalLimit : LbfgsStatus::LineSearchFailed;
      if (res.status == LbfgsStatus::LineSearchFailed && accepted) continue;
      return res;
    }
  }
}

}  // namespace fsc
