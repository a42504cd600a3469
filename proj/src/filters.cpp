#include "mouthpipe/filters.hpp"

#include <algorithm>
#include <cmath>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

void FilterParams::validate() const {
  if (!(t_a > 0.0)) throw Error(ErrorCode::OutOfRange, "t_a must be > 0");
  if (k_max < 1) throw Error(ErrorCode::OutOfRange, "k_max must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::OutOfRange, "alpha must be in (0, 1]");
}

namespace {

double accept(FilterState& st, double x) {
  st.accepted[0] = st.accepted[1];
  st.accepted[1] = x;
  if (st.accepted_count < 2) ++st.accepted_count;
  st.rejections = 0;
  return x;
}

}  // namespace

double filter_a_step(FilterState& st, double x, const FilterParams& p) {
  if (st.accepted_count < 2) return accept(st, x);
  const double avg = 0.5 * (st.accepted[0] + st.accepted[1]);
  if (std::abs(x - avg) <= p.t_a) return accept(st, x);
  // Rejected: hold the last accepted output. After k_max consecutive
  // rejections the input is taken as a genuine step.
  if (++st.rejections >= p.k_max) return accept(st, x);
  return st.accepted[1];
}

double filter_b_step(FilterState& st, double x, const FilterParams& p) {
  if (!st.b_primed) {
    st.b_primed = true;
    st.b_last = x;
    return x;
  }
  // Incremental form keeps a constant input an exact fixed point; the clamp
  // keeps rounding from stepping outside [prev, x].
  const double prev = st.b_last;
  const double y = p.alpha >= 1.0 ? x : prev + p.alpha * (x - prev);
  st.b_last = std::clamp(y, std::min(prev, x), std::max(prev, x));
  return st.b_last;
}

double apply_filters(FilterState& st, double x, const FilterParams& p) {
  ++st.samples;
  double y = x;
  if (p.a_enabled) y = filter_a_step(st, y, p);
  if (p.b_enabled) y = filter_b_step(st, y, p);
  return y;
}

}  // namespace mouthpipe
