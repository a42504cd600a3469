#pragma once

#include <array>
#include <cstdint>

namespace mouthpipe {

/// Filter A rejects spikes against the mean of the two latest accepted
/// outputs; Filter B is an exponential moving average. Either can be toggled
/// independently while running.
struct FilterParams {
  bool a_enabled = true;
  double t_a = 20.0;
  int k_max = 5;
  bool b_enabled = true;
  double alpha = 0.5;

  void validate() const;
};

struct FilterState {
  // Filter A
  std::array<double, 2> accepted{};  // [0] = y[t-2], [1] = y[t-1]
  int accepted_count = 0;            // saturates at 2
  int rejections = 0;
  // Filter B
  bool b_primed = false;
  double b_last = 0.0;
  std::uint64_t samples = 0;

  void reset_a() {
    accepted = {};
    accepted_count = 0;
    rejections = 0;
  }
  void reset_b() {
    b_primed = false;
    b_last = 0.0;
  }
};

double filter_a_step(FilterState& st, double x, const FilterParams& p);
double filter_b_step(FilterState& st, double x, const FilterParams& p);
/// A then B, each only when enabled.
double apply_filters(FilterState& st, double x, const FilterParams& p);

}  // namespace mouthpipe
