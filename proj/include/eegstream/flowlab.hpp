#pragma once

#include <cstdint>
#include <string>

#include "eegstream/tensor.hpp"

namespace eegstream {

enum class FlowObjective : uint8_t { MAE = 0, JEPA = 1 };

// Per-direction scalar gradient flow of the deep-linear objectives under the
// balanced-layer reduction. With sigma^2 = lambda / rho:
//   MAE:  dw/dt = L sigma^2 w^{(2L-1)/L} (rho - w^{(L+1)/L})
//   JEPA: dw/dt = L sigma^2 w^{(3L-1)/L} (rho - w^{1/L})
// Fixed points: rho^{L/(L+1)} (MAE) and rho^L (JEPA).
struct FlowLabSpec {
    size_t depth = 2;        // L >= 2
    double rho = 0.5;        // regression coefficient lambda / sigma^2, in (0, 1]
    double lambda = 1.0;     // cross-covariance scale
    double init_scale = 1e-6;  // w(0)
    FlowObjective objective = FlowObjective::MAE;
    double horizon = 1e18;   // integration time cap
    double rtol = 1e-10;
    double atol = 1e-30;

    void validate() const;
    double fixed_point() const;
};

struct FlowResult {
    Vec t;  // accepted step times (thinned)
    Vec w;
    double terminal_w = 0.0;
    double w_inf = 0.0;        // closed form
    double escape_time = 0.0;  // first t with w >= 0.5 * w_inf (0 if already above)
    bool escaped = false;
    bool converged = false;
    size_t steps = 0;
};

// Adaptive embedded Runge-Kutta (Cash-Karp 4/5) integration of the flow,
// with cubic-Hermite interpolation of the escape crossing.
FlowResult deep_linear_flow(const FlowLabSpec& spec);

FlowObjective flow_objective_from_string(const std::string& name);

}  // namespace eegstream
