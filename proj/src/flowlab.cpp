#include "eegstream/flowlab.hpp"

#include <algorithm>
#include <cmath>

namespace eegstream {

namespace {

// Cash-Karp embedded RK4(5) coefficients.
constexpr double kA2 = 1.0 / 5.0;
constexpr double kA3[2] = {3.0 / 40.0, 9.0 / 40.0};
constexpr double kA4[3] = {3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0};
constexpr double kA5[4] = {-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0};
constexpr double kA6[5] = {1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0,
                           44275.0 / 110592.0, 253.0 / 4096.0};
constexpr double kB5[6] = {37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0};
constexpr double kB4[6] = {2825.0 / 27648.0, 0.0,           18575.0 / 48384.0,
                           13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0};

double hermite_crossing(double t0, double w0, double f0, double t1, double w1, double f1,
                        double target) {
    // cubic Hermite on [t0, t1]; bisection for w(t) = target
    const double h = t1 - t0;
    auto eval = [&](double s) {
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * w0 + h10 * h * f0 + h01 * w1 + h11 * h * f1;
    };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (eval(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return t0 + 0.5 * (lo + hi) * h;
}

}  // namespace

void FlowLabSpec::validate() const {
    check(depth >= 2, "flowlab: depth must be >= 2");
    check(rho > 0.0 && rho <= 1.0, "flowlab: rho must be in (0, 1]");
    check(lambda > 0.0, "flowlab: lambda must be > 0");
    check(init_scale > 0.0, "flowlab: init scale must be > 0");
    check(horizon > 0.0 && rtol > 0.0 && atol > 0.0, "flowlab: bad integrator settings");
}

double FlowLabSpec::fixed_point() const {
    const double l = static_cast<double>(depth);
    return objective == FlowObjective::MAE ? std::pow(rho, l / (l + 1.0)) : std::pow(rho, l);
}

FlowObjective flow_objective_from_string(const std::string& name) {
    if (name == "mae" || name == "MAE") return FlowObjective::MAE;
    if (name == "jepa" || name == "JEPA") return FlowObjective::JEPA;
    throw argument_error("flowlab: unknown objective " + name);
}

FlowResult deep_linear_flow(const FlowLabSpec& spec) {
    spec.validate();
    const double l = static_cast<double>(spec.depth);
    const double sigma2 = spec.lambda / spec.rho;
    const double in_exp = (spec.objective == FlowObjective::MAE) ? (2.0 * l - 1.0) / l
                                                                 : (3.0 * l - 1.0) / l;
    const double gap_exp = (spec.objective == FlowObjective::MAE) ? (l + 1.0) / l : 1.0 / l;
    auto f = [&](double w) {
        return l * sigma2 * std::pow(w, in_exp) * (spec.rho - std::pow(w, gap_exp));
    };

    FlowResult res;
    res.w_inf = spec.fixed_point();
    const double escape_target = 0.5 * res.w_inf;

    double t = 0.0, w = spec.init_scale;
    if (w >= escape_target) {
        res.escaped = true;
        res.escape_time = 0.0;
    }
    res.t.push_back(t);
    res.w.push_back(w);

    double fw = f(w);
    double h = (std::abs(fw) > 0.0) ? 0.01 * w / std::abs(fw) : 1.0;
    const size_t max_steps = 2000000;
    const size_t max_points = 4096;
    size_t thin_stride = 1, since_stored = 0;

    while (t < spec.horizon) {
        if (res.steps++ > max_steps)
            throw numeric_error("flowlab: integrator exceeded step budget at t=" +
                                std::to_string(t) + " w=" + std::to_string(w));
        const double k1 = fw;
        const double k2 = f(w + h * kA2 * k1);
        const double k3 = f(w + h * (kA3[0] * k1 + kA3[1] * k2));
        const double k4 = f(w + h * (kA4[0] * k1 + kA4[1] * k2 + kA4[2] * k3));
        const double k5 = f(w + h * (kA5[0] * k1 + kA5[1] * k2 + kA5[2] * k3 + kA5[3] * k4));
        const double k6 =
            f(w + h * (kA6[0] * k1 + kA6[1] * k2 + kA6[2] * k3 + kA6[3] * k4 + kA6[4] * k5));
        const double w5 =
            w + h * (kB5[0] * k1 + kB5[2] * k3 + kB5[3] * k4 + kB5[5] * k6);
        const double w4 = w + h * (kB4[0] * k1 + kB4[2] * k3 + kB4[3] * k4 + kB4[4] * k5 +
                                   kB4[5] * k6);
        const double err = std::abs(w5 - w4);
        const double tol = spec.atol + spec.rtol * std::max(std::abs(w), std::abs(w5));

        if (!std::isfinite(w5))
            throw numeric_error("flowlab: non-finite state at t=" + std::to_string(t) +
                                " w=" + std::to_string(w) + " h=" + std::to_string(h));
        if (err <= tol) {
            const double t_new = t + h;
            const double f_new = f(w5);
            if (!res.escaped && w < escape_target && w5 >= escape_target) {
                res.escaped = true;
                res.escape_time = hermite_crossing(t, w, fw, t_new, w5, f_new, escape_target);
            }
            t = t_new;
            w = w5;
            fw = f_new;
            if (++since_stored >= thin_stride) {
                since_stored = 0;
                res.t.push_back(t);
                res.w.push_back(w);
                if (res.t.size() >= max_points) {
                    Vec tt, ww;
                    for (size_t i = 0; i < res.t.size(); i += 2) {
                        tt.push_back(res.t[i]);
                        ww.push_back(res.w[i]);
                    }
                    res.t.swap(tt);
                    res.w.swap(ww);
                    thin_stride *= 2;
                }
            }
            if (std::abs(w - res.w_inf) <= 1e-9 * std::max(res.w_inf, 1e-300)) {
                res.converged = true;
                break;
            }
        }
        const double grow = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        if (t + h > spec.horizon) h = spec.horizon - t;
        if (h <= 0.0) break;
    }
    if (res.t.back() != t) {
        res.t.push_back(t);
        res.w.push_back(w);
    }
    res.terminal_w = w;
    return res;
}

}  // namespace eegstream
