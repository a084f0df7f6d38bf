#include "eegstream/ssm.hpp"

#include <cmath>

#include "eegstream/kernels.hpp"

namespace eegstream {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_2pi(double x) {
    x = std::fmod(x, kTwoPi);
    if (x < 0.0) x += kTwoPi;
    if (x >= kTwoPi) x = 0.0;  // rounding of the addition can land exactly on 2pi
    return x;
}

void init_uniform_scaled(Mat& m, CounterRng& rng) {
    const double bound = std::sqrt(3.0 / static_cast<double>(m.cols));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

// Rotate the N/2 row pairs of an N x R column stack by -theta, given
// cos(theta), sin(theta) per pair. Shared by the step and scan paths so the
// two stay bit-identical outside the scan's carry reassociation.
void rotate_columns_neg(const double* src, const double* cosv, const double* sinv,
                        size_t pairs, size_t r, double* dst) {
    for (size_t j = 0; j < pairs; ++j) {
        const double c = cosv[j], s = sinv[j];
        const double* r0 = src + (2 * j) * r;
        const double* r1 = src + (2 * j + 1) * r;
        double* o0 = dst + (2 * j) * r;
        double* o1 = dst + (2 * j + 1) * r;
        for (size_t k = 0; k < r; ++k) {
            o0[k] = c * r0[k] + s * r1[k];
            o1[k] = -s * r0[k] + c * r1[k];
        }
    }
}

// U = delta * (B~ X), B~: N x R, X: R x P_h -> U: N x P_h.
void input_contribution(const double* b_rot, const double* x, double delta, size_t n,
                        size_t r, size_t ph, double* u) {
    matmul(b_rot, x, u, n, r, ph);
    const size_t total = n * ph;
    for (size_t i = 0; i < total; ++i) u[i] *= delta;
}

// Y = C~^T S, C~: N x R, S: N x P_h -> Y: R x P_h.
void readout(const double* c_rot, const double* s, size_t n, size_t r, size_t ph, double* y) {
    const size_t total = r * ph;
    for (size_t i = 0; i < total; ++i) y[i] = 0.0;
    for (size_t nn = 0; nn < n; ++nn) {
        const double* cr = c_rot + nn * r;
        const double* sr = s + nn * ph;
        for (size_t rr = 0; rr < r; ++rr) {
            const double cv = cr[rr];
            double* yr = y + rr * ph;
            for (size_t p = 0; p < ph; ++p) yr[p] += cv * sr[p];
        }
    }
}

struct StepWork {
    Vec u_in, b_raw, c_raw, gate, b_rot, c_rot, x_none, u_t, v_t, y_head, y_inner;
    Vec cosv, sinv;

    void resize(const SsmDims& d) {
        u_in.resize(d.d_model);
        b_raw.resize(d.d_state * d.rank);
        c_raw.resize(d.d_state * d.rank);
        gate.resize(d.rank * d.d_head);
        b_rot.resize(d.d_state * d.rank);
        c_rot.resize(d.d_state * d.rank);
        u_t.resize(d.d_state * d.d_head);
        v_t.resize(d.d_state * d.d_head);
        y_head.resize(d.rank * d.d_head);
        y_inner.resize(d.inner());
        cosv.resize(d.pairs());
        sinv.resize(d.pairs());
    }
};

thread_local StepWork g_work;

void check_finite_input(const Vec& u) {
    for (double v : u)
        if (!std::isfinite(v)) throw numeric_error("ssm: non-finite input");
}

}  // namespace

void SsmDims::validate() const {
    check(d_model > 0 && heads > 0 && d_state > 0 && d_head > 0 && rank >= 1,
          "ssm dims: all dimensions must be positive");
    check(d_state % 2 == 0, "ssm dims: d_state must be even");
    check(d_model == heads * d_head, "ssm dims: d_model != heads * d_head");
}

SsmBlockParams SsmBlockParams::init(const SsmDims& dims, CounterRng& rng) {
    dims.validate();
    SsmBlockParams p;
    p.dims = dims;
    p.a_log.resize(dims.heads);
    for (double& v : p.a_log) v = rng.uniform(std::log(0.001), std::log(0.1));
    p.omega = Mat(dims.heads, dims.pairs());
    for (double& v : p.omega.a) v = rng.uniform(0.0, 3.14159265358979323846 / 8.0);
    p.w_delta = Mat(dims.heads, dims.d_model);
    p.w_lambda = Mat(dims.heads, dims.d_model);
    p.b_delta.assign(dims.heads, 0.0);
    p.b_lambda.assign(dims.heads, 0.0);
    p.w_b = Mat(dims.d_state * dims.rank, dims.d_model);
    p.w_c = Mat(dims.d_state * dims.rank, dims.d_model);
    p.w_in = Mat(dims.d_model, dims.d_model);
    p.w_xr = Mat(dims.rank * dims.d_head, dims.d_head);
    p.w_gate = Mat(dims.rank * dims.d_head, dims.d_model);
    p.w_out = Mat(dims.d_model, dims.inner());
    for (Mat* m : {&p.w_delta, &p.w_lambda, &p.w_b, &p.w_c, &p.w_in, &p.w_xr, &p.w_gate, &p.w_out})
        init_uniform_scaled(*m, rng);
    return p;
}

void SsmBlockState::reset() {
    std::fill(s.begin(), s.end(), 0.0);
    std::fill(u_prev.begin(), u_prev.end(), 0.0);
    std::fill(theta.begin(), theta.end(), 0.0);
    t = 0;
}

double discretize_decay(double delta, double a_log) {
    check(delta >= 0.0, "discretize_decay: delta must be >= 0");
    return std::exp(-delta * std::exp(a_log));
}

Vec rotate_pairs(const Vec& v, const Vec& theta) {
    check(v.size() % 2 == 0, "rotate_pairs: vector length must be even");
    check(theta.size() == v.size() / 2, "rotate_pairs: need one angle per pair");
    Vec out(v.size());
    for (size_t j = 0; j < theta.size(); ++j) {
        const double c = std::cos(theta[j]);
        const double s = std::sin(theta[j]);
        out[2 * j] = c * v[2 * j] - s * v[2 * j + 1];
        out[2 * j + 1] = s * v[2 * j] + c * v[2 * j + 1];
    }
    return out;
}

Vec ssm_step(const SsmBlockParams& p, SsmBlockState& state, const Vec& u,
             DiscretizationMode mode) {
    const SsmDims& d = p.dims;
    check(u.size() == d.d_model, "ssm_step: input dim mismatch");
    check(state.s.size() == d.heads * d.d_state * d.d_head, "ssm_step: state dim mismatch");
    check_finite_input(u);

    StepWork& w = g_work;
    w.resize(d);

    matvec(p.w_in, u.data(), w.u_in.data());
    matvec(p.w_b, u.data(), w.b_raw.data());
    matvec(p.w_c, u.data(), w.c_raw.data());
    matvec(p.w_gate, u.data(), w.gate.data());
    for (double& g : w.gate) g = silu(g);

    const size_t sh = d.d_state * d.d_head;  // per-head state size
    const size_t rp = d.rank * d.d_head;
    Vec x_h(rp);

    for (size_t h = 0; h < d.heads; ++h) {
        const double delta = softplus(dot(p.w_delta.row(h), u.data(), d.d_model) + p.b_delta[h]);
        const double a = discretize_decay(delta, p.a_log[h]);

        double* theta_h = state.theta.data() + h * d.pairs();
        const double* omega_h = p.omega.row(h);
        for (size_t j = 0; j < d.pairs(); ++j) {
            theta_h[j] = wrap_2pi(theta_h[j] + delta * omega_h[j]);
            w.cosv[j] = std::cos(theta_h[j]);
            w.sinv[j] = std::sin(theta_h[j]);
        }

        rotate_columns_neg(w.b_raw.data(), w.cosv.data(), w.sinv.data(), d.pairs(), d.rank,
                           w.b_rot.data());
        // X_h = rank lift of this head's slice of the inner projection
        matvec(p.w_xr, w.u_in.data() + h * d.d_head, x_h.data());
        input_contribution(w.b_rot.data(), x_h.data(), delta, d.d_state, d.rank, d.d_head,
                           w.u_t.data());

        double* s_h = state.s.data() + h * sh;
        double* uprev_h = state.u_prev.data() + h * sh;
        if (mode == DiscretizationMode::Euler) {
            for (size_t i = 0; i < sh; ++i) s_h[i] = a * s_h[i] + w.u_t[i];
        } else {
            const double lam =
                sigmoid(dot(p.w_lambda.row(h), u.data(), d.d_model) + p.b_lambda[h]);
            const double ca = (1.0 - lam) * a;
            for (size_t i = 0; i < sh; ++i) w.v_t[i] = lam * w.u_t[i] + ca * uprev_h[i];
            for (size_t i = 0; i < sh; ++i) s_h[i] = a * s_h[i] + w.v_t[i];
            for (size_t i = 0; i < sh; ++i) uprev_h[i] = w.u_t[i];
        }

        rotate_columns_neg(w.c_raw.data(), w.cosv.data(), w.sinv.data(), d.pairs(), d.rank,
                           w.c_rot.data());
        readout(w.c_rot.data(), s_h, d.d_state, d.rank, d.d_head, w.y_head.data());
        double* yi = w.y_inner.data() + h * rp;
        for (size_t i = 0; i < rp; ++i) yi[i] = w.y_head[i] * w.gate[i];
    }

    state.t += 1;
    Vec y(d.d_model);
    matvec(p.w_out, w.y_inner.data(), y.data());
    return y;
}

void ssm_scan(const SsmBlockParams& p, SsmBlockState& state, const double* u, size_t t_len,
              DiscretizationMode mode, double* y_out, const SsmScanOptions& opt) {
    const SsmDims& d = p.dims;
    check(t_len >= 1, "ssm_scan: need at least one step");
    check(opt.chunk >= 1, "ssm_scan: chunk must be >= 1");
    for (size_t t = 0; t < t_len; ++t)
        for (size_t i = 0; i < d.d_model; ++i)
            if (!std::isfinite(u[t * d.d_model + i])) throw numeric_error("ssm_scan: non-finite input");

    const size_t sh = d.d_state * d.d_head;
    const size_t rp = d.rank * d.d_head;
    const size_t nr = d.d_state * d.rank;

    // Per-step projections, shared across heads.
    Vec u_in(t_len * d.d_model), b_raw(t_len * nr), c_raw(t_len * nr), gate(t_len * rp);
    for (size_t t = 0; t < t_len; ++t) {
        const double* ut = u + t * d.d_model;
        matvec(p.w_in, ut, u_in.data() + t * d.d_model);
        matvec(p.w_b, ut, b_raw.data() + t * nr);
        matvec(p.w_c, ut, c_raw.data() + t * nr);
        double* g = gate.data() + t * rp;
        matvec(p.w_gate, ut, g);
        for (size_t i = 0; i < rp; ++i) g[i] = silu(g[i]);
    }

    Vec y_inner(t_len * d.inner());
    Vec deltav(t_len), av(t_len), lamv(t_len);
    Vec cosv(t_len * d.pairs()), sinv(t_len * d.pairs());
    Vec b_rot(nr), c_rot(nr), x_h(rp), u_cur(sh), u_last(sh), v_t(sh);
    Vec local(sh), s_full(sh), y_head(rp);

    for (size_t h = 0; h < d.heads; ++h) {
        // Per-head scalars and the sequential phase accumulation (identical to
        // the step path so trig arguments match bit-for-bit).
        double* theta_h = state.theta.data() + h * d.pairs();
        const double* omega_h = p.omega.row(h);
        for (size_t t = 0; t < t_len; ++t) {
            const double* ut = u + t * d.d_model;
            const double delta =
                softplus(dot(p.w_delta.row(h), ut, d.d_model) + p.b_delta[h]);
            deltav[t] = delta;
            av[t] = discretize_decay(delta, p.a_log[h]);
            if (mode == DiscretizationMode::Trapezoidal)
                lamv[t] = sigmoid(dot(p.w_lambda.row(h), ut, d.d_model) + p.b_lambda[h]);
            for (size_t j = 0; j < d.pairs(); ++j) {
                theta_h[j] = wrap_2pi(theta_h[j] + delta * omega_h[j]);
                cosv[t * d.pairs() + j] = std::cos(theta_h[j]);
                sinv[t * d.pairs() + j] = std::sin(theta_h[j]);
            }
        }

        double* s_carry = state.s.data() + h * sh;
        double* uprev_h = state.u_prev.data() + h * sh;
        for (size_t i = 0; i < sh; ++i) u_last[i] = uprev_h[i];

        for (size_t c0 = 0; c0 < t_len; c0 += opt.chunk) {
            const size_t c1 = std::min(c0 + opt.chunk, t_len);
            std::fill(local.begin(), local.end(), 0.0);
            double prefix = 1.0;
            for (size_t t = c0; t < c1; ++t) {
                rotate_columns_neg(b_raw.data() + t * nr, cosv.data() + t * d.pairs(),
                                   sinv.data() + t * d.pairs(), d.pairs(), d.rank, b_rot.data());
                matvec(p.w_xr, u_in.data() + t * d.d_model + h * d.d_head, x_h.data());
                input_contribution(b_rot.data(), x_h.data(), deltav[t], d.d_state, d.rank,
                                   d.d_head, u_cur.data());
                if (mode == DiscretizationMode::Euler) {
                    for (size_t i = 0; i < sh; ++i) v_t[i] = u_cur[i];
                } else {
                    const double lam = lamv[t];
                    const double ca = (1.0 - lam) * av[t];
                    for (size_t i = 0; i < sh; ++i)
                        v_t[i] = lam * u_cur[i] + ca * u_last[i];
                    std::swap(u_last, u_cur);
                }
                const double a = av[t];
                for (size_t i = 0; i < sh; ++i) local[i] = a * local[i] + v_t[i];
                prefix *= a;
                for (size_t i = 0; i < sh; ++i) s_full[i] = prefix * s_carry[i] + local[i];

                rotate_columns_neg(c_raw.data() + t * nr, cosv.data() + t * d.pairs(),
                                   sinv.data() + t * d.pairs(), d.pairs(), d.rank, c_rot.data());
                readout(c_rot.data(), s_full.data(), d.d_state, d.rank, d.d_head, y_head.data());
                double* yi = y_inner.data() + t * d.inner() + h * rp;
                const double* g = gate.data() + t * rp;
                for (size_t i = 0; i < rp; ++i) yi[i] = y_head[i] * g[i];
            }
            for (size_t i = 0; i < sh; ++i) s_carry[i] = s_full[i];
        }
        if (mode == DiscretizationMode::Trapezoidal)
            for (size_t i = 0; i < sh; ++i) uprev_h[i] = u_last[i];
    }

    for (size_t t = 0; t < t_len; ++t)
        matvec(p.w_out, y_inner.data() + t * d.inner(), y_out + t * d.d_model);
    state.t += t_len;
}

Vec lti_kernel_materialize(double a, const Vec& b, const Vec& c, size_t t_len) {
    check(t_len >= 1, "lti_kernel_materialize: T must be >= 1");
    check(b.size() == c.size(), "lti_kernel_materialize: B/C length mismatch");
    const double cb = dot(c.data(), b.data(), b.size());
    Vec k(t_len);
    double ak = 1.0;
    for (size_t t = 0; t < t_len; ++t) {
        k[t] = cb * ak;
        ak *= a;
    }
    return k;
}

}  // namespace eegstream
