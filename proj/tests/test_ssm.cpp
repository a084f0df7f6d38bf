#include <doctest.h>

#include <cmath>

#include "eegstream/ssm.hpp"
#include "helpers.hpp"

using namespace eegstream;

namespace {

SsmDims small_dims() { return {8, 2, 4, 4, 2}; }

Vec fold_step(const SsmBlockParams& p, SsmBlockState& state, const std::vector<Vec>& inputs,
              DiscretizationMode mode, std::vector<Vec>* outputs = nullptr) {
    Vec last;
    for (const Vec& u : inputs) {
        last = ssm_step(p, state, u, mode);
        if (outputs) outputs->push_back(last);
    }
    return last;
}

std::vector<Vec> random_inputs(size_t t_len, size_t d, uint64_t seed) {
    CounterRng rng(seed);
    std::vector<Vec> u;
    for (size_t t = 0; t < t_len; ++t) u.push_back(testutil::random_vec(rng, d));
    return u;
}

Vec flat_inputs(const std::vector<Vec>& u) {
    Vec flat;
    for (const Vec& v : u) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
}

}  // namespace

TEST_CASE("discretize_decay endpoints") {
    CHECK(discretize_decay(0.0, 0.3) == 1.0);
    CHECK(discretize_decay(1.0, 0.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(discretize_decay(1e9, 0.0) < 1e-300);
    CHECK_THROWS_AS(discretize_decay(-0.1, 0.0), argument_error);
}

TEST_CASE("decay stays inside (0,1) for positive steps") {
    CounterRng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const double delta = std::exp(rng.uniform(-8.0, 4.0));
        const double a_log = rng.uniform(-7.0, -2.0);
        const double a = discretize_decay(delta, a_log);
        CHECK(a > 0.0);
        CHECK(a < 1.0);
    }
}

TEST_CASE("rotate_pairs identities") {
    Vec v{1.0, 0.0, 2.0, -3.0};
    Vec out = rotate_pairs(v, {0.0, 0.0});
    CHECK(testutil::max_abs_diff(out, v) == 0.0);

    out = rotate_pairs({1.0, 0.0}, {3.14159265358979323846 / 2.0});
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(rotate_pairs({1.0, 2.0, 3.0}, {0.1}), argument_error);
    CHECK_THROWS_AS(rotate_pairs({1.0, 2.0}, {0.1, 0.2}), argument_error);
}

TEST_CASE("rotations compose additively and preserve norm") {
    CounterRng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Vec v = testutil::random_vec(rng, 6);
        Vec t1{rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 6)};
        Vec t2{rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 6)};
        Vec seq = rotate_pairs(rotate_pairs(v, t1), t2);
        Vec sum{t1[0] + t2[0], t1[1] + t2[1], t1[2] + t2[2]};
        Vec once = rotate_pairs(v, sum);
        CHECK(testutil::max_abs_diff(seq, once) < 1e-12);

        double n0 = 0.0, n1 = 0.0;
        for (size_t i = 0; i < 6; ++i) {
            n0 += v[i] * v[i];
            n1 += seq[i] * seq[i];
        }
        CHECK(std::abs(std::sqrt(n0) - std::sqrt(n1)) < 1e-12);
    }
}

TEST_CASE("ssm_step with no input coupling stays at zero") {
    CounterRng rng(31);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    std::fill(p.w_b.a.begin(), p.w_b.a.end(), 0.0);
    std::fill(p.w_xr.a.begin(), p.w_xr.a.end(), 0.0);
    SsmBlockState state(p.dims);
    for (const Vec& u : random_inputs(10, 8, 1)) {
        Vec y = ssm_step(p, state, u, DiscretizationMode::Trapezoidal);
        for (double v : y) CHECK(v == 0.0);
    }
    for (double v : state.s) CHECK(v == 0.0);
}

TEST_CASE("state norm is preserved in the pure-rotation regime") {
    CounterRng rng(37);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    std::fill(p.a_log.begin(), p.a_log.end(), -40.0);  // a_t -> 1
    SsmBlockState state(p.dims);
    Vec u1 = testutil::random_vec(rng, 8);
    ssm_step(p, state, u1, DiscretizationMode::Euler);
    double norm0 = 0.0;
    for (double v : state.s) norm0 += v * v;
    norm0 = std::sqrt(norm0);
    CHECK(norm0 > 0.0);
    Vec zero(8, 0.0);
    for (int t = 0; t < 200; ++t) ssm_step(p, state, zero, DiscretizationMode::Euler);
    double norm1 = 0.0;
    for (double v : state.s) norm1 += v * v;
    norm1 = std::sqrt(norm1);
    CHECK(std::abs(norm1 - norm0) < 1e-10 * std::max(1.0, norm0));
}

TEST_CASE("trapezoidal blend degenerates to Euler when lambda is one") {
    CounterRng rng(41);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    std::fill(p.w_lambda.a.begin(), p.w_lambda.a.end(), 0.0);
    std::fill(p.b_lambda.begin(), p.b_lambda.end(), 500.0);  // sigmoid == 1 in f64
    SsmBlockState se(p.dims), st(p.dims);
    for (const Vec& u : random_inputs(32, 8, 2)) {
        Vec ye = ssm_step(p, se, u, DiscretizationMode::Euler);
        Vec yt = ssm_step(p, st, u, DiscretizationMode::Trapezoidal);
        CHECK(testutil::max_abs_diff(ye, yt) <= 1e-12);
    }
    CHECK(testutil::max_abs_diff(se.s, st.s) <= 1e-12);
}

TEST_CASE("scan of length one equals a single step exactly") {
    for (auto mode : {DiscretizationMode::Euler, DiscretizationMode::Trapezoidal}) {
        CounterRng rng(43);
        SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
        std::vector<Vec> u = random_inputs(1, 8, 3);

        SsmBlockState s1(p.dims);
        // pre-populate a nontrivial state
        for (const Vec& w : random_inputs(5, 8, 4)) ssm_step(p, s1, w, mode);
        SsmBlockState s2 = s1;

        Vec y_step = ssm_step(p, s1, u[0], mode);
        Vec y_scan(8);
        ssm_scan(p, s2, flat_inputs(u).data(), 1, mode, y_scan.data());
        CHECK(testutil::max_abs_diff(y_step, y_scan) == 0.0);
        CHECK(testutil::max_abs_diff(s1.s, s2.s) == 0.0);
        CHECK(testutil::max_abs_diff(s1.theta, s2.theta) == 0.0);
        CHECK(s1.t == s2.t);
    }
}

TEST_CASE("scan equals the folded recurrent step") {
    for (auto mode : {DiscretizationMode::Euler, DiscretizationMode::Trapezoidal}) {
        for (uint64_t seed : {10ull, 11ull, 12ull, 13ull, 14ull, 15ull}) {
            CounterRng rng(seed);
            SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
            for (size_t t_len : {3u, 17u, 64u, 129u, 512u}) {
                std::vector<Vec> u = random_inputs(t_len, 8, seed * 100 + t_len);
                SsmBlockState fold_state(p.dims);
                std::vector<Vec> fold_out;
                fold_step(p, fold_state, u, mode, &fold_out);

                SsmBlockState scan_state(p.dims);
                Vec y(t_len * 8);
                ssm_scan(p, scan_state, flat_inputs(u).data(), t_len, mode, y.data());

                double max_diff = 0.0;
                for (size_t t = 0; t < t_len; ++t)
                    for (size_t i = 0; i < 8; ++i)
                        max_diff = std::max(max_diff, std::abs(y[t * 8 + i] - fold_out[t][i]));
                CHECK(max_diff <= 1e-10);
                CHECK(testutil::max_abs_diff(fold_state.s, scan_state.s) <= 1e-10);
                CHECK(testutil::max_abs_diff(fold_state.u_prev, scan_state.u_prev) <= 1e-12);
                CHECK(testutil::max_abs_diff(fold_state.theta, scan_state.theta) == 0.0);
            }
        }
    }
}

TEST_CASE("scan-fold agreement holds across a thirty-seed sweep") {
    for (uint64_t seed = 100; seed < 130; ++seed) {
        CounterRng rng(seed);
        SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
        const size_t t_len = 512;
        std::vector<Vec> u = random_inputs(t_len, 8, seed + 5000);

        SsmBlockState fold_state(p.dims);
        std::vector<Vec> fold_out;
        fold_step(p, fold_state, u, DiscretizationMode::Trapezoidal, &fold_out);

        SsmBlockState scan_state(p.dims);
        Vec y(t_len * 8);
        ssm_scan(p, scan_state, flat_inputs(u).data(), t_len, DiscretizationMode::Trapezoidal,
                 y.data());
        double max_diff = 0.0;
        for (size_t t = 0; t < t_len; ++t)
            for (size_t i = 0; i < 8; ++i)
                max_diff = std::max(max_diff, std::abs(y[t * 8 + i] - fold_out[t][i]));
        CHECK(max_diff <= 1e-10);
    }
}

TEST_CASE("scan is causal: future perturbations leave the prefix bit-identical") {
    CounterRng rng(53);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    const size_t t_len = 40, cut = 25;
    std::vector<Vec> u = random_inputs(t_len, 8, 9);
    Vec base(t_len * 8), perturbed(t_len * 8);
    {
        SsmBlockState s(p.dims);
        ssm_scan(p, s, flat_inputs(u).data(), t_len, DiscretizationMode::Trapezoidal, base.data());
    }
    u[cut][3] += 10.0;
    u[t_len - 1][0] -= 5.0;
    {
        SsmBlockState s(p.dims);
        ssm_scan(p, s, flat_inputs(u).data(), t_len, DiscretizationMode::Trapezoidal,
                 perturbed.data());
    }
    for (size_t t = 0; t < cut; ++t)
        for (size_t i = 0; i < 8; ++i) CHECK(base[t * 8 + i] == perturbed[t * 8 + i]);
    double tail_diff = 0.0;
    for (size_t i = cut * 8; i < t_len * 8; ++i)
        tail_diff = std::max(tail_diff, std::abs(base[i] - perturbed[i]));
    CHECK(tail_diff > 0.0);
}

TEST_CASE("state footprint does not grow with the step count") {
    CounterRng rng(59);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    SsmBlockState state(p.dims);
    const size_t bytes_fresh = state.s.size() + state.u_prev.size() + state.theta.size();
    for (const Vec& u : random_inputs(1000, 8, 21))
        ssm_step(p, state, u, DiscretizationMode::Trapezoidal);
    const size_t bytes_later = state.s.size() + state.u_prev.size() + state.theta.size();
    CHECK(bytes_fresh == bytes_later);
    CHECK(state.t == 1000);
}

TEST_CASE("scan rejects empty input and bad sizes") {
    CounterRng rng(61);
    SsmBlockParams p = SsmBlockParams::init(small_dims(), rng);
    SsmBlockState s(p.dims);
    Vec y(8);
    CHECK_THROWS_AS(ssm_scan(p, s, y.data(), 0, DiscretizationMode::Euler, y.data()),
                    argument_error);
    Vec bad{std::nan(""), 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(ssm_step(p, s, bad, DiscretizationMode::Euler), numeric_error);
}

TEST_CASE("lti kernel matches the recurrence") {
    // memoryless case
    Vec k0 = lti_kernel_materialize(0.0, {2.0, 1.0}, {0.5, 3.0}, 4);
    CHECK(k0[0] == doctest::Approx(4.0));
    CHECK(k0[1] == 0.0);
    CHECK(k0[3] == 0.0);

    // integrator case: kernel of ones turns convolution into prefix sums
    Vec k1 = lti_kernel_materialize(1.0, {1.0}, {1.0}, 5);
    for (double v : k1) CHECK(v == 1.0);

    CounterRng rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = rng.uniform(0.05, 0.95);
        Vec b = testutil::random_vec(rng, 4);
        Vec c = testutil::random_vec(rng, 4);
        const size_t t_len = 16;
        Vec x = testutil::random_vec(rng, t_len);
        Vec kernel = lti_kernel_materialize(a, b, c, t_len);

        // recurrence oracle
        Vec h(4, 0.0), y_rec(t_len);
        for (size_t t = 0; t < t_len; ++t) {
            for (size_t n = 0; n < 4; ++n) h[n] = a * h[n] + b[n] * x[t];
            y_rec[t] = dot(c.data(), h.data(), 4);
        }
        // convolution
        Vec y_conv(t_len, 0.0);
        for (size_t t = 0; t < t_len; ++t)
            for (size_t k = 0; k <= t; ++k) y_conv[t] += kernel[k] * x[t - k];
        CHECK(testutil::max_abs_diff(y_rec, y_conv) <= 1e-12);
    }
    CHECK_THROWS_AS(lti_kernel_materialize(0.5, {1.0}, {1.0}, 0), argument_error);
}
