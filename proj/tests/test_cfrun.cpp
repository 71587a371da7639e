#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mcf/cfrun.hpp"
#include "mcf/cone.hpp"
#include "test_util.hpp"

using namespace mcf;
using namespace mcf::test;

namespace {
struct PrecGuard {
    PrecGuard() { set_precision_bits(256); }
};
PrecGuard guard;

double dbl(const big_float& x) { return static_cast<double>(x); }

Schedule fixed_gap(int d, double phi, double sigma0, double c, int n_max) {
    Schedule s;
    s.mode = ScheduleMode::fixed_gap;
    s.d = d;
    s.phi = phi;
    s.sigma0 = sigma0;
    s.c = c;
    s.n_max = n_max;
    s.validate_and_build();
    return s;
}

// rows of P must be, up to sign, consecutive classical convergents (q_i, -p_i)
bool rows_are_consecutive_convergents(const UnimodularMatrix& P, const ClassicalCF& cf) {
    auto match_index = [&](const big_int& a, const big_int& b) -> int {
        // (a, b) == ±(q_i, -p_i); include the seed convergents 1/0 and 0/1
        if ((a == 0 && (b == 1 || b == -1))) return -1;  // q=0, p=-+1
        if ((b == 0 && (a == 1 || a == -1))) return 0;   // q=1, p=0
        for (size_t i = 0; i < cf.q.size(); i++) {
            if (a == cf.q[i] && b == -cf.p[i]) return static_cast<int>(i) + 1;
            if (a == -cf.q[i] && b == cf.p[i]) return static_cast<int>(i) + 1;
        }
        return -1000;
    };
    int i0 = match_index(P.entries(0, 0), P.entries(0, 1));
    int i1 = match_index(P.entries(1, 0), P.entries(1, 1));
    if (i0 <= -1000 || i1 <= -1000) return false;
    return std::abs(i0 - i1) == 1;
}
}  // namespace

TEST_CASE("golden mean: transfer matrices reproduce classical convergents") {
    big_float g = golden_mean();
    auto cf = ClassicalCF::expand(g, 40);
    auto sched = fixed_gap(2, 0.49, 0.2, 0.0, 20);
    auto run = continued_fraction_run(freq1(g), sched);
    REQUIRE(run.steps.size() >= 16);
    for (size_t n = 1; n < run.steps.size(); n++) {
        CAPTURE(n);
        CHECK(rows_are_consecutive_convergents(run.steps[n].P, cf));
    }
    // the renormalized frequency stays proportional to (golden, 1): alpha^(n)
    // is ±golden or ±1/golden up to the chart; check |alpha| in {g, 1/g, 1-g...}
    for (size_t n = 1; n < run.steps.size(); n++) {
        double a = std::abs(dbl(run.steps[n].alpha_n.alpha[0]));
        bool ok = std::abs(a - 0.6180339887498949) < 1e-9 ||
                  std::abs(a - 1.6180339887498949) < 1e-9 ||
                  std::abs(a - 0.3819660112501051) < 1e-9;
        CHECK(ok);
    }
}

TEST_CASE("sqrt2 - 1: same classical equivalence") {
    // the orbit is periodic with period log(1 + sqrt 2); reduction times are
    // placed mid-window so both minima are consecutive convergents
    big_float a = sqrt2_minus_1();
    auto cf = ClassicalCF::expand(a, 40);
    double period = 0.88137358701954305;
    auto sched = fixed_gap(2, period, 0.2, 0.0, 18);
    for (auto& t : sched.times)
        if (t > 0) t += big_float(0.75 * period);
    auto run = continued_fraction_run(freq1(a), sched);
    REQUIRE(run.steps.size() >= 15);
    for (size_t n = 1; n < run.steps.size(); n++) {
        CAPTURE(n);
        CHECK(rows_are_consecutive_convergents(run.steps[n].P, cf));
    }
}

TEST_CASE("cocycle is exact and the identities hold") {
    auto sched = fixed_gap(3, 1.0, 0.2, 0.0, 12);
    auto run = continued_fraction_run(freq2(golden_mean(), sqrt2_minus_1()), sched);
    REQUIRE(run.steps.size() >= 6);
    UnimodularMatrix acc = UnimodularMatrix::identity(3);
    for (size_t n = 1; n < run.steps.size(); n++) {
        acc = run.steps[n].T * acc;
        CHECK(acc == run.steps[n].P);
        CHECK((run.steps[n].P.det == 1 || run.steps[n].P.det == -1));
        CHECK(dbl(run.steps[n].gamma_n) > 0.0);
    }
}

TEST_CASE("rational frequency is detected") {
    auto sched = fixed_gap(2, 2.0, 0.2, 0.0, 14);
    CFOptions opt;
    opt.rational_delta_floor = 1e-3;
    CHECK_THROWS_WITH_AS(
        [&] { return continued_fraction_run(freq1(big_float(0)), sched, opt); }(),
        doctest::Contains("rational"), McfError);
}

TEST_CASE("merged steps: tiny gaps are skipped, emitted gaps recorded") {
    auto sched = fixed_gap(2, 0.12, 0.2, 0.0, 24);
    auto run = continued_fraction_run(freq1(golden_mean()), sched);
    bool any_merge = false;
    for (size_t n = 1; n < run.steps.size(); n++) {
        if (run.steps[n].merged_gaps > 0) any_merge = true;
        CHECK(dbl(run.steps[n].dt) > 0.11);
    }
    CHECK(any_merge);
}

TEST_CASE("d=3 cubic vector keeps a delta floor (bounded type)") {
    // theta real root of x^3 = x + 1; alpha = (theta - 1, theta^2 - theta)
    big_float th = plastic_number();
    auto alpha = freq2(th - 1, th * th - th);
    auto sched = fixed_gap(3, 0.8, 0.2, 0.0, 20);
    auto run = continued_fraction_run(alpha, sched);
    REQUIRE(run.steps.size() >= 12);
    double floor_v = 1e9;
    for (size_t n = 1; n < run.steps.size(); n++) {
        CHECK(run.steps[n].delta_certified);
        floor_v = std::min(floor_v, dbl(run.steps[n].delta_M));
    }
    CHECK(floor_v > 0.05);
}

TEST_CASE("hyperbolicity: Lemma-hype identity and calibrated contraction") {
    auto sched = fixed_gap(2, 0.7, 0.2, 0.0, 14);
    auto run = continued_fraction_run(freq1(golden_mean()), sched);
    compute_diagnostics(run);
    REQUIRE(run.diag.Lambda > 0);

    std::mt19937_64 rng(5);
    for (size_t n = 1; n < run.steps.size(); n++) {
        const CFStep& st = run.steps[n];
        const CFStep& prev = run.steps[n - 1];
        // xi in omega_perp of the previous step
        Mat<big_float> V = orthogonal_complement_basis(prev.alpha_n.omega);
        Vec<big_float> xi(2);
        for (int i = 0; i < 2; i++) xi[i] = V(i, 0);
        Mat<big_float> Tinv_t = transpose(st.T.inverse().to_float());
        Vec<big_float> lhs = Tinv_t * xi;
        // rhs: e^{-dt} (M^{(n-1)} M^{(n)-1})^t xi
        Mat<big_float> W = transpose(prev.M_red.entries * inverse(st.M_red.entries));
        Vec<big_float> rhs = W * xi;
        big_float scale = exp(-st.dt);
        for (int i = 0; i < 2; i++) CHECK(dbl(abs(lhs[i] - scale * rhs[i])) < 1e-40);
        // contraction within the calibrated envelope
        double contraction = dbl(norm2(lhs));
        CHECK(contraction <= run.diag.Lambda / 2 * std::exp(-st.hyp_exponent) * (1 + 1e-9));
    }
}

TEST_CASE("resonance contraction: identity map, sigma->0 limit, integer modes") {
    auto I = UnimodularMatrix::identity(3);
    auto om = freq2(golden_mean(), sqrt2_minus_1());
    auto cc = resonance_contraction(I, om, 0.3, 64, 8, 99);
    CHECK(cc.A_measured == doctest::Approx(1.0).epsilon(1e-9));

    // sigma -> 0: approaches the omega-perp restricted contraction
    auto sched = fixed_gap(2, 0.7, 0.2, 0.0, 6);
    auto run = continued_fraction_run(freq1(golden_mean()), sched);
    const CFStep& st = run.steps[3];
    const CFStep& prev = run.steps[2];
    auto tiny = resonance_contraction(st.T, prev.alpha_n, 1e-9, 64, 4, 17);
    big_float sv = omega_perp_contraction(st.T, prev.alpha_n);
    CHECK(tiny.A_measured == doctest::Approx(dbl(sv)).epsilon(1e-6));

    CHECK_THROWS_AS(resonance_contraction(I, om, 0.3, 2, 8, 1), McfError);
}

TEST_CASE("diophantine scan: golden markov bound, rational hit, form ordering") {
    auto r = diophantine_scan(freq1(golden_mean()), 0.0, 100);
    CHECK(dbl(r.min_value) > 0.2);           // golden: liminf is 1/sqrt(5) ~ 0.447
    CHECK(dbl(r.min_value) < 0.5);           // admissible C < 1/2
    CHECK(dbl(r.min_value) <= dbl(r.min_value_omega_form));

    auto rq = diophantine_scan(freq2(big_float(1) / 3, golden_mean()), 0.0, 12);
    CHECK(dbl(rq.min_value) < 1e-30);        // rational entry: exact hit at m = (3, 0)

    CHECK_THROWS_AS(diophantine_scan(freq1(golden_mean()), -1.0, 10), McfError);
}

TEST_CASE("geometric schedule validation") {
    Schedule s;
    s.mode = ScheduleMode::geometric;
    s.d = 2;
    s.theta = 0.0;
    s.xi = 1.0;
    s.c = 3.0;  // (1+xi)(d-1) = 2 < c < d(1+xi) = 4
    s.phi = 0.5;
    s.sigma0 = 0.2;
    s.n_max = 8;
    s.validate_and_build();
    REQUIRE(s.times.size() == 9);
    for (int n = 2; n <= 8; n++) {
        double dtn = s.dt(n);
        double tprev = dbl(s.times[static_cast<size_t>(n - 1)]);
        CHECK(dtn == doctest::Approx(s.xi * tprev).epsilon(1e-12));
        CHECK(s.sigmas[static_cast<size_t>(n)] ==
              doctest::Approx(std::exp(-s.c * dtn)).epsilon(1e-12));
    }
    s.c = 5.0;  // violates c < d(1+xi)
    CHECK_THROWS_AS(s.validate_and_build(), McfError);
    s.c = 1.0;  // violates the contraction condition
    CHECK_THROWS_AS(s.validate_and_build(), McfError);
}

TEST_CASE("adaptive schedule reaches its contraction target") {
    Schedule s;
    s.mode = ScheduleMode::adaptive;
    s.d = 2;
    s.phi = 0.5;  // initial gap guess
    s.sigma0 = 0.1;
    s.c = 3.0;
    s.a_target = 0.8;
    s.n_max = 4;
    s.validate_and_build();
    CFOptions opt;
    opt.cone_samples = 48;
    opt.cone_integer_radius = 12;
    auto run = continued_fraction_run(freq1(golden_mean()), s, opt);
    REQUIRE(run.steps.size() == 5);
    for (size_t n = 1; n < run.steps.size(); n++) {
        const CFStep& prev = run.steps[n - 1];
        auto cc = resonance_contraction(run.steps[n].T, prev.alpha_n, prev.sigma_n, 48, 12,
                                        opt.rng_seed + static_cast<unsigned>(n));
        CHECK(cc.A_measured <= s.a_target * (1 + 1e-9));
    }
}
