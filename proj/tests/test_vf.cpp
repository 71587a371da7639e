#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mcf/renorm_vf.hpp"
#include "test_util.hpp"

using namespace mcf;
using namespace mcf::vf;
using namespace mcf::test;

namespace {
struct PrecGuard {
    PrecGuard() { set_precision_bits(256); }
};
PrecGuard guard;

TruncSpec spec2(int K = 24, int D = 3) { return TruncSpec{2, K, D, 1e-28}; }

Mode mk(int k0, int k1, int n0 = 0, int n1 = 0) {
    Mode m;
    m.k[0] = k0;
    m.k[1] = k1;
    m.nu[0] = n0;
    m.nu[1] = n1;
    return m;
}

BaseField golden_base() {
    BaseField b;
    b.d = 2;
    b.omega = {0.6180339887498949, 1.0, 0, 0};
    b.A = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}};
    return b;
}

// real random perturbation supported on I^- of the given cone, scaled so the
// weighted norm at w equals `target_norm`
SeriesV random_iminus_field(const TruncSpec& sp, const ResonanceCone& cone, const Window& w,
                            double target_norm, int n_modes, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kd(-sp.K / 2, sp.K / 2), nd(0, 2), cdim(0, 1);
    std::uniform_real_distribution<double> cd(-1, 1);
    Builder<CVec> b(sp);
    int added = 0;
    while (added < n_modes) {
        Mode m = mk(kd(rng), kd(rng), nd(rng), nd(rng));
        if (!cone.in_minus(m)) continue;
        CVec c;
        c[cdim(rng)] = cplx(cd(rng), cd(rng));
        b.add(m, c);
        Mode mneg = m;
        mneg.k[0] = -m.k[0];
        mneg.k[1] = -m.k[1];
        b.add(mneg, coef_conj(c));
        added++;
    }
    SeriesV f = b.finish();
    double n0 = weighted_norm(f, w, false);
    return scale(f, cplx(target_norm / n0, 0));
}

}  // namespace

TEST_CASE("eliminate: zero perturbation is a fixed point") {
    VectorField X;
    X.base = golden_base();
    X.f.spec = spec2();
    X.window = Window::vf(1.0, 0.05, 0.1);
    ResonanceCone cone{2, X.base.omega, 0.1, -1};
    auto r = eliminate(X, cone, ElimOptions{});
    CHECK(r.u.empty());
    CHECK(r.residual == 0.0);
    CHECK(r.X_plus.f.empty());
}

TEST_CASE("eliminate: first-order law and quadratic defect scaling") {
    auto sp = spec2();
    VectorField X;
    X.base = golden_base();
    X.window = Window::vf(1.0, 0.05, 0.1);
    ResonanceCone cone{2, X.base.omega, 0.1, -1};

    Mode m = mk(1, 0);  // k.omega = 0.618 > 0.1: far from resonance
    REQUIRE(cone.in_minus(m));

    auto make_f = [&](double eps) {
        Builder<CVec> b(sp);
        CVec c;
        c[0] = cplx(eps, 0);
        c[1] = cplx(0.5 * eps, 0);
        b.add(m, c);
        Mode mneg = mk(-1, 0);
        b.add(mneg, coef_conj(c));
        return b.finish();
    };

    // to first order the shift solves D_omega u = I^- f (orientation fixed by
    // linearizing (I + D_x u)^{-1}(X0 + f o U)); halving eps quarters the defect
    double defects[2];
    for (int pass = 0; pass < 2; pass++) {
        double eps = pass == 0 ? 1e-6 : 5e-7;
        X.f = make_f(eps);
        auto r = eliminate(X, cone, ElimOptions{});
        CHECK(r.residual <= 1e-12 * weighted_norm(X.f, X.window, false));
        SeriesV lin = small_divisor_inverse(X.f, X.base.divisor(), cone.sigma, 8, 1e-24,
                                            nullptr, &X.window);
        defects[pass] = weighted_norm(sub(r.u, lin), X.window, false);
    }
    double ratio = defects[0] / defects[1];
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("eliminate: criterion-5 regime, residual, slope, 42-bound") {
    auto sp = spec2(24, 3);
    VectorField X;
    X.base = golden_base();
    X.window = Window::vf(0.25, 0.02, 0.1);
    ResonanceCone cone{2, X.base.omega, 0.1, -1};
    std::mt19937_64 rng(11);
    X.f = random_iminus_field(sp, cone, X.window, 1e-4, 40, rng);

    auto r = eliminate(X, cone, ElimOptions{});
    double fminus = weighted_norm(X.f, X.window, false);
    CHECK(r.residual <= 1e-12 * fminus);
    CHECK(r.u_norm_primed <= r.bound_42);
    // reality of u
    CHECK(reality_defect(r.u) < 1e-14 * r.u.max_coef_norm() + 1e-30);
    // log-log slope of the Newton defects
    REQUIRE(r.defects.size() >= 2);
    for (std::size_t i = 0; i + 1 < r.defects.size(); i++) {
        if (r.defects[i + 1] < 1e-16 * fminus) break;  // roundoff floor
        double slope = std::log(r.defects[i + 1]) / std::log(r.defects[i]);
        CHECK(slope >= 1.8);
    }
}

TEST_CASE("eliminate: translation equivariance") {
    auto sp = spec2(16, 3);
    VectorField X;
    X.base = golden_base();
    X.window = Window::vf(0.4, 0.02, 0.1);
    ResonanceCone cone{2, X.base.omega, 0.1, -1};
    std::mt19937_64 rng(13);
    X.f = random_iminus_field(sp, cone, X.window, 1e-5, 12, rng);

    ElimOptions opt;
    auto r = eliminate(X, cone, opt);

    std::uniform_real_distribution<double> xd(0, 1);
    for (int trial = 0; trial < 4; trial++) {
        std::array<double, kMaxD> xs{xd(rng), xd(rng), 0, 0};
        // X o R_x: phase-shift every mode
        VectorField Xs = X;
        Xs.f = X.f;
        for (auto& [key, c] : Xs.f.terms) {
            Mode m = unpack(key, 2);
            double ph = m.k[0] * xs[0] + m.k[1] * xs[1];
            c = c * std::polar(1.0, 2 * M_PI * ph);
        }
        auto rs = eliminate(Xs, cone, opt);
        // expect u_s = u o R_x (coefficient-level phase shift)
        SeriesV expect = r.u;
        for (auto& [key, c] : expect.terms) {
            Mode m = unpack(key, 2);
            double ph = m.k[0] * xs[0] + m.k[1] * xs[1];
            c = c * std::polar(1.0, 2 * M_PI * ph);
        }
        double diff = weighted_norm(sub(rs.u, expect), X.window, false);
        CHECK(diff <= 1e-8 * std::max(1e-30, weighted_norm(r.u, X.window, false)));
    }
}

TEST_CASE("renorm pipeline on golden mean: contraction and conjugacy") {
    big_float g = golden_mean();
    Schedule s;
    s.mode = ScheduleMode::geometric;
    s.d = 2;
    s.theta = 0.0;
    s.xi = 1.0;
    s.c = 3.0;
    s.phi = 0.5;
    s.sigma0 = 0.1;
    s.n_max = 8;
    s.validate_and_build();
    auto run = continued_fraction_run(freq1(g), s);
    compute_diagnostics(run);

    auto sp = spec2(24, 3);
    VfRenormConfig cfg;
    cfg.K = 24;
    cfg.D = 3;
    cfg.rho0 = 2.0;
    cfg.n_max = 4;

    // v = omega + 1e-3 (cos 2 pi x1, 0)
    SeriesV v;
    {
        Builder<CVec> b(sp);
        CVec om;
        om[0] = 0.6180339887498949;
        om[1] = 1.0;
        b.add(Mode{}, om);
        CVec c;
        c[0] = cplx(5e-4, 0);
        b.add(mk(1, 0), c);
        b.add(mk(-1, 0), c);
        v = b.finish();
    }

    auto res = renorm_run(v, run, cfg, 6, {0.0});
    REQUIRE(res.states.size() == 5);
    for (std::size_t n = 1; n < res.states.size(); n++) {
        CAPTURE(n);
        // perturbation norms decay by at least 2x per step
        CHECK(res.states[n].perturbation_norm <=
              0.5 * res.states[n - 1].perturbation_norm);
        // elimination leaves no I^- mass
        CHECK(res.states[n].elim_residual <=
              1e-10 * std::max(res.states[n - 1].perturbation_norm, 1e-30));
        // rescale norm bound of the analyticity-improvement lemma
        CHECK(res.states[n].rescale_norm_actual <=
              res.states[n].rescale_norm_bound * (1 + 1e-9) + res.states[n].trunc_loss + 1e-25);
    }
    // conjugacy: h isotopic to identity, residual small at s = 0
    CHECK(res.conjugacy.isotopy_sup < 0.5);
    CHECK(res.conjugacy.residual_max <= 1e-6);
    CHECK(res.conjugacy.reality_defect < 1e-10);
    // p-curve: internal p_n^s converge toward the s-axis; at s=0 p is tiny
    double p0n = 0;
    for (int i = 0; i < 2; i++) p0n += std::abs(res.conjugacy.p0[static_cast<size_t>(i)]);
    CHECK(p0n < 0.05);
}

TEST_CASE("renorm pipeline: v = omega gives the trivial orbit") {
    big_float g = golden_mean();
    Schedule s;
    s.mode = ScheduleMode::geometric;
    s.d = 2;
    s.theta = 0.0;
    s.xi = 1.0;
    s.c = 3.0;
    s.phi = 0.5;
    s.sigma0 = 0.1;
    s.n_max = 6;
    s.validate_and_build();
    auto run = continued_fraction_run(freq1(g), s);
    compute_diagnostics(run);

    auto sp = spec2(24, 3);
    VfRenormConfig cfg;
    cfg.n_max = 3;
    cfg.rho0 = 2.0;
    SeriesV v;
    {
        Builder<CVec> b(sp);
        CVec om;
        om[0] = 0.6180339887498949;
        om[1] = 1.0;
        b.add(Mode{}, om);
        v = b.finish();
    }
    auto res = renorm_run(v, run, cfg, 5, {0.0});
    for (const auto& st : res.states) CHECK(st.perturbation_norm <= 1e-12);
    CHECK(res.conjugacy.isotopy_sup <= 1e-12);
    for (int i = 0; i < 2; i++) CHECK(std::abs(res.conjugacy.p0[static_cast<size_t>(i)]) <= 1e-12);
    CHECK(res.conjugacy.residual_max <= 1e-10);
}

TEST_CASE("affine-parameter invariance: constant perturbations are absorbed") {
    big_float g = golden_mean();
    Schedule s;
    s.mode = ScheduleMode::geometric;
    s.d = 2;
    s.theta = 0.0;
    s.xi = 1.0;
    s.c = 3.0;
    s.phi = 0.5;
    s.sigma0 = 0.1;
    s.n_max = 5;
    s.validate_and_build();
    auto run = continued_fraction_run(freq1(g), s);
    compute_diagnostics(run);

    auto sp = spec2(24, 3);
    VfRenormConfig cfg;
    cfg.n_max = 2;
    cfg.rho0 = 2.0;
    SeriesV v;
    {
        Builder<CVec> b(sp);
        CVec om;
        om[0] = 0.6180339887498949 + 3e-3;  // constant offset only
        om[1] = 1.0 - 2e-3;
        b.add(Mode{}, om);
        v = b.finish();
    }
    auto res = renorm_run(v, run, cfg, 5, {0.0});
    // constants are eaten by the parameter map: zero perturbation after step 1
    for (std::size_t n = 1; n < res.states.size(); n++)
        CHECK(res.states[n].perturbation_norm <= 1e-14);
    // and the recovered parameter moves the field back onto (1+s) omega
    CHECK(res.conjugacy.residual_max <= 1e-10);
}
