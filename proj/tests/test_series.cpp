#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mcf/series_ops.hpp"

using namespace mcf;
using namespace mcf::ser;

namespace {

TruncSpec spec2(int K = 12, int D = 3) { return TruncSpec{2, K, D, 0.0}; }

Mode mk(int k0, int k1, int n0 = 0, int n1 = 0) {
    Mode m;
    m.k[0] = k0;
    m.k[1] = k1;
    m.nu[0] = n0;
    m.nu[1] = n1;
    return m;
}

SeriesC single(const TruncSpec& sp, const Mode& m, cplx c) {
    Builder<cplx> b(sp);
    b.add(m, c);
    return b.finish();
}

// random real-symmetric scalar series with given mode count
SeriesC random_real_series(const TruncSpec& sp, int n_modes, double amp, std::mt19937_64& rng,
                           int kmax = 6, int numax = 2) {
    std::uniform_int_distribution<int> kd(-kmax, kmax), nd(0, numax);
    std::uniform_real_distribution<double> cd(-1, 1);
    Builder<cplx> b(sp);
    for (int i = 0; i < n_modes; i++) {
        Mode m = mk(kd(rng), kd(rng), nd(rng), nd(rng));
        cplx c(amp * cd(rng), amp * cd(rng));
        b.add(m, c);
        Mode mneg = m;
        mneg.k[0] = -m.k[0];
        mneg.k[1] = -m.k[1];
        b.add(mneg, std::conj(c));
    }
    return b.finish();
}

}  // namespace

TEST_CASE("weighted norm: zero, single mode, monotonicity") {
    auto sp = spec2();
    SeriesC z;
    z.spec = sp;
    CHECK(weighted_norm(z, Window::vf(1.0, 0.1, 0.1), false) == 0.0);

    // single mode c e^{2 pi i k.x}: |c| e^{rho |k|}, primed adds (1 + 2pi|k|)
    Mode m = mk(3, 4);  // |k|_2 = 5
    auto s = single(sp, m, cplx(0.25, 0));
    double rho = 0.7;
    double expect = 0.25 * std::exp(rho * 5.0);
    CHECK(weighted_norm(s, Window::ham(rho, 0.1), false) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(weighted_norm(s, Window::ham(rho, 0.1), true) ==
          doctest::Approx(expect * (1 + 2 * M_PI * 5)).epsilon(1e-14));

    std::mt19937_64 rng(1);
    auto f = random_real_series(sp, 40, 1.0, rng);
    double n1 = weighted_norm(f, Window::ham(0.9, 0.1), false);
    double n2 = weighted_norm(f, Window::ham(0.6, 0.1), false);
    CHECK(n2 <= n1 * (1 + 1e-12));
}

TEST_CASE("projection algebra on the resonance cone") {
    auto sp = spec2();
    std::mt19937_64 rng(2);
    auto f = random_real_series(sp, 60, 1.0, rng);
    double omega[2] = {0.6180339887498949, 1.0};
    double sigma = 0.1;
    auto pred_minus = [&](const Mode& m) {
        double kw = m.k[0] * omega[0] + m.k[1] * omega[1];
        return std::abs(kw) > sigma * m.k_norm2(2);
    };
    auto [minus, plus] = split(f, std::function<bool(const Mode&)>(pred_minus));
    // plus + minus = f exactly, supports disjoint, idempotent
    auto sum = add(plus, minus);
    CHECK(sum.terms == f.terms);
    auto [mm, mp] = split(minus, std::function<bool(const Mode&)>(pred_minus));
    CHECK(mp.empty());
    CHECK(mm.terms == minus.terms);

    // k = (1,0): |k.omega| = 0.618 > 0.1 -> far from resonance
    CHECK(pred_minus(mk(1, 0)));
    // k = 0 is always resonant
    CHECK(!pred_minus(mk(0, 0)));
}

TEST_CASE("hamiltonian cone: nu >= tau |k| lands resonant") {
    double omega[2] = {0.6180339887498949, 1.0};
    double sigma = 0.1, tau = 1.5;
    auto in_minus = [&](const Mode& m) {
        double kw = m.k[0] * omega[0] + m.k[1] * omega[1];
        double kn = m.k_norm2(2);
        return std::abs(kw) > sigma * kn && m.nu_norm1(2) < tau * kn;
    };
    CHECK(in_minus(mk(1, 0, 0, 0)));
    CHECK(!in_minus(mk(1, 0, 2, 0)));  // |nu| = 2 >= 1.5
}

TEST_CASE("multiplication against direct convolution") {
    auto sp = spec2(8, 3);
    std::mt19937_64 rng(3);
    auto a = random_real_series(sp, 15, 1.0, rng, 3, 1);
    auto b = random_real_series(sp, 15, 1.0, rng, 3, 1);
    auto c = mul(a, b);
    // brute-force a few coefficients
    for (const Mode& target : {mk(0, 0), mk(1, -1), mk(2, 0, 1, 0), mk(-1, 2, 0, 1)}) {
        cplx expect(0, 0);
        for (const auto& [ka, ca] : a.terms)
            for (const auto& [kb, cb] : b.terms) {
                Mode ma = unpack(ka, 2), mb = unpack(kb, 2);
                bool match = true;
                for (int i = 0; i < 2; i++) {
                    if (ma.k[i] + mb.k[i] != target.k[i]) match = false;
                    if (ma.nu[i] + mb.nu[i] != target.nu[i]) match = false;
                }
                if (match) expect += ca * cb;
            }
        const cplx* got = c.find(target);
        cplx gv = got ? *got : cplx(0, 0);
        CHECK(std::abs(gv - expect) < 1e-14);
    }
    // reality is preserved
    CHECK(reality_defect(c) < 1e-14);
}

TEST_CASE("compose with constant shift is a phase factor") {
    auto sp = spec2();
    Mode m = mk(2, -1);
    auto f = single(sp, m, cplx(1.5, 0.25));
    // u = const (c1, c2)
    std::vector<SeriesC> u = {constant(sp, cplx(0.3, 0)), constant(sp, cplx(-0.2, 0))};
    Window w = Window::ham(0.5, 0.1);
    auto g = compose_shift(f, &u, nullptr, 1e-18, nullptr, &w);
    cplx phase = std::exp(cplx(0, 2 * M_PI) * (2.0 * 0.3 + (-1.0) * (-0.2)));
    REQUIRE(g.size() == 1);
    CHECK(std::abs(g.terms[0].second - cplx(1.5, 0.25) * phase) < 1e-12);

    // u = 0 leaves f unchanged
    std::vector<SeriesC> z = {constant(sp, cplx(0, 0)), constant(sp, cplx(0, 0))};
    auto g0 = compose_shift(f, &z, nullptr, 1e-18, nullptr, &w);
    CHECK(g0.terms == f.terms);
}

TEST_CASE("lemma f-f*: composition distance bound") {
    auto sp = spec2(14, 3);
    std::mt19937_64 rng(4);
    double rho = 0.8, rho_p = 0.4;
    Window w_in = Window::ham(rho, 0.1);
    Window w_mid = Window::ham((rho + rho_p) / 2, 0.1);
    Window w_out = Window::ham(rho_p, 0.1);
    for (int trial = 0; trial < 5; trial++) {
        auto f = random_real_series(sp, 25, 1.0, rng, 4, 1);
        auto u_raw = random_real_series(sp, 6, 1e-3, rng, 3, 0);
        std::vector<SeriesC> u = {u_raw, scale(u_raw, cplx(0.5, 0))};
        double un = std::max(weighted_norm(u[0], w_out, false),
                             weighted_norm(u[1], w_out, false));
        REQUIRE(un < (rho - rho_p) / (4 * M_PI));
        TruncationLog log;
        auto fu = compose_shift(f, &u, nullptr, 1e-18, &log, &w_out);
        // |f o U|_{rho'} <= |f|_{(rho+rho')/2}
        CHECK(weighted_norm(fu, w_out, false) <=
              weighted_norm(f, w_mid, false) * (1 + 1e-9) + log.loss + 1e-12);
        // |f o U - f|_{rho'} <= |f|'_{(rho+rho')/2} |u|
        auto diff = sub(fu, f);
        double u1 = weighted_norm(u[0], w_out, false) + weighted_norm(u[1], w_out, false);
        (void)u1;
        double usum = 0;
        {
            // the lemma uses the vector norm of u: sum of component norms
            std::vector<double> each = {weighted_norm(u[0], w_out, false),
                                        weighted_norm(u[1], w_out, false)};
            usum = each[0] + each[1];
        }
        CHECK(weighted_norm(diff, w_out, false) <=
              weighted_norm(f, w_mid, true) * usum * (1 + 1e-9) + log.loss + 1e-12);
    }
}

TEST_CASE("pullback with a unimodular index map") {
    auto sp = spec2();
    // T = [[1,1],[0,1]], T^{-t} k = (k0, k1 - k0)
    auto kmap = [](const Mode& m) -> std::optional<Mode> {
        Mode r = m;
        r.k[0] = m.k[0];
        r.k[1] = m.k[1] - m.k[0];
        return r;
    };
    auto f = single(sp, mk(2, 1, 1, 0), cplx(1, 1));
    auto g = pullback<cplx>(f, kmap, nullptr, nullptr, nullptr);
    REQUIRE(g.size() == 1);
    Mode got = unpack(g.terms[0].first, 2);
    CHECK(got.k[0] == 2);
    CHECK(got.k[1] == -1);
    CHECK(got.nu[0] == 1);
    // identity map keeps f
    auto id = [](const Mode& m) -> std::optional<Mode> { return m; };
    auto h = pullback<cplx>(f, id, nullptr, nullptr, nullptr);
    CHECK(h.terms == f.terms);
}

TEST_CASE("small divisor inverse: y-independent and roundtrip with linear base") {
    auto sp = spec2(10, 3);
    DivisorBase base;
    base.d = 2;
    base.omega = {0.6180339887498949, 1.0, 0, 0};
    // y-independent single mode with X0 = omega: h_k = g_k / (2 pi i k.omega)
    auto g1 = single(sp, mk(1, 0), cplx(2, 0));
    auto h1 = small_divisor_inverse(g1, base, 0.1, 8, 1e-18, nullptr, nullptr);
    REQUIRE(h1.size() == 1);
    cplx expect = cplx(2, 0) / (cplx(0, 2 * M_PI) * base.omega[0]);
    CHECK(std::abs(h1.terms[0].second - expect) < 1e-15);

    // zero in, zero out
    SeriesC z;
    z.spec = sp;
    CHECK(small_divisor_inverse(z, base, 0.1, 8, 1e-18, nullptr, nullptr).empty());

    // roundtrip with y-linear base: D_omega h = g to 1e-12 relative
    base.A[0][0] = 0.21;
    base.A[0][1] = -0.05;
    base.A[1][0] = 0.04;
    base.A[1][1] = 0.17;
    std::mt19937_64 rng(5);
    Window w = Window::vf(0.5, 0.02, 0.05);
    double sigma = 0.1;
    auto far = [&](const Mode& m) {
        double kw = m.k[0] * base.omega[0] + m.k[1] * base.omega[1];
        return m.k_norm1(2) > 0 && std::abs(kw) > sigma * m.k_norm2(2);
    };
    SeriesC g;
    {
        Builder<cplx> b(sp);
        std::uniform_int_distribution<int> kd(-5, 5);
        std::uniform_int_distribution<int> nd(0, 2);
        std::uniform_real_distribution<double> cd(-1, 1);
        int added = 0;
        while (added < 30) {
            Mode m = mk(kd(rng), kd(rng), nd(rng), nd(rng));
            if (!far(m)) continue;
            b.add(m, cplx(cd(rng), cd(rng)) * 1e-4);
            added++;
        }
        g = b.finish();
    }
    auto h = small_divisor_inverse(g, base, sigma, 12, 1e-22, nullptr, &w);
    // apply D_omega: per mode multiply by 2 pi i (k.omega + k.A y)
    SeriesC lin_y;
    {
        Builder<cplx> b(sp);
        b.add(mk(0, 0), cplx(0, 0));
        lin_y = b.finish();
    }
    // D h = sum_j dx(h,j) * X0_j(y) with X0_j(y) = omega_j + (A y)_j
    SeriesC dh;
    dh.spec = sp;
    for (int j = 0; j < 2; j++) {
        SeriesC coef;
        {
            Builder<cplx> b(sp);
            b.add(mk(0, 0), cplx(base.omega[static_cast<size_t>(j)], 0));
            Mode y0 = mk(0, 0, 1, 0), y1 = mk(0, 0, 0, 1);
            b.add(y0, cplx(base.A[static_cast<size_t>(j)][0], 0));
            b.add(y1, cplx(base.A[static_cast<size_t>(j)][1], 0));
            coef = b.finish();
        }
        dh = add(dh, mul(coef, dx(h, j)));
    }
    auto resid = sub(dh, g);
    CHECK(weighted_norm(resid, w, false) <= 1e-12 * weighted_norm(g, w, false) + 1e-25);
}

TEST_CASE("small divisor inverse rejects resonant modes") {
    auto sp = spec2();
    DivisorBase base;
    base.d = 2;
    base.omega = {0.5, 1.0, 0, 0};
    auto g = single(sp, mk(2, -1), cplx(1, 0));  // k.omega = 0: resonant
    CHECK_THROWS_AS(small_divisor_inverse(g, base, 0.1, 8, 1e-18, nullptr, nullptr), McfError);
}

TEST_CASE("exp series identity and reality of real compositions") {
    auto sp = spec2();
    std::mt19937_64 rng(6);
    auto u = random_real_series(sp, 8, 1e-3, rng, 3, 1);
    Window w = Window::ham(0.5, 0.1);
    auto e = exp_series(scale(u, cplx(0, 2 * M_PI)), w, 1e-20, nullptr);
    // evaluate exp identity at a point (truncation to K bounds the accuracy)
    std::array<double, kMaxD> x = {0.13, 0.71, 0, 0};
    std::array<cplx, kMaxD> y = {cplx(0.01, 0), cplx(-0.02, 0), 0, 0};
    cplx uval = eval(u, x, y);
    cplx eval_e = eval(e, x, y);
    CHECK(std::abs(eval_e - std::exp(cplx(0, 2 * M_PI) * uval)) < 1e-10);

    // a real field composed with a real shift stays real
    auto f = random_real_series(sp, 20, 1.0, rng, 4, 1);
    std::vector<SeriesC> shift = {u, scale(u, cplx(-0.5, 0))};
    auto fu = compose_shift(f, &shift, nullptr, 1e-20, nullptr, &w);
    CHECK(reality_defect(fu) < 1e-12);
}

TEST_CASE("derivatives: dx multiplies by 2 pi i k, dy lowers degree") {
    auto sp = spec2();
    auto f = single(sp, mk(3, -2, 2, 1), cplx(1, 0));
    auto fx = dx(f, 0);
    REQUIRE(fx.size() == 1);
    CHECK(std::abs(fx.terms[0].second - cplx(0, 6 * M_PI)) < 1e-15);
    auto fy = dy(f, 0);
    REQUIRE(fy.size() == 1);
    Mode m = unpack(fy.terms[0].first, 2);
    CHECK(m.nu[0] == 1);
    CHECK(std::abs(fy.terms[0].second - cplx(2, 0)) < 1e-15);
}

TEST_CASE("deterministic parallel kernels match serial") {
    auto sp = spec2(16, 3);
    std::mt19937_64 rng(7);
    auto a = random_real_series(sp, 400, 1.0, rng, 8, 2);
    auto b = random_real_series(sp, 400, 1.0, rng, 8, 2);
    kernels::set_parallel(false);
    auto c_serial = mul(a, b);
    double n_serial = weighted_norm(c_serial, Window::ham(0.4, 0.1), true);
    kernels::set_parallel(true);
    auto c_par = mul(a, b);
    double n_par = weighted_norm(c_par, Window::ham(0.4, 0.1), true);
    CHECK(c_serial.terms == c_par.terms);  // bitwise identical
    CHECK(n_serial == n_par);
}
