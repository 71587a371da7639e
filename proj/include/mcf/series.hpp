#pragma once

// Truncated Fourier(x)Taylor series on T^d x C^d, d <= 4.  Modes are packed
// into one 64-bit key (k-major, then nu), so a sorted term vector iterates in
// a deterministic lexicographic order and terms with equal k are contiguous.
//
// Norm conventions: |k| is Euclidean in cone tests and weights, |nu| is the
// 1-norm, coefficient vectors use the 1-norm.  Truncation keeps |k|_1 <= K
// and |nu|_1 <= D; dropped mass is accumulated into a TruncationLog.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "mcf/kernels.hpp"
#include "mcf/num.hpp"

namespace mcf::ser {

using cplx = std::complex<double>;

constexpr int kMaxD = 4;
constexpr int kKBias = 2048;   // k_i in [-2048, 2047]
constexpr int kNuMax = 15;     // nu_i in [0, 15]

struct Mode {
    std::array<int, kMaxD> k{};
    std::array<int, kMaxD> nu{};

    int k_norm1(int d) const {
        int s = 0;
        for (int i = 0; i < d; i++) s += std::abs(k[static_cast<size_t>(i)]);
        return s;
    }
    double k_norm2(int d) const {
        double s = 0;
        for (int i = 0; i < d; i++) {
            double v = k[static_cast<size_t>(i)];
            s += v * v;
        }
        return std::sqrt(s);
    }
    int nu_norm1(int d) const {
        int s = 0;
        for (int i = 0; i < d; i++) s += nu[static_cast<size_t>(i)];
        return s;
    }
    bool k_zero(int d) const {
        for (int i = 0; i < d; i++)
            if (k[static_cast<size_t>(i)] != 0) return false;
        return true;
    }
};

inline bool mode_packable(const Mode& m, int d) {
    for (int i = 0; i < d; i++) {
        if (m.k[static_cast<size_t>(i)] < -kKBias || m.k[static_cast<size_t>(i)] >= kKBias)
            return false;
        if (m.nu[static_cast<size_t>(i)] < 0 || m.nu[static_cast<size_t>(i)] > kNuMax)
            return false;
    }
    return true;
}

inline uint64_t pack(const Mode& m, int d) {
    uint64_t key = 0;
    for (int i = 0; i < d; i++)
        key = (key << 12) | static_cast<uint64_t>(m.k[static_cast<size_t>(i)] + kKBias);
    for (int i = 0; i < d; i++)
        key = (key << 4) | static_cast<uint64_t>(m.nu[static_cast<size_t>(i)]);
    return key;
}

inline Mode unpack(uint64_t key, int d) {
    Mode m;
    for (int i = d - 1; i >= 0; i--) {
        m.nu[static_cast<size_t>(i)] = static_cast<int>(key & 0xF);
        key >>= 4;
    }
    for (int i = d - 1; i >= 0; i--) {
        m.k[static_cast<size_t>(i)] = static_cast<int>(key & 0xFFF) - kKBias;
        key >>= 12;
    }
    return m;
}

// key of the pure-k part (nu = 0): terms with equal k are contiguous because
// nu occupies the low bits
inline uint64_t k_prefix(uint64_t key, int d) { return key >> (4 * d); }

// coefficient of a vector-valued series
struct CVec {
    std::array<cplx, kMaxD> v{};

    CVec() = default;
    cplx& operator[](int i) { return v[static_cast<size_t>(i)]; }
    const cplx& operator[](int i) const { return v[static_cast<size_t>(i)]; }
    CVec& operator+=(const CVec& o) {
        for (int i = 0; i < kMaxD; i++) v[static_cast<size_t>(i)] += o.v[static_cast<size_t>(i)];
        return *this;
    }
    bool operator==(const CVec& o) const { return v == o.v; }
    CVec operator*(const cplx& s) const {
        CVec r;
        for (int i = 0; i < kMaxD; i++) r.v[static_cast<size_t>(i)] = v[static_cast<size_t>(i)] * s;
        return r;
    }
};

inline double coef_norm(const cplx& c) { return std::abs(c); }
inline double coef_norm(const CVec& c) {
    double s = 0;
    for (const auto& x : c.v) s += std::abs(x);
    return s;
}
inline cplx coef_scale(const cplx& c, const cplx& s) { return c * s; }
inline CVec coef_scale(const CVec& c, const cplx& s) { return c * s; }
inline cplx coef_conj(const cplx& c) { return std::conj(c); }
inline CVec coef_conj(const CVec& c) {
    CVec r;
    for (int i = 0; i < kMaxD; i++) r.v[static_cast<size_t>(i)] = std::conj(c.v[static_cast<size_t>(i)]);
    return r;
}

struct TruncSpec {
    int d = 2;
    int K = 24;          // Fourier radius, 1-norm
    int D = 3;           // Taylor degree, 1-norm
    double prune_rel = 0;  // relative coefficient floor (0 = keep everything)

    bool admits(const Mode& m) const {
        return mode_packable(m, d) && m.k_norm1(d) <= K && m.nu_norm1(d) <= D;
    }
    bool operator==(const TruncSpec& o) const {
        return d == o.d && K == o.K && D == o.D;
    }
};

// analyticity window: rho strip plus polydisc radii; vector fields use the
// split (a, b) domain, Hamiltonians a single radius r (stored in a, b unused)
struct Window {
    double rho = 1.0;
    double a = 0.1;
    double b = 0.1;
    bool single_radius = false;

    static Window vf(double rho, double a, double b) { return {rho, a, b, false}; }
    static Window ham(double rho, double r) { return {rho, r, 0.0, true}; }

    double nu_weight(const Mode& m, int d) const {
        if (single_radius) return std::pow(a, m.nu_norm1(d));
        int head = 0;
        for (int i = 0; i < d - 1; i++) head += m.nu[static_cast<size_t>(i)];
        return std::pow(a, head) * std::pow(b, m.nu[static_cast<size_t>(d - 1)]);
    }
    bool fits_inside(const Window& outer) const {
        if (single_radius != outer.single_radius) return false;
        if (rho > outer.rho * (1 + 1e-12)) return false;
        if (a > outer.a * (1 + 1e-12)) return false;
        if (!single_radius && b > outer.b * (1 + 1e-12)) return false;
        return true;
    }
};

// dropped-mass bookkeeping, weighted at the window where the drop happened
struct TruncationLog {
    double loss = 0;
    void add(double coefficient_norm, const Mode& m, int d, const Window& w) {
        loss += coefficient_norm * w.nu_weight(m, d) * std::exp(w.rho * m.k_norm2(d));
    }
};

template <class C>
struct Series {
    TruncSpec spec;
    std::vector<std::pair<uint64_t, C>> terms;  // sorted by key, no zeros

    bool empty() const { return terms.empty(); }
    std::size_t size() const { return terms.size(); }

    const C* find(const Mode& m) const {
        if (!mode_packable(m, spec.d)) return nullptr;
        uint64_t key = pack(m, spec.d);
        auto it = std::lower_bound(terms.begin(), terms.end(), key,
                                   [](const auto& t, uint64_t k) { return t.first < k; });
        if (it != terms.end() && it->first == key) return &it->second;
        return nullptr;
    }

    double max_coef_norm() const {
        double m = 0;
        for (const auto& [k, c] : terms) m = std::max(m, coef_norm(c));
        return m;
    }
};

using SeriesC = Series<cplx>;
using SeriesV = Series<CVec>;

// collects raw contributions, then sorts/combines/truncates deterministically
template <class C>
class Builder {
  public:
    explicit Builder(const TruncSpec& spec) : spec_(spec) {}

    void add(const Mode& m, const C& c) { raw_.emplace_back(m, c); }
    void add_key(uint64_t key, const C& c) { buf_.emplace_back(key, c); }

    Series<C> finish(TruncationLog* log = nullptr, const Window* w = nullptr) {
        Window fallback = Window::ham(0.0, 1.0);
        const Window& win = w ? *w : fallback;
        for (const auto& [m, c] : raw_) {
            if (spec_.admits(m))
                buf_.emplace_back(pack(m, spec_.d), c);
            else if (log)
                log->add(coef_norm(c), m, spec_.d, win);
        }
        raw_.clear();
        kernels::combine_terms(buf_);
        Series<C> s;
        s.spec = spec_;
        s.terms = std::move(buf_);
        buf_.clear();
        if (spec_.prune_rel > 0) prune(s);
        return s;
    }

  private:
    static void prune(Series<C>& s) {
        double floor = s.max_coef_norm() * s.spec.prune_rel;
        if (floor <= 0) return;
        std::size_t w = 0;
        for (std::size_t r = 0; r < s.terms.size(); r++)
            if (coef_norm(s.terms[r].second) >= floor) s.terms[w++] = s.terms[r];
        s.terms.resize(w);
    }

    TruncSpec spec_;
    std::vector<std::pair<Mode, C>> raw_;
    std::vector<std::pair<uint64_t, C>> buf_;
};

}  // namespace mcf::ser
