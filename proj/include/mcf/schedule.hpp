#pragma once

// Stopping times t_n and resonance-cone widths sigma_n.  Geometric mode
// follows dt_n = xi t_{n-1}, sigma_n = exp(-c dt_n), with the three
// admissibility inequalities on (theta, xi, c) checked at construction:
//   (1)  c < d (1 + xi)
//   (2)  c > theta/(1-theta) (1+xi)/xi^2 d^2 - (1+xi)/xi d
//   (3)  c > (1 + xi) (d - (1-theta) + d theta / xi)

#include <string>
#include <vector>

#include "mcf/num.hpp"

namespace mcf {

enum class ScheduleMode { fixed_gap, geometric, adaptive };

struct Schedule {
    ScheduleMode mode = ScheduleMode::fixed_gap;
    int d = 2;
    double theta = 0.0;   // Diophantine exponent surrogate of Eq. (relation theta epsilon)
    double xi = 1.0;      // geometric gap ratio
    double c = 0.0;       // sigma decay rate
    double phi = 1.0;     // fixed gap / geometric seed t_1
    double sigma0 = 0.1;  // initial cone width
    double a_target = 0.75;  // adaptive mode: bound on measured A_n
    int n_max = 10;

    // materialized sequences (t_0 = 0 first entry; sigmas aligned with times)
    std::vector<big_float> times;
    std::vector<double> sigmas;

    void validate_and_build();  // fills times/sigmas for fixed_gap and geometric
    double hyp_exponent(int n) const;  // phi_n = (1-theta) dt_n - d theta t_{n-1}
    double dt(int n) const;            // t_n - t_{n-1}

    static ScheduleMode mode_from_string(const std::string& s);
    static std::string mode_to_string(ScheduleMode m);
};

}  // namespace mcf
