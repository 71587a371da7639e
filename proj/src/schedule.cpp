#include "mcf/schedule.hpp"

#include <cmath>

namespace mcf {

ScheduleMode Schedule::mode_from_string(const std::string& s) {
    if (s == "fixed-gap") return ScheduleMode::fixed_gap;
    if (s == "geometric") return ScheduleMode::geometric;
    if (s == "adaptive") return ScheduleMode::adaptive;
    throw McfError(ErrorCode::config_error, "unknown schedule mode '" + s + "'");
}

std::string Schedule::mode_to_string(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::fixed_gap: return "fixed-gap";
        case ScheduleMode::geometric: return "geometric";
        case ScheduleMode::adaptive:  return "adaptive";
    }
    return "?";
}

void Schedule::validate_and_build() {
    if (n_max < 1) throw McfError(ErrorCode::schedule_error, "n_max must be >= 1");
    if (phi <= 0) throw McfError(ErrorCode::schedule_error, "phi must be > 0");
    if (sigma0 <= 0 || sigma0 >= 1)
        throw McfError(ErrorCode::schedule_error, "sigma0 must lie in (0,1)");
    if (theta < 0 || theta >= 1) throw McfError(ErrorCode::schedule_error, "theta in [0,1)");

    times.clear();
    sigmas.clear();
    times.push_back(big_float(0));
    sigmas.push_back(sigma0);

    if (mode == ScheduleMode::fixed_gap) {
        if (c < 0) throw McfError(ErrorCode::schedule_error, "c must be >= 0");
        for (int n = 1; n <= n_max; n++) {
            times.push_back(big_float(phi) * n);
            double s = sigma0 * std::exp(-c * phi * n);
            if (s <= 0) throw McfError(ErrorCode::schedule_error, "sigma underflow");
            sigmas.push_back(s);
        }
        return;
    }

    if (mode == ScheduleMode::geometric) {
        if (xi <= 0) throw McfError(ErrorCode::schedule_error, "xi must be > 0");
        double dd = d;
        double cond1 = dd * (1 + xi);
        double cond2 = theta / (1 - theta) * (1 + xi) / (xi * xi) * dd * dd - (1 + xi) / xi * dd;
        double cond3 = (1 + xi) * (dd - (1 - theta) + dd * theta / xi);
        if (!(c < cond1))
            throw McfError(ErrorCode::schedule_error, "geometric schedule violates c < d(1+xi)");
        if (!(c > cond2))
            throw McfError(ErrorCode::schedule_error,
                           "geometric schedule violates the Theta-positivity condition on c");
        if (!(c > cond3))
            throw McfError(ErrorCode::schedule_error,
                           "geometric schedule violates the contraction condition on c");
        // t_1 = phi seed; dt_n = xi t_{n-1} thereafter
        big_float t = big_float(phi);
        times.push_back(t);
        sigmas.push_back(std::exp(-c * phi));
        for (int n = 2; n <= n_max; n++) {
            big_float dtn = big_float(xi) * t;
            t += dtn;
            times.push_back(t);
            double s = std::exp(-c * static_cast<double>(dtn));
            if (s <= 0) throw McfError(ErrorCode::schedule_error, "sigma underflow");
            sigmas.push_back(s);
        }
        return;
    }

    // adaptive: times are produced during the run; only the seed is placed here
    if (a_target <= 0 || a_target >= 1)
        throw McfError(ErrorCode::schedule_error, "a_target must lie in (0,1)");
}

double Schedule::dt(int n) const {
    return static_cast<double>(times.at(static_cast<size_t>(n)) -
                               times.at(static_cast<size_t>(n - 1)));
}

double Schedule::hyp_exponent(int n) const {
    double tprev = static_cast<double>(times.at(static_cast<size_t>(n - 1)));
    return (1 - theta) * dt(n) - d * theta * tprev;
}

}  // namespace mcf
