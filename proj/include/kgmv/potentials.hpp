#ifndef KGMV_POTENTIALS_HPP
#define KGMV_POTENTIALS_HPP

// Lower-order terms W(s) = s^2/2 + N(s) (mass rescaled to one), extended evenly
// to s < 0, plus a sampling-based check of the structural hypotheses the
// existence theory needs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kgmv {

enum class PotentialFamily {
    PolyDoubleZero,  ///< W = s^2 (1 - s)^2 / 2
    PowerDefocus,    ///< W = s^2/2 - s^p / p
    DoubleWell,      ///< W = (1 - s^2)^2, W(0) > 0; non-existence demonstration only
    Quadratic,       ///< W = s^2/2, W'(s) s >= 0; magnetostatic demonstration only
};

inline std::string to_string(PotentialFamily f) {
    switch (f) {
        case PotentialFamily::PolyDoubleZero: return "poly_double_zero";
        case PotentialFamily::PowerDefocus: return "power_defocus";
        case PotentialFamily::DoubleWell: return "double_well";
        case PotentialFamily::Quadratic: return "quadratic";
    }
    return "unknown";
}

inline PotentialFamily potential_family_from_string(const std::string& name) {
    if (name == "poly_double_zero") return PotentialFamily::PolyDoubleZero;
    if (name == "power_defocus") return PotentialFamily::PowerDefocus;
    if (name == "double_well") return PotentialFamily::DoubleWell;
    if (name == "quadratic") return PotentialFamily::Quadratic;
    throw std::invalid_argument("unknown potential family '" + name + "'");
}

struct PotentialValue {
    double W = 0.0;
    double dW = 0.0;  ///< W'(s)
    double N = 0.0;   ///< W(s) - s^2/2
};

struct PotentialSpec {
    PotentialFamily family = PotentialFamily::PolyDoubleZero;
    double p = 4.0;   ///< exponent of PowerDefocus
    double s0 = 1.0;  ///< a point with N(s0) < 0

    static PotentialSpec poly_double_zero() { return {PotentialFamily::PolyDoubleZero, 4.0, 1.0}; }
    static PotentialSpec power_defocus(double p) { return {PotentialFamily::PowerDefocus, p, 1.0}; }
    static PotentialSpec double_well() { return {PotentialFamily::DoubleWell, 4.0, 1.0}; }
    static PotentialSpec quadratic() { return {PotentialFamily::Quadratic, 4.0, 1.0}; }

    std::string id() const {
        std::string s = to_string(family);
        if (family == PotentialFamily::PowerDefocus) s += "(p=" + std::to_string(p) + ")";
        return s;
    }
};

inline PotentialValue eval_potential(const PotentialSpec& spec, double s) {
    const double a = std::abs(s);
    const double sign = s < 0.0 ? -1.0 : 1.0;
    PotentialValue v;
    switch (spec.family) {
        case PotentialFamily::PolyDoubleZero: {
            const double m = 1.0 - a;
            v.W = 0.5 * a * a * m * m;
            v.dW = a * m * (1.0 - 2.0 * a);
            v.N = a * a * a * (0.5 * a - 1.0);
            break;
        }
        case PotentialFamily::PowerDefocus: {
            const double ap = std::pow(a, spec.p);
            v.N = -ap / spec.p;
            v.W = 0.5 * a * a + v.N;
            v.dW = a - std::pow(a, spec.p - 1.0);
            break;
        }
        case PotentialFamily::DoubleWell: {
            const double m = 1.0 - a * a;
            v.W = m * m;
            v.dW = -4.0 * a * m;
            v.N = v.W - 0.5 * a * a;
            break;
        }
        case PotentialFamily::Quadratic: {
            v.W = 0.5 * a * a;
            v.dW = a;
            v.N = 0.0;
            break;
        }
    }
    v.dW *= sign;
    return v;
}

struct ValidationReport {
    bool w1 = false;  ///< W(s) >= 0 on the sample
    double w1_min_W = 0.0;
    double w1_argmin = 0.0;

    bool w2 = false;  ///< W(0) = W'(0) = 0 and W''(0) = 1
    double w2_W0 = 0.0, w2_dW0 = 0.0, w2_d2W0 = 0.0;

    bool w3 = false;  ///< inf W(s) / (s^2/2) < 1
    double w3_min_ratio = 0.0;
    double w3_argmin = 0.0;

    bool growth = false;  ///< W'(s)/s^5 stays bounded over the sample
    double growth_ratio_at_max = 0.0;

    bool eligible = false;
};

/// Sampling check on s_k = s_max k / n_samples, k = 1..n_samples.
inline ValidationReport validate_hypotheses(const PotentialSpec& spec, double s_max, int n_samples) {
    if (!(s_max > 0.0)) throw std::invalid_argument("validate_hypotheses: s_max must be positive");
    if (n_samples < 100) throw std::invalid_argument("validate_hypotheses: need at least 100 samples");

    ValidationReport rep;
    auto W = [&](double s) { return eval_potential(spec, s).W; };

    rep.w1_min_W = std::numeric_limits<double>::infinity();
    rep.w3_min_ratio = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n_samples; ++k) {
        const double s = s_max * k / n_samples;
        const double w = W(s);
        if (w < rep.w1_min_W) {
            rep.w1_min_W = w;
            rep.w1_argmin = s;
        }
        const double ratio = w / (0.5 * s * s);
        if (ratio < rep.w3_min_ratio) {
            rep.w3_min_ratio = ratio;
            rep.w3_argmin = s;
        }
    }
    rep.w1_min_W = std::min(rep.w1_min_W, W(0.0));
    rep.w1 = rep.w1_min_W >= 0.0;
    rep.w3 = rep.w3_min_ratio < 1.0;

    // The even extension carries |s|^3 terms, so the plain second difference is
    // only first-order accurate at 0; Richardson extrapolation removes that.
    const double h = 1e-4;
    auto second_diff = [&](double step) { return (W(step) - 2.0 * W(0.0) + W(-step)) / (step * step); };
    rep.w2_W0 = W(0.0);
    rep.w2_dW0 = eval_potential(spec, 0.0).dW;
    rep.w2_d2W0 = 2.0 * second_diff(0.5 * h) - second_diff(h);
    rep.w2 = std::abs(rep.w2_W0) <= 1e-12 && std::abs(rep.w2_dW0) <= 1e-12 && std::abs(rep.w2_d2W0 - 1.0) <= 1e-6;

    auto growth_ratio = [&](double s) { return std::max(eval_potential(spec, s).dW / std::pow(s, 5.0), 0.0); };
    const double hi = growth_ratio(s_max), mid = growth_ratio(0.5 * s_max);
    rep.growth_ratio_at_max = hi;
    rep.growth = !(hi > 0.0 && hi > mid * (1.0 + 1e-9));

    rep.eligible = rep.w1 && rep.w2 && rep.w3;
    return rep;
}

}  // namespace kgmv

#endif  // KGMV_POTENTIALS_HPP
