#include "fmmbeat/fitting.h"

#include "fmmbeat/angles.h"
#include "gsl_quiet.h"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace fmmbeat {

namespace {

// Parameter layout: [M, (δ, γ, α, u) per present component],
// ω = floor + (1 − floor)/(1 + e^−u).
constexpr std::size_t kPerWave = 4;

struct Problem {
    std::span<const double> times;
    std::span<const double> values;
    std::size_t waves;
    double omega_floor;

    double omega_of(double u) const { return omega_floor + (1.0 - omega_floor) / (1.0 + std::exp(-u)); }
    double domega_du(double u) const {
        const double sig = 1.0 / (1.0 + std::exp(-u));
        return (1.0 - omega_floor) * sig * (1.0 - sig);
    }
    double u_of(double omega) const {
        const double w = std::clamp((omega - omega_floor) / (1.0 - omega_floor), 1e-9, 1.0 - 1e-9);
        return std::log(w / (1.0 - w));
    }
};

int residuals(const gsl_vector* x, void* data, gsl_vector* f) {
    const auto* pb = static_cast<const Problem*>(data);
    const double m = gsl_vector_get(x, 0);
    for (std::size_t i = 0; i < pb->times.size(); ++i) {
        double model = m;
        for (std::size_t j = 0; j < pb->waves; ++j) {
            const std::size_t o = 1 + kPerWave * j;
            const double delta = gsl_vector_get(x, o);
            const double gamma = gsl_vector_get(x, o + 1);
            const double alpha = gsl_vector_get(x, o + 2);
            const double omega = pb->omega_of(gsl_vector_get(x, o + 3));
            const double phi = mobius_phase(alpha, omega, pb->times[i]);
            model += delta * std::cos(phi) + gamma * std::sin(phi);
        }
        gsl_vector_set(f, i, model - pb->values[i]);
    }
    return GSL_SUCCESS;
}

int jacobian(const gsl_vector* x, void* data, gsl_matrix* J) {
    const auto* pb = static_cast<const Problem*>(data);
    for (std::size_t i = 0; i < pb->times.size(); ++i) {
        gsl_matrix_set(J, i, 0, 1.0);
        for (std::size_t j = 0; j < pb->waves; ++j) {
            const std::size_t o = 1 + kPerWave * j;
            const double delta = gsl_vector_get(x, o);
            const double gamma = gsl_vector_get(x, o + 1);
            const double alpha = gsl_vector_get(x, o + 2);
            const double u = gsl_vector_get(x, o + 3);
            const double omega = pb->omega_of(u);
            const double half = 0.5 * (pb->times[i] - alpha);
            const double c = std::cos(half);
            const double s = std::sin(half);
            const double denom = c * c + omega * omega * s * s;
            const double phi = 2.0 * std::atan2(omega * s, c);
            const double cp = std::cos(phi);
            const double sp = std::sin(phi);
            const double dwave_dphi = -delta * sp + gamma * cp;
            const double dphi_dalpha = -omega / denom;
            const double dphi_domega = 2.0 * s * c / denom;
            const double domega_du = pb->domega_du(u);
            gsl_matrix_set(J, i, o, cp);
            gsl_matrix_set(J, i, o + 1, sp);
            gsl_matrix_set(J, i, o + 2, dwave_dphi * dphi_dalpha);
            gsl_matrix_set(J, i, o + 3, dwave_dphi * dphi_domega * domega_du);
        }
    }
    return GSL_SUCCESS;
}

double sum_of_squares(const Problem& pb, const gsl_vector* x) {
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> f(gsl_vector_alloc(pb.times.size()),
                                                              &gsl_vector_free);
    residuals(x, const_cast<Problem*>(&pb), f.get());
    double ss = 0.0;
    gsl_blas_ddot(f.get(), f.get(), &ss);
    return ss;
}

// Components that converge onto the same (α, ω) span one basis pair; fold
// them into the first so the split does not leak into labelling.
void merge_coincident(const Problem& pb, gsl_vector* x) {
    constexpr double kTol = 1e-6;
    for (std::size_t a = 0; a < pb.waves; ++a) {
        const std::size_t oa = 1 + kPerWave * a;
        const double alpha_a = gsl_vector_get(x, oa + 2);
        const double omega_a = pb.omega_of(gsl_vector_get(x, oa + 3));
        for (std::size_t b = a + 1; b < pb.waves; ++b) {
            const std::size_t ob = 1 + kPerWave * b;
            const double omega_b = pb.omega_of(gsl_vector_get(x, ob + 3));
            if (circular_distance(alpha_a, gsl_vector_get(x, ob + 2)) > kTol ||
                std::abs(omega_a - omega_b) > kTol * omega_a) {
                continue;
            }
            for (std::size_t k = 0; k < 2; ++k) {
                gsl_vector_set(x, oa + k, gsl_vector_get(x, oa + k) + gsl_vector_get(x, ob + k));
                gsl_vector_set(x, ob + k, 0.0);
            }
        }
    }
}

}  // namespace

JointRefineResult refine_jointly(std::span<const double> times, std::span<const double> values,
                                 std::span<const Component> components, double intercept,
                                 std::size_t max_iter, double omega_floor) {
    if (times.size() != values.size()) {
        throw std::invalid_argument("joint refinement: times and values differ in length");
    }
    detail::silence_gsl_errors();
    JointRefineResult out;
    out.components.assign(components.begin(), components.end());
    out.intercept = intercept;

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < components.size(); ++j) {
        if (components[j].present()) {
            active.push_back(j);
        }
    }
    const std::size_t n = times.size();
    const std::size_t p = 1 + kPerWave * active.size();
    if (!(omega_floor >= 0.0 && omega_floor < 1.0)) {
        throw std::invalid_argument("joint refinement: omega_floor must lie in [0, 1)");
    }
    Problem pb{times, values, active.size(), omega_floor};

    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x0(gsl_vector_alloc(p), &gsl_vector_free);
    gsl_vector_set(x0.get(), 0, intercept);
    for (std::size_t a = 0; a < active.size(); ++a) {
        const WaveParams& w = components[active[a]].params;
        const std::size_t o = 1 + kPerWave * a;
        // δ, γ from (A, β) so the basis matches mobius_phase exactly
        gsl_vector_set(x0.get(), o, w.A * std::cos(w.beta));
        gsl_vector_set(x0.get(), o + 1, -w.A * std::sin(w.beta));
        gsl_vector_set(x0.get(), o + 2, w.alpha);
        gsl_vector_set(x0.get(), o + 3, pb.u_of(w.omega));
    }
    out.rss = sum_of_squares(pb, x0.get());
    if (active.empty() || n <= p || max_iter == 0) {
        return out;
    }

    gsl_multifit_nlinear_fdf fdf{};
    fdf.f = &residuals;
    fdf.df = &jacobian;
    fdf.fvv = nullptr;
    fdf.n = n;
    fdf.p = p;
    fdf.params = &pb;
    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    params.scale = gsl_multifit_nlinear_scale_more;
    std::unique_ptr<gsl_multifit_nlinear_workspace, decltype(&gsl_multifit_nlinear_free)> ws(
        gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, n, p),
        &gsl_multifit_nlinear_free);
    if (gsl_multifit_nlinear_init(x0.get(), &fdf, ws.get()) != GSL_SUCCESS) {
        return out;
    }
    int info = 0;
    gsl_multifit_nlinear_driver(max_iter, 1e-12, 1e-12, 1e-14, nullptr, nullptr, &info, ws.get());
    const gsl_vector* x = gsl_multifit_nlinear_position(ws.get());
    for (std::size_t k = 0; k < p; ++k) {
        if (!std::isfinite(gsl_vector_get(x, k))) {
            return out;
        }
    }
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> merged(gsl_vector_alloc(p),
                                                                   &gsl_vector_free);
    gsl_vector_memcpy(merged.get(), x);
    merge_coincident(pb, merged.get());
    x = merged.get();
    const double rss = sum_of_squares(pb, x);
    if (!(rss < out.rss)) {
        return out;
    }

    out.rss = rss;
    out.intercept = gsl_vector_get(x, 0);
    out.improved = true;
    for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t o = 1 + kPerWave * a;
        const double delta = gsl_vector_get(x, o);
        const double gamma = gsl_vector_get(x, o + 1);
        Component& c = out.components[active[a]];
        c.delta = delta;
        c.gamma = gamma;
        c.params.A = std::hypot(delta, gamma);
        c.params.beta = wrap_angle(std::atan2(-gamma, delta));
        c.params.alpha = wrap_angle(gsl_vector_get(x, o + 2));
        c.params.omega = pb.omega_of(gsl_vector_get(x, o + 3));
    }
    return out;
}

}  // namespace fmmbeat
