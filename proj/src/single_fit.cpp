#include "fmmbeat/fitting.h"

#include "fmmbeat/angles.h"
#include "gsl_quiet.h"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace fmmbeat {

namespace {

// The regression target with its mean removed.
struct CenteredTarget {
    double n = 0.0;
    double mean = 0.0;
    double centered_ss = 0.0;  // Σ(r − r̄)²
    std::vector<double> values;
};

CenteredTarget center(std::span<const double> r) {
    CenteredTarget t;
    t.n = static_cast<double>(r.size());
    t.mean = std::accumulate(r.begin(), r.end(), 0.0) / t.n;
    t.values.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        t.values[i] = r[i] - t.mean;
        t.centered_ss += t.values[i] * t.values[i];
    }
    return t;
}

// Raw sums of the basis x = cos φ, y = sin φ and its products with the centred target.
struct BasisSums {
    double x = 0, y = 0, xx = 0, yy = 0, xy = 0, rx = 0, ry = 0;
};

struct LinearSolution {
    bool ok = false;
    double intercept = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double rss = std::numeric_limits<double>::infinity();
};

// Solves r ≈ m + δx + γy by centring, which reduces the 3×3 normal equations to 2×2.
LinearSolution solve_centered(const BasisSums& b, const CenteredTarget& t) {
    const double n = t.n;
    const double mx = b.x / n;
    const double my = b.y / n;
    const double cxx = b.xx - b.x * mx;
    const double cyy = b.yy - b.y * my;
    const double cxy = b.xy - b.x * my;
    const double crx = b.rx;
    const double cry = b.ry;
    const double det = cxx * cyy - cxy * cxy;
    LinearSolution s;
    if (!(det > 1e-12 * cxx * cyy) || cxx <= 0.0 || cyy <= 0.0) {
        return s;
    }
    s.delta = (crx * cyy - cry * cxy) / det;
    s.gamma = (cry * cxx - crx * cxy) / det;
    s.intercept = t.mean - s.delta * mx - s.gamma * my;
    s.rss = std::max(0.0, t.centered_ss - (s.delta * crx + s.gamma * cry));
    s.ok = true;
    return s;
}

// One sample's contribution to the basis sums of every ω lane.
void accumulate_lanes(std::size_t m, double c2, double s2, double sc, double r,
                      const double* __restrict w2, const double* __restrict two_w,
                      double* __restrict sx, double* __restrict sy, double* __restrict sxx,
                      double* __restrict sxy, double* __restrict srx, double* __restrict sry) {
    for (std::size_t j = 0; j < m; ++j) {
        const double s2w = w2[j] * s2;
        const double inv = 1.0 / (c2 + s2w);
        const double x = (c2 - s2w) * inv;
        const double y = two_w[j] * sc * inv;
        sx[j] += x;
        sy[j] += y;
        sxx[j] += x * x;
        sxy[j] += x * y;
        srx[j] += r * x;
        sry[j] += r * y;
    }
}

SingleFit make_fit(const LinearSolution& s, double alpha, double omega) {
    SingleFit f;
    f.intercept = s.intercept;
    f.rss = s.rss;
    f.component.delta = s.delta;
    f.component.gamma = s.gamma;
    f.component.params.A = std::hypot(s.delta, s.gamma);
    f.component.params.alpha = wrap_angle(alpha);
    f.component.params.beta = wrap_angle(std::atan2(-s.gamma, s.delta));
    f.component.params.omega = omega;
    return f;
}

SingleFit zero_fit(const CenteredTarget& t) {
    SingleFit f;
    f.intercept = t.mean;
    f.rss = t.centered_ss;
    return f;
}

SingleFit fit_centered_at(std::span<const double> times, const CenteredTarget& stats,
                          double alpha, double omega) {
    BasisSums b;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double half = 0.5 * (times[i] - alpha);
        const double c = std::cos(half);
        const double s = std::sin(half);
        const double ws = omega * s;
        const double inv = 1.0 / (c * c + ws * ws);
        const double x = (c * c - ws * ws) * inv;
        const double y = 2.0 * ws * c * inv;
        const double r = stats.values[i];
        b.x += x;
        b.y += y;
        b.xx += x * x;
        b.yy += y * y;
        b.xy += x * y;
        b.rx += r * x;
        b.ry += r * y;
    }
    const LinearSolution sol = solve_centered(b, stats);
    if (!sol.ok) {
        return zero_fit(stats);
    }
    return make_fit(sol, alpha, omega);
}

struct RefineContext {
    std::span<const double> times;
    const CenteredTarget* target;
    double omega_floor;
    std::size_t evals = 0;
    SingleFit best;
};

double clamp_omega(double log_omega, double floor) {
    return std::clamp(std::exp(log_omega), floor, 1.0);
}

double refine_objective(const gsl_vector* x, void* params) {
    auto* ctx = static_cast<RefineContext*>(params);
    const double alpha = gsl_vector_get(x, 0);
    const double omega = clamp_omega(gsl_vector_get(x, 1), ctx->omega_floor);
    ++ctx->evals;
    SingleFit f = fit_centered_at(ctx->times, *ctx->target, alpha, omega);
    if (f.rss < ctx->best.rss) {
        ctx->best = f;
    }
    return f.rss;
}

struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

std::vector<double> SingleFitOptions::omega_grid() const {
    if (!custom_omega_grid.empty()) {
        for (double w : custom_omega_grid) {
            if (!(w > 0.0 && w <= 1.0)) {
                throw std::invalid_argument("omega grid: values must lie in (0, 1]");
            }
        }
        return custom_omega_grid;
    }
    if (omega_grid_size == 0 || !(omega_grid_min > 0.0) || omega_grid_max > 1.0 ||
        omega_grid_min > omega_grid_max) {
        throw std::invalid_argument("omega grid: need 0 < min <= max <= 1 and size >= 1");
    }
    std::vector<double> grid(omega_grid_size);
    if (omega_grid_size == 1) {
        grid[0] = omega_grid_max;
        return grid;
    }
    const double lo = std::log(omega_grid_min);
    const double hi = std::log(omega_grid_max);
    for (std::size_t j = 0; j < omega_grid_size; ++j) {
        grid[j] = std::exp(lo + (hi - lo) * static_cast<double>(j) /
                                    static_cast<double>(omega_grid_size - 1));
    }
    grid.back() = omega_grid_max;
    return grid;
}

SingleFmmFitter::SingleFmmFitter(std::span<const double> times, SingleFitOptions options)
    : times_(times.begin(), times.end()), options_(options), omega_grid_(options.omega_grid()) {
    detail::silence_gsl_errors();
    if (times_.size() < 4) {
        throw std::invalid_argument("single FMM fit: at least 4 samples are required");
    }
    if (options_.alpha_grid_size == 0) {
        throw std::invalid_argument("single FMM fit: empty alpha grid");
    }
    const std::size_t n = times_.size();
    alpha_grid_.resize(options_.alpha_grid_size);
    half_angle_terms_.resize(alpha_grid_.size() * n * 3);
    for (std::size_t a = 0; a < alpha_grid_.size(); ++a) {
        alpha_grid_[a] = kTwoPi * static_cast<double>(a) / static_cast<double>(alpha_grid_.size());
        double* terms = &half_angle_terms_[a * n * 3];
        for (std::size_t i = 0; i < n; ++i) {
            const double half = 0.5 * (times_[i] - alpha_grid_[a]);
            const double c = std::cos(half);
            const double s = std::sin(half);
            terms[3 * i] = c * c;
            terms[3 * i + 1] = s * s;
            terms[3 * i + 2] = s * c;
        }
    }
}

double SingleFmmFitter::alpha_step() const {
    return kTwoPi / static_cast<double>(alpha_grid_.size());
}

double SingleFmmFitter::omega_step_ratio() const {
    double ratio = 1.0;
    for (std::size_t j = 1; j < omega_grid_.size(); ++j) {
        ratio = std::max(ratio, omega_grid_[j] / omega_grid_[j - 1]);
    }
    return ratio;
}

SingleFit SingleFmmFitter::fit_at(std::span<const double> target, double alpha,
                                  double omega) const {
    if (target.size() != times_.size()) {
        throw std::invalid_argument("single FMM fit: target length differs from times");
    }
    return fit_centered_at(times_, center(target), alpha, omega);
}

SingleFit SingleFmmFitter::fit(std::span<const double> target,
                               const std::optional<WaveParams>& seed) const {
    if (target.size() != times_.size()) {
        throw std::invalid_argument("single FMM fit: target length differs from times");
    }
    for (double v : target) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("single FMM fit: non-finite residual");
        }
    }
    const CenteredTarget stats = center(target);
    double energy = 0.0;
    for (double v : target) {
        energy += v * v;
    }
    if (stats.centered_ss <= 1e-24 * energy || stats.centered_ss == 0.0) {
        return zero_fit(stats);
    }

    // Coarse grid. Strict comparison keeps the smallest α, then smallest ω, on ties.
    const std::size_t n = times_.size();
    LinearSolution best_sol;
    double best_alpha = 0.0;
    double best_omega = 1.0;
    // Lanes run over ω so the accumulators vectorize without reassociation.
    const std::size_t m = omega_grid_.size();
    std::vector<double> w2(m);
    std::vector<double> two_w(m);
    for (std::size_t j = 0; j < m; ++j) {
        w2[j] = omega_grid_[j] * omega_grid_[j];
        two_w[j] = 2.0 * omega_grid_[j];
    }
    std::vector<double> acc(6 * m);
    double* sx = acc.data();
    double* sy = sx + m;
    double* sxx = sy + m;
    double* sxy = sxx + m;
    double* srx = sxy + m;
    double* sry = srx + m;
    for (std::size_t a = 0; a < alpha_grid_.size(); ++a) {
        const double* terms = &half_angle_terms_[a * n * 3];
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double c2 = terms[3 * i];
            const double s2 = terms[3 * i + 1];
            const double sc = terms[3 * i + 2];
            const double r = stats.values[i];
            accumulate_lanes(m, c2, s2, sc, r, w2.data(), two_w.data(), sx, sy, sxx, sxy, srx, sry);
        }
        for (std::size_t j = 0; j < m; ++j) {
            // x² + y² = 1 pointwise
            const BasisSums b{sx[j], sy[j], sxx[j], static_cast<double>(n) - sxx[j], sxy[j], srx[j], sry[j]};
            const LinearSolution sol = solve_centered(b, stats);
            if (sol.ok && sol.rss < best_sol.rss) {
                best_sol = sol;
                best_alpha = alpha_grid_[a];
                best_omega = omega_grid_[j];
            }
        }
    }

    SingleFit best = best_sol.ok ? make_fit(best_sol, best_alpha, best_omega) : zero_fit(stats);
    if (seed) {
        SingleFit at_seed = fit_centered_at(times_, stats, seed->alpha, seed->omega);
        if (at_seed.component.present() && at_seed.rss < best.rss) {
            best = at_seed;
        }
    }
    if (!best.component.present()) {
        return zero_fit(stats);
    }

    if (options_.refine_max_evals > 0) {
        RefineContext ctx{times_, &stats, options_.omega_floor, 0, best};
        gsl_multimin_function fn{&refine_objective, 2, &ctx};
        std::unique_ptr<gsl_vector, VectorDeleter> x0(gsl_vector_alloc(2));
        std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(2));
        gsl_vector_set(x0.get(), 0, best.component.params.alpha);
        gsl_vector_set(x0.get(), 1, std::log(best.component.params.omega));
        gsl_vector_set(step.get(), 0, 0.5 * alpha_step());
        gsl_vector_set(step.get(), 1, 0.5 * std::max(std::log(omega_step_ratio()), 0.05));
        std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
            gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2));
        gsl_multimin_fminimizer_set(minimizer.get(), &fn, x0.get(), step.get());
        while (ctx.evals < options_.refine_max_evals) {
            if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) {
                break;
            }
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer.get()), 1e-9) ==
                GSL_SUCCESS) {
                break;
            }
        }
        if (ctx.best.component.present() && ctx.best.rss < best.rss) {
            best = ctx.best;
        }
    }
    return best;
}

SingleFit fit_single_fmm(std::span<const double> times, std::span<const double> residuals,
                         std::size_t alpha_grid_size, std::span<const double> omega_grid) {
    if (omega_grid.empty()) {
        throw std::invalid_argument("single FMM fit: empty omega grid");
    }
    SingleFitOptions options;
    options.alpha_grid_size = alpha_grid_size;
    options.custom_omega_grid.assign(omega_grid.begin(), omega_grid.end());
    return SingleFmmFitter(times, options).fit(residuals);
}

}  // namespace fmmbeat
