#pragma once

#include "fmmbeat/angles.h"
#include "fmmbeat/wave.h"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fmmbeat {

/// Raised when no component of a beat can play the role of the R wave.
class UnfittableBeat : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by goodness-of-fit measures on a constant observed signal.
class UndefinedVariance : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An unlabelled fitted FMM oscillator. In the Möbius basis the wave reads
/// δ·cos φ + γ·sin φ with φ the warped phase, so A = √(δ²+γ²), β = atan2(−γ, δ).
struct Component {
    WaveParams params{};
    double delta = 0.0;
    double gamma = 0.0;
    double pv = 0.0;

    /// False for the zero component returned on degenerate input.
    bool present() const { return params.A > 0.0; }
};

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

/// 1 − Σ(x − f)² / Σ(x − x̄)². Throws UndefinedVariance for constant x.
double r_squared(std::span<const double> observed, std::span<const double> fitted);

/// Incremental variance explained: PV_k = R²(1..k) − R²(1..k−1), R²(1..0) = 0.
/// R²(1..k) uses the first k waves with the least-squares intercept.
std::vector<double> pv_sequence(const Beat& beat, std::span<const Component> components);

// ---------------------------------------------------------------------------
// Single component fitter
// ---------------------------------------------------------------------------

struct SingleFitOptions {
    std::size_t alpha_grid_size = 100;
    std::size_t omega_grid_size = 40;
    double omega_grid_min = 0.005;
    double omega_grid_max = 1.0;
    /// Lower bound for ω during local refinement.
    double omega_floor = 1e-3;
    std::size_t refine_max_evals = 200;
    /// Explicit ω grid; when empty the log-spaced grid below is used.
    std::vector<double> custom_omega_grid;

    /// Log-spaced ω grid between omega_grid_min and omega_grid_max.
    std::vector<double> omega_grid() const;
};

struct SingleFit {
    Component component;
    double intercept = 0.0;
    double rss = 0.0;
};

/// Two-stage single FMM fit: exhaustive (α, ω) grid with per-point linear least
/// squares, then a simplex polish over (α, log ω). The per-α basis terms are
/// cached, so one instance serves every refit on the same sample times.
class SingleFmmFitter {
public:
    SingleFmmFitter(std::span<const double> times, SingleFitOptions options = {});

    /// Fits m + W(t) to `target`. `seed`, when given, is always a candidate, so
    /// the result never has higher RSS than the least-squares fit at the seed.
    SingleFit fit(std::span<const double> target,
                  const std::optional<WaveParams>& seed = std::nullopt) const;

    /// Least-squares intercept, wave and RSS at a fixed (α, ω).
    SingleFit fit_at(std::span<const double> target, double alpha, double omega) const;

    std::span<const double> times() const { return times_; }
    const SingleFitOptions& options() const { return options_; }
    double alpha_step() const;
    /// Ratio between consecutive ω grid points.
    double omega_step_ratio() const;

private:
    std::vector<double> times_;
    SingleFitOptions options_;
    std::vector<double> alpha_grid_;
    std::vector<double> omega_grid_;
    // Per grid α, interleaved cos²(d/2), sin²(d/2), sin(d/2)cos(d/2) with d = t − α.
    std::vector<double> half_angle_terms_;
};

/// Convenience wrapper; builds a fitter with the given grid sizes.
SingleFit fit_single_fmm(std::span<const double> times, std::span<const double> residuals,
                         std::size_t alpha_grid_size, std::span<const double> omega_grid);

// ---------------------------------------------------------------------------
// Backfitting (M step)
// ---------------------------------------------------------------------------

struct BackfitResult {
    std::vector<Component> components;  // slot order, pv filled incrementally
    double intercept = 0.0;
    double rss = 0.0;
    /// Total RSS before the first refit and after every single-component refit.
    std::vector<double> rss_trace;
    std::size_t passes_run = 0;
};

/// Cyclically refits k components, each against the residual of the others.
/// `init` seeds the first slots; remaining slots start at zero. Stops early
/// once a full pass gains less than `rel_tol`·TSS.
BackfitResult backfit(const SingleFmmFitter& fitter, std::span<const double> values,
                      std::size_t k, std::span<const Component> init, std::size_t passes,
                      double rel_tol = 1e-12);

BackfitResult backfit(const Beat& beat, std::size_t k, std::span<const Component> init,
                      std::size_t passes, const SingleFitOptions& options = {});

struct JointRefineResult {
    std::vector<Component> components;  // same slots as the input
    double intercept = 0.0;
    double rss = 0.0;
    bool improved = false;
};

/// Levenberg-Marquardt polish of all present components and the intercept at
/// once, with each ω kept in [omega_floor, 1]. Components that converge onto
/// the same (α, ω) are merged, leaving the others absent. Absent inputs stay absent.
/// Never returns a larger RSS. PV values are left as given.
JointRefineResult refine_jointly(std::span<const double> times, std::span<const double> values,
                                 std::span<const Component> components, double intercept,
                                 std::size_t max_iter = 200, double omega_floor = 1e-3);

/// Reorders components greedily, each next one being the one whose addition
/// raises R² the most, and fills pv incrementally in that order.
std::vector<Component> order_by_contribution(const Beat& beat, std::vector<Component> components);

// ---------------------------------------------------------------------------
// Identification (I step)
// ---------------------------------------------------------------------------

/// Closed interval on the circle, traversed counterclockwise from lo to hi.
/// lo = 0, hi = 2π covers every angle.
struct AngleWindow {
    double lo = 0.0;
    double hi = kTwoPi;

    bool contains(double angle) const;
};

/// Plausibility window for one of P, Q, S, T.
struct LabelWindow {
    double omega_lo = 0.0;
    double omega_hi = 1.0;
    AngleWindow beta{};

    bool admits(const WaveParams& p) const;
};

struct IStepConfig {
    /// Open interval for β_R.
    std::pair<double, double> r_beta_window{kPi / 2.0, 5.0 * kPi / 3.0};
    double r_omega_max = 0.12;
    /// Largest circular distance between an R candidate's crest and the QRS phase.
    double r_qrs_proximity = kPi / 5.0;
    /// Take the candidate with the second largest fitted crest μ(t^U) when its
    /// PV exceeds that of the largest.
    bool r_second_max = true;

    double noise_pv_max = 0.001;
    double noise_omega_min = 0.0;
    double noise_omega_max = 1.0;

    // Crest-shaped P and T span β ∈ [π/2, 3π/2]; trough-shaped Q and S the complement.
    LabelWindow p_window{0.02, 0.6, {kPi / 2.0, 3.0 * kPi / 2.0}};
    LabelWindow q_window{0.0, 0.15, {3.0 * kPi / 2.0, kPi / 2.0}};
    LabelWindow s_window{0.0, 0.2, {3.0 * kPi / 2.0, kPi / 2.0}};
    LabelWindow t_window{0.05, 1.0, {0.0, kTwoPi}};
    /// When both are assigned, require ω_Q < ω_P.
    bool q_sharper_than_p = true;

    std::size_t max_iter = 10;
    double pv_gain_stop = 0.0001;
    std::size_t k_initial = 5;
    std::size_t k_max = 10;
    std::size_t backfit_passes_initial = 5;
    std::size_t backfit_passes = 5;
    /// Iterations of the joint polish after each backfit; 0 disables it.
    std::size_t joint_refine_max_iter = 200;

    SingleFitOptions fitter{};

    const LabelWindow& window(WaveLabel label) const;
    /// Throws std::invalid_argument when a window is empty or k_initial > k_max.
    void validate() const;
};

/// Parses `key = value` lines (# comments) over the field names of IStepConfig.
/// Windows take `lo,hi`; booleans take true|false. Unknown keys throw.
IStepConfig parse_istep_config(std::istream& in, IStepConfig base = {});
IStepConfig load_istep_config(const std::string& path);
void write_istep_config(std::ostream& out, const IStepConfig& cfg);

struct Assignment {
    /// Component index per label (P..T).
    std::array<std::optional<std::size_t>, 5> index{};
    std::vector<bool> noise;

    std::size_t assigned_count() const;
    bool complete() const { return assigned_count() == 5; }
    const std::optional<std::size_t>& operator[](WaveLabel l) const {
        return index[static_cast<std::size_t>(l)];
    }
};

/// Labels components sorted by descending PV. R is chosen among the first five;
/// P, Q, S, T are matched to the remaining top-five components by circular α order
/// and plausibility windows, then labels still missing are filled from components
/// 6..K when more than five are given.
/// Throws UnfittableBeat when no component qualifies as R.
Assignment istep_assign(std::span<const Component> components, const Beat& beat,
                        const IStepConfig& cfg);

// ---------------------------------------------------------------------------
// Full MI loop
// ---------------------------------------------------------------------------

struct FitReport {
    FmmEcgParams params;
    double r2 = 0.0;
    /// PV of each assigned wave, in component (descending PV) order.
    std::vector<double> pv_per_component;
    std::size_t iterations = 0;
    /// Component index each label came from, within `components`.
    std::array<std::optional<std::size_t>, 5> assigned_from_component{};
    bool converged = false;
    /// Every component of the accepted M step, sorted by descending PV.
    std::vector<Component> components;
};

/// Alternates backfitting and identification until all five waves are assigned,
/// escalating the component count up to k_max when they are not. Throws
/// UnfittableBeat when no iteration locates an R wave.
FitReport fit_beat(const Beat& beat, const IStepConfig& cfg = {});

}  // namespace fmmbeat
