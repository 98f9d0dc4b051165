#include "fmmbeat/fitting.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fmmbeat {

namespace {

struct Attempt {
    FitReport report;
    std::size_t assigned = 0;
};

bool better(const Attempt& a, const std::optional<Attempt>& b) {
    if (!b) {
        return true;
    }
    if (a.assigned != b->assigned) {
        return a.assigned > b->assigned;
    }
    return a.report.r2 > b->report.r2;
}

std::vector<Component> sort_by_pv(std::vector<Component> comps) {
    std::stable_sort(comps.begin(), comps.end(),
                     [](const Component& a, const Component& b) { return a.pv > b.pv; });
    return comps;
}

FitReport build_report(const Beat& beat, std::vector<Component> comps, const Assignment& asg) {
    FitReport rep;
    rep.assigned_from_component = asg.index;

    std::vector<std::pair<std::size_t, WaveLabel>> used;
    for (WaveLabel l : kAllLabels) {
        if (const auto& j = asg[l]) {
            rep.params[l] = comps[*j].params;
            used.emplace_back(*j, l);
        }
    }
    std::sort(used.begin(), used.end());
    std::vector<Component> labelled;
    for (const auto& [j, l] : used) {
        labelled.push_back(comps[j]);
    }

    const auto times = beat.times();
    const auto values = beat.values();
    const std::size_t n = times.size();
    double intercept = 0.0;
    std::vector<double> waves(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const Component& c : labelled) {
            waves[i] += eval_wave(c.params, times[i]);
        }
        intercept += values[i] - waves[i];
    }
    intercept /= static_cast<double>(n);
    double rss = 0.0;
    std::vector<double> fitted(n);
    for (std::size_t i = 0; i < n; ++i) {
        fitted[i] = intercept + waves[i];
        rss += (values[i] - fitted[i]) * (values[i] - fitted[i]);
    }
    rep.params.M = intercept;
    rep.params.sigma2 = rss / static_cast<double>(n);
    rep.r2 = r_squared(values, fitted);
    rep.pv_per_component = pv_sequence(beat, labelled);
    rep.components = std::move(comps);
    return rep;
}

// Assigned waves in label order: the seeds of the next backfit.
std::vector<Component> assigned_components(const FitReport& rep) {
    std::vector<Component> out;
    for (const auto& j : rep.assigned_from_component) {
        if (j) {
            out.push_back(rep.components[*j]);
        }
    }
    return out;
}

}  // namespace

FitReport fit_beat(const Beat& beat, const IStepConfig& cfg) {
    cfg.validate();
    const SingleFmmFitter fitter(beat.times(), cfg.fitter);
    const auto values = beat.values();

    std::optional<Attempt> best;
    std::vector<Component> seeds;
    double previous_r2 = -std::numeric_limits<double>::infinity();
    bool stopped_by_rule = false;
    std::size_t iterations_run = 0;

    for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
        iterations_run = iter;
        const std::size_t passes = iter == 1 ? cfg.backfit_passes_initial : cfg.backfit_passes;
        std::optional<Attempt> round;
        for (std::size_t k = cfg.k_initial; k <= cfg.k_max; ++k) {
            std::vector<Component> init = seeds;
            if (init.size() > k) {
                init.resize(k);
            }
            BackfitResult bf = backfit(fitter, values, k, init, passes);
            if (cfg.joint_refine_max_iter > 0) {
                JointRefineResult jr =
                    refine_jointly(beat.times(), values, bf.components, bf.intercept,
                                   cfg.joint_refine_max_iter, cfg.fitter.omega_floor);
                if (jr.improved) {
                    bf.components = order_by_contribution(beat, std::move(jr.components));
                }
            }
            std::vector<Component> comps = sort_by_pv(std::move(bf.components));
            Assignment asg;
            try {
                asg = istep_assign(comps, beat, cfg);
            } catch (const UnfittableBeat&) {
                continue;
            }
            Attempt attempt{build_report(beat, std::move(comps), asg), asg.assigned_count()};
            const bool complete = asg.complete();
            seeds = assigned_components(attempt.report);
            if (better(attempt, round)) {
                round = std::move(attempt);
            }
            if (complete) {
                break;
            }
        }
        if (round && better(*round, best)) {
            best = round;
        }
        if (best && best->assigned == 5) {
            stopped_by_rule = true;
            break;
        }
        const double r2 = round ? round->report.r2 : previous_r2;
        if (iter > 1 && r2 - previous_r2 < cfg.pv_gain_stop) {
            stopped_by_rule = true;
            break;
        }
        previous_r2 = r2;
        if (round) {
            seeds = assigned_components(round->report);
        }
    }
    if (!best) {
        throw UnfittableBeat("no R wave could be identified in any iteration");
    }
    best->report.converged = stopped_by_rule;
    best->report.iterations = iterations_run;
    return best->report;
}

}  // namespace fmmbeat
