#include "fmmbeat/fitting.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace fmmbeat {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + text + "'");
    }
    if (used != text.size()) {
        throw std::invalid_argument("config: '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("config: '" + key + "' expects a count, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw std::invalid_argument("config: '" + key + "' expects true|false, got '" + text + "'");
}

std::pair<double, double> parse_pair(const std::string& key, const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw std::invalid_argument("config: '" + key + "' expects 'lo,hi', got '" + text + "'");
    }
    return {parse_double(key, trim(text.substr(0, comma))),
            parse_double(key, trim(text.substr(comma + 1)))};
}

using Setter = std::function<void(IStepConfig&, const std::string& key, const std::string& value)>;

Setter real(double IStepConfig::*field) {
    return [field](IStepConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_double(k, v);
    };
}
Setter count(std::size_t IStepConfig::*field) {
    return [field](IStepConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_count(k, v);
    };
}
Setter flag(bool IStepConfig::*field) {
    return [field](IStepConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_bool(k, v);
    };
}
Setter omega_window(LabelWindow IStepConfig::*field) {
    return [field](IStepConfig& c, const std::string& k, const std::string& v) {
        const auto [lo, hi] = parse_pair(k, v);
        (c.*field).omega_lo = lo;
        (c.*field).omega_hi = hi;
    };
}
Setter beta_window(LabelWindow IStepConfig::*field) {
    return [field](IStepConfig& c, const std::string& k, const std::string& v) {
        const auto [lo, hi] = parse_pair(k, v);
        (c.*field).beta = {lo, hi};
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"r_beta_window",
         [](IStepConfig& c, const std::string& k, const std::string& v) {
             c.r_beta_window = parse_pair(k, v);
         }},
        {"r_omega_max", real(&IStepConfig::r_omega_max)},
        {"r_qrs_proximity", real(&IStepConfig::r_qrs_proximity)},
        {"r_second_max", flag(&IStepConfig::r_second_max)},
        {"noise_pv_max", real(&IStepConfig::noise_pv_max)},
        {"noise_omega_min", real(&IStepConfig::noise_omega_min)},
        {"noise_omega_max", real(&IStepConfig::noise_omega_max)},
        {"p_omega_window", omega_window(&IStepConfig::p_window)},
        {"q_omega_window", omega_window(&IStepConfig::q_window)},
        {"s_omega_window", omega_window(&IStepConfig::s_window)},
        {"t_omega_window", omega_window(&IStepConfig::t_window)},
        {"p_beta_window", beta_window(&IStepConfig::p_window)},
        {"q_beta_window", beta_window(&IStepConfig::q_window)},
        {"s_beta_window", beta_window(&IStepConfig::s_window)},
        {"t_beta_window", beta_window(&IStepConfig::t_window)},
        {"q_sharper_than_p", flag(&IStepConfig::q_sharper_than_p)},
        {"max_iter", count(&IStepConfig::max_iter)},
        {"pv_gain_stop", real(&IStepConfig::pv_gain_stop)},
        {"k_initial", count(&IStepConfig::k_initial)},
        {"k_max", count(&IStepConfig::k_max)},
        {"backfit_passes_initial", count(&IStepConfig::backfit_passes_initial)},
        {"backfit_passes", count(&IStepConfig::backfit_passes)},
        {"joint_refine_max_iter", count(&IStepConfig::joint_refine_max_iter)},
        {"alpha_grid_size",
         [](IStepConfig& c, const std::string& k, const std::string& v) {
             c.fitter.alpha_grid_size = parse_count(k, v);
         }},
        {"omega_grid_size",
         [](IStepConfig& c, const std::string& k, const std::string& v) {
             c.fitter.omega_grid_size = parse_count(k, v);
         }},
        {"omega_grid_range",
         [](IStepConfig& c, const std::string& k, const std::string& v) {
             std::tie(c.fitter.omega_grid_min, c.fitter.omega_grid_max) = parse_pair(k, v);
         }},
        {"refine_max_evals",
         [](IStepConfig& c, const std::string& k, const std::string& v) {
             c.fitter.refine_max_evals = parse_count(k, v);
         }},
    };
    return table;
}

void check_window(const char* name, double lo, double hi) {
    if (!(lo <= hi)) {
        throw std::invalid_argument(std::string("config: empty window ") + name);
    }
}

}  // namespace

const LabelWindow& IStepConfig::window(WaveLabel label) const {
    switch (label) {
    case WaveLabel::P: return p_window;
    case WaveLabel::Q: return q_window;
    case WaveLabel::S: return s_window;
    case WaveLabel::T: return t_window;
    case WaveLabel::R: break;
    }
    throw std::invalid_argument("R has no plausibility window; it is chosen by the R criteria");
}

void IStepConfig::validate() const {
    if (!(r_beta_window.first < r_beta_window.second)) {
        throw std::invalid_argument("config: empty window r_beta_window");
    }
    if (!(r_omega_max > 0.0)) {
        throw std::invalid_argument("config: r_omega_max must be positive");
    }
    if (!(r_qrs_proximity >= 0.0)) {
        throw std::invalid_argument("config: r_qrs_proximity must be nonnegative");
    }
    check_window("noise_omega", noise_omega_min, noise_omega_max);
    check_window("p_omega_window", p_window.omega_lo, p_window.omega_hi);
    check_window("q_omega_window", q_window.omega_lo, q_window.omega_hi);
    check_window("s_omega_window", s_window.omega_lo, s_window.omega_hi);
    check_window("t_omega_window", t_window.omega_lo, t_window.omega_hi);
    if (k_initial == 0 || k_initial > k_max) {
        throw std::invalid_argument("config: need 1 <= k_initial <= k_max");
    }
    if (max_iter == 0) {
        throw std::invalid_argument("config: max_iter must be at least 1");
    }
    if (backfit_passes_initial == 0 || backfit_passes == 0) {
        throw std::invalid_argument("config: backfitting needs at least one pass");
    }
    (void)fitter.omega_grid();
}

IStepConfig parse_istep_config(std::istream& in, IStepConfig base) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
        it->second(base, key, value);
    }
    base.validate();
    return base;
}

IStepConfig load_istep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path);
    }
    return parse_istep_config(in);
}

void write_istep_config(std::ostream& out, const IStepConfig& cfg) {
    std::ostringstream s;
    s << std::setprecision(17);
    auto pair = [&s](const char* key, double lo, double hi) {
        s << key << " = " << lo << ',' << hi << '\n';
    };
    pair("r_beta_window", cfg.r_beta_window.first, cfg.r_beta_window.second);
    s << "r_omega_max = " << cfg.r_omega_max << '\n';
    s << "r_qrs_proximity = " << cfg.r_qrs_proximity << '\n';
    s << "r_second_max = " << (cfg.r_second_max ? "true" : "false") << '\n';
    s << "noise_pv_max = " << cfg.noise_pv_max << '\n';
    s << "noise_omega_min = " << cfg.noise_omega_min << '\n';
    s << "noise_omega_max = " << cfg.noise_omega_max << '\n';
    const std::pair<const char*, const LabelWindow*> windows[] = {
        {"p", &cfg.p_window}, {"q", &cfg.q_window}, {"s", &cfg.s_window}, {"t", &cfg.t_window}};
    for (const auto& [name, w] : windows) {
        pair((std::string(name) + "_omega_window").c_str(), w->omega_lo, w->omega_hi);
        pair((std::string(name) + "_beta_window").c_str(), w->beta.lo, w->beta.hi);
    }
    s << "q_sharper_than_p = " << (cfg.q_sharper_than_p ? "true" : "false") << '\n';
    s << "max_iter = " << cfg.max_iter << '\n';
    s << "pv_gain_stop = " << cfg.pv_gain_stop << '\n';
    s << "k_initial = " << cfg.k_initial << '\n';
    s << "k_max = " << cfg.k_max << '\n';
    s << "backfit_passes_initial = " << cfg.backfit_passes_initial << '\n';
    s << "backfit_passes = " << cfg.backfit_passes << '\n';
    s << "joint_refine_max_iter = " << cfg.joint_refine_max_iter << '\n';
    s << "alpha_grid_size = " << cfg.fitter.alpha_grid_size << '\n';
    s << "omega_grid_size = " << cfg.fitter.omega_grid_size << '\n';
    pair("omega_grid_range", cfg.fitter.omega_grid_min, cfg.fitter.omega_grid_max);
    s << "refine_max_evals = " << cfg.fitter.refine_max_evals << '\n';
    out << s.str();
}

}  // namespace fmmbeat
