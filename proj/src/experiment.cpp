#include "nfb/experiment.hpp"

#include "nfb/beamspace.hpp"
#include "nfb/csv.hpp"
#include "nfb/error.hpp"
#include "nfb/mainlobe.hpp"
#include "nfb/measurement.hpp"
#include "nfb/parallel.hpp"
#include "nfb/sparse_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#ifndef NFB_VERSION
#define NFB_VERSION "0.0.0"
#endif

namespace nfb {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kCommonKeys{"kind", "n", "wavelength", "spacing", "seed", "out"};

const std::map<ExperimentKind, std::vector<std::string>>& kind_keys() {
    static const std::map<ExperimentKind, std::vector<std::string>> keys{
        {ExperimentKind::Beamspace, {"angles", "rows", "s_max", "user_theta", "user_r", "model"}},
        {ExperimentKind::Widths, {"n_list"}},
        {ExperimentKind::Gaussian, {"threshold"}},
        {ExperimentKind::Psp, {"ds_list", "resolution"}},
        {ExperimentKind::Train, {"snr_db", "k1", "s", "trials", "model", "theta_max"}},
        {ExperimentKind::Track, {"snr_db", "k1", "s", "model", "gamma", "slots", "speed", "theta0", "r0"}},
        {ExperimentKind::Estimate, {"angles", "rows", "s_max", "snr_db", "paths", "trials"}},
    };
    return keys;
}

bool stochastic(ExperimentKind k) {
    return k == ExperimentKind::Train || k == ExperimentKind::Track || k == ExperimentKind::Estimate;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::Configuration, "config key \"" + key + "\": " + why);
}

class Reader {
public:
    explicit Reader(const json& j) : j_(j) {}

    bool has(const std::string& key) const { return j_.contains(key); }

    void integer(const std::string& key, int& dst, int lo) const {
        if (!has(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            bad(key, "expected an integer");
        const auto x = v.get<long long>();
        if (x < lo || x > 1'000'000'000)
            bad(key, "must be at least " + std::to_string(lo));
        dst = static_cast<int>(x);
    }

    void real(const std::string& key, double& dst) const {
        if (!has(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number())
            bad(key, "expected a number");
        dst = v.get<double>();
        if (!std::isfinite(dst))
            bad(key, "must be finite");
    }

    void text(const std::string& key, std::string& dst) const {
        if (!has(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_string())
            bad(key, "expected a string");
        dst = v.get<std::string>();
    }

    template <class T>
    void list(const std::string& key, std::vector<T>& dst) const {
        if (!has(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_array() || v.empty())
            bad(key, "expected a non-empty array");
        dst.clear();
        for (const auto& e : v) {
            if constexpr (std::is_integral_v<T>) {
                if (!e.is_number_integer())
                    bad(key, "expected integers");
            } else {
                if (!e.is_number())
                    bad(key, "expected numbers");
            }
            dst.push_back(e.get<T>());
        }
    }

private:
    const json& j_;
};

void require(bool ok, const std::string& key, const std::string& why) {
    if (!ok)
        bad(key, why);
}

const char* model_name(ChannelModel m) { return m == ChannelModel::Exact ? "exact" : "fresnel"; }

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct KindResult {
    ojson metrics;
    bool pass;
};

KindResult run_beamspace(const ExperimentConfig& c, std::ostream& os) {
    const auto cfg = c.array();
    const auto grid = c.grid();
    const SourceLocation loc{c.user_r, c.user_theta};
    const auto h = steering(cfg, loc, c.model);
    const auto map = beamspace_fast(h.span(), grid, cfg);
    write_csv(os, map);
    const auto pk = map.peak();
    const auto split = energy_split(map);
    const auto user = surrogate_coords(cfg, loc);
    ojson m;
    m["user_s_hat"] = user.s_hat;
    m["peak_theta"] = grid.theta(pk.angle);
    m["peak_s_hat"] = grid.s_hat(pk.row);
    m["peak_gain"] = pk.gain;
    m["energy_high"] = split.high / split.total;
    m["energy_low"] = split.low / split.total;
    m["energy_side"] = split.side / split.total;
    m["region"] = to_string(classify_region(cfg, c.user_r));
    return {m, true};
}

KindResult run_widths(const ExperimentConfig& c, std::ostream& os) {
    csv::row(os, {"n", "axis", "predicted", "measured", "rel_dev"});
    ojson rows = ojson::array();
    bool pass = true;
    for (int n : c.n_list) {
        const ArrayConfig cfg(n, c.wavelength, c.spacing);
        const auto pred = predict_high_mainlobe_widths(cfg);
        const double wa = width_3db(cross_section(cfg, {0.0, 0.0}, Axis::Angle, 1.5 * pred.angle, pred.angle / 200.0));
        const double ws =
            width_3db(cross_section(cfg, {0.0, 0.0}, Axis::Surrogate, 1.5 * pred.surrogate, pred.surrogate / 200.0));
        const double da = (wa - pred.angle) / pred.angle;
        const double dsur = (ws - pred.surrogate) / pred.surrogate;
        const auto ns = std::to_string(n);
        csv::row(os, {ns, "angle", csv::number(pred.angle), csv::number(wa), csv::number(da)});
        csv::row(os, {ns, "surrogate", csv::number(pred.surrogate), csv::number(ws), csv::number(dsur)});
        pass = pass && std::abs(da) <= 0.15 && std::abs(dsur) <= 0.15;
        ojson r;
        r["n"] = n;
        r["predicted_angle"] = pred.angle;
        r["measured_angle"] = wa;
        r["predicted_surrogate"] = pred.surrogate;
        r["measured_surrogate"] = ws;
        r["validated"] = pred.validated;
        rows.push_back(r);
    }
    ojson m;
    m["widths"] = rows;
    m["tolerance"] = 0.15;
    return {m, pass};
}

KindResult run_gaussian(const ExperimentConfig& c, std::ostream& os) {
    const auto cfg = c.array();
    const auto w = predict_high_mainlobe_widths(cfg);
    const auto region = sample_mainlobe(cfg, {0.0, 0.0}, c.threshold, w.angle / 40.0, w.surrogate / 40.0);
    const auto fit = gaussian_fit(region);
    csv::row(os, {"theta", "s_hat", "gain", "fit"});
    for (const auto& g : region)
        csv::row(os, {csv::number(g.theta), csv::number(g.s_hat), csv::number(g.gain),
                      csv::number(fit.evaluate(g.theta, g.s_hat))});
    ojson m;
    m["samples"] = region.size();
    m["peak_gain"] = fit.peak_gain;
    m["sigma_theta"] = fit.sigma_theta;
    m["sigma_s"] = fit.sigma_s;
    m["width_3db_theta"] = fit.width_3db_theta();
    m["width_3db_s"] = fit.width_3db_s();
    m["mean_abs_dev"] = fit.mean_abs_dev;
    m["mean_abs_dev_power"] = fit.mean_abs_dev_power;
    m["tolerance"] = 0.01;
    return {m, fit.mean_abs_dev <= 0.01};
}

KindResult run_psp(const ExperimentConfig& c, std::ostream& os) {
    const auto cfg = c.array();
    const double n = c.n;
    const double res = c.resolution / n;
    csv::row(os, {"n", "ds", "w_pred", "w_meas", "g_pred", "g_meas"});
    bool pass = true;
    std::vector<double> xs;
    std::vector<double> ys;
    ojson rows = ojson::array();
    for (double u : c.ds_list) {
        const double ds = u / (n * n);
        const auto pred = psp_predict(cfg, ds);
        const auto meas = low_mainlobe_measure(cfg, ds, res);
        csv::row(os, {std::to_string(c.n), csv::number(ds), csv::number(pred.width), csv::number(meas.width),
                      csv::number(pred.average_gain), csv::number(meas.average_gain)});
        const double werr = std::abs(meas.width - pred.width);
        const double gerr = std::abs(meas.average_gain / pred.average_gain - 1.0);
        pass = pass && werr <= 1.0 / n + res && gerr <= 0.05;
        xs.push_back(ds);
        ys.push_back(meas.width);
        ojson r;
        r["ds"] = ds;
        r["width_error_n"] = werr * n;
        r["gain_rel_error"] = gerr;
        rows.push_back(r);
    }
    ojson m;
    m["points"] = rows;
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        const double slope = sxy / sxx;
        const double target = 2.0 * n / cfg.angle_scale();
        m["slope"] = slope;
        m["slope_target"] = target;
        pass = pass && std::abs(slope / target - 1.0) <= 0.10;
    }
    return {m, pass};
}

double fraction(const std::vector<TrainTrial>& t, double TrainTrial::*field, double level) {
    const auto hits = std::count_if(t.begin(), t.end(), [&](const TrainTrial& x) { return x.*field >= level; });
    return static_cast<double>(hits) / static_cast<double>(t.size());
}

double mean_of(const std::vector<TrainTrial>& t, double TrainTrial::*field) {
    double acc = 0.0;
    for (const auto& x : t)
        acc += x.*field;
    return acc / static_cast<double>(t.size());
}

KindResult run_train(const ExperimentConfig& c, std::ostream& os) {
    const auto trials = train_trials(c);
    csv::row(os, {"seed", "user_theta", "user_r", "method", "pilots", "rho"});
    double refine_pilots = 0.0;
    for (const auto& t : trials) {
        const auto seed = std::to_string(t.seed);
        const auto th = csv::number(t.theta);
        const auto r = csv::number(t.range);
        csv::row(os, {seed, th, r, "exhaustive", std::to_string(t.pilots_exhaustive), csv::number(t.rho_exhaustive)});
        csv::row(os, {seed, th, r, "hierarchical", std::to_string(t.pilots_hierarchical),
                      csv::number(t.rho_hierarchical)});
        csv::row(os, {seed, th, r, "hierarchical+refine", std::to_string(t.pilots_refined),
                      csv::number(t.rho_refined)});
        refine_pilots += static_cast<double>(t.pilots_refined);
    }
    const double frac = fraction(trials, &TrainTrial::rho_refined, 0.95);
    ojson m;
    m["trials"] = trials.size();
    m["pilots_exhaustive"] = trials.front().pilots_exhaustive;
    m["pilots_hier"] = trials.front().pilots_hierarchical;
    m["mean_pilots_refined"] = refine_pilots / static_cast<double>(trials.size());
    m["mean_rho_exhaustive"] = mean_of(trials, &TrainTrial::rho_exhaustive);
    m["mean_rho_hier"] = mean_of(trials, &TrainTrial::rho_hierarchical);
    m["mean_rho_refined"] = mean_of(trials, &TrainTrial::rho_refined);
    m["frac_rho_095_hier"] = fraction(trials, &TrainTrial::rho_hierarchical, 0.95);
    m["frac_rho_095_refined"] = frac;
    m["required_fraction"] = 0.9;
    const bool pass = frac >= 0.9 && trials.front().pilots_hierarchical == static_cast<std::size_t>(c.k1 + c.s);
    return {m, pass};
}

KindResult run_track(const ExperimentConfig& c, std::ostream& os) {
    const auto res = track_scenario(c);
    csv::row(os, {"slot", "rho", "retrained"});
    for (std::size_t t = 0; t < res.slots.size(); ++t)
        csv::row(os, {std::to_string(t), csv::number(res.slots[t].rho), res.slots[t].retrained ? "1" : "0"});
    ojson m;
    m["mean_rho"] = res.mean_rho();
    m["retrainings"] = res.retrainings;
    m["training_pilots"] = res.training_pilots;
    m["retrain_pilots"] = res.retrain_pilots;
    m["monitor_pilots"] = res.monitor_pilots;
    m["lost"] = res.lost;
    if (res.lost)
        m["lost_slot"] = res.lost_slot;
    m["required_mean_rho"] = 0.85;
    return {m, res.mean_rho() >= 0.85 && !res.lost};
}

KindResult run_estimate(const ExperimentConfig& c, std::ostream& os) {
    const auto trials = estimate_trials(c);
    csv::row(os, {"seed", "snr_db", "L", "nmse_db", "support_exact"});
    double lin = 0.0;
    std::size_t ok = 0;
    for (const auto& t : trials) {
        csv::row(os, {std::to_string(t.seed), csv::number(c.snr_db), std::to_string(c.paths), csv::number(t.nmse_db),
                      t.support_exact ? "1" : "0"});
        lin += std::pow(10.0, t.nmse_db / 10.0);
        ok += t.support_exact ? 1 : 0;
    }
    const double mean_db = 10.0 * std::log10(lin / static_cast<double>(trials.size()));
    const double rate = static_cast<double>(ok) / static_cast<double>(trials.size());
    ojson m;
    m["trials"] = trials.size();
    m["mean_nmse_db"] = mean_db;
    m["support_rate"] = rate;
    m["required_nmse_db"] = -20.0;
    m["required_support_rate"] = 0.95;
    return {m, mean_db <= -20.0 && rate >= 0.95};
}

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::Configuration, "cannot write " + p.string());
    f << body;
}

} // namespace

const char* to_string(ExperimentKind kind) noexcept {
    switch (kind) {
    case ExperimentKind::Beamspace: return "beamspace";
    case ExperimentKind::Widths: return "widths";
    case ExperimentKind::Gaussian: return "gaussian";
    case ExperimentKind::Psp: return "psp";
    case ExperimentKind::Train: return "train";
    case ExperimentKind::Track: return "track";
    case ExperimentKind::Estimate: return "estimate";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
    for (auto k : {ExperimentKind::Beamspace, ExperimentKind::Widths, ExperimentKind::Gaussian, ExperimentKind::Psp,
                   ExperimentKind::Train, ExperimentKind::Track, ExperimentKind::Estimate})
        if (name == to_string(k))
            return k;
    return std::nullopt;
}

ArrayConfig ExperimentConfig::array() const { return ArrayConfig(n, wavelength, spacing); }

BeamspaceGrid ExperimentConfig::grid() const {
    const double nn = static_cast<double>(n) * n;
    return BeamspaceGrid::uniform(angles, rows, s_max / nn);
}

ojson ExperimentConfig::to_json() const {
    ojson j;
    j["kind"] = to_string(kind);
    j["n"] = n;
    j["wavelength"] = wavelength;
    j["spacing"] = spacing;
    if (seed)
        j["seed"] = *seed;
    if (out)
        j["out"] = *out;
    for (const auto& key : kind_keys().at(kind)) {
        if (key == "angles") j[key] = angles;
        else if (key == "rows") j[key] = rows;
        else if (key == "s_max") j[key] = s_max;
        else if (key == "user_theta") j[key] = user_theta;
        else if (key == "user_r") j[key] = user_r;
        else if (key == "model") j[key] = model_name(model);
        else if (key == "n_list") j[key] = n_list;
        else if (key == "threshold") j[key] = threshold;
        else if (key == "ds_list") j[key] = ds_list;
        else if (key == "resolution") j[key] = resolution;
        else if (key == "snr_db") j[key] = snr_db;
        else if (key == "k1") j[key] = k1;
        else if (key == "s") j[key] = s;
        else if (key == "trials") j[key] = trials;
        else if (key == "theta_max") j[key] = theta_max;
        else if (key == "gamma") j[key] = gamma;
        else if (key == "slots") j[key] = slots;
        else if (key == "speed") j[key] = speed;
        else if (key == "theta0") j[key] = theta0;
        else if (key == "r0") j[key] = r0;
        else if (key == "paths") j[key] = paths;
    }
    return j;
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Configuration, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error(ErrorCode::Configuration, "config must be a JSON object");

    ExperimentConfig c;
    if (!j.contains("kind"))
        bad("kind", "missing");
    if (!j["kind"].is_string())
        bad("kind", "expected a string");
    const auto kind = parse_kind(j["kind"].get<std::string>());
    if (!kind)
        bad("kind", "unknown experiment kind \"" + j["kind"].get<std::string>() + "\"");
    c.kind = *kind;

    const auto& extra = kind_keys().at(c.kind);
    for (const auto& [key, _] : j.items())
        if (std::find(kCommonKeys.begin(), kCommonKeys.end(), key) == kCommonKeys.end() &&
            std::find(extra.begin(), extra.end(), key) == extra.end())
            bad(key, std::string("unknown key for kind ") + to_string(c.kind));

    const Reader r(j);
    if (c.kind == ExperimentKind::Estimate) {
        c.n = 256;
        c.snr_db = 20.0;
    }
    r.integer("n", c.n, 2);
    r.real("wavelength", c.wavelength);
    require(c.wavelength > 0.0, "wavelength", "must be positive");
    c.spacing = 0.5 * c.wavelength;
    r.real("spacing", c.spacing);
    require(c.spacing > 0.0, "spacing", "must be positive");

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            bad("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    } else if (stochastic(c.kind)) {
        bad("seed", "required for kind " + std::string(to_string(c.kind)));
    }
    if (j.contains("out")) {
        std::string o;
        r.text("out", o);
        c.out = o;
    }

    r.integer("angles", c.angles, 1);
    r.integer("rows", c.rows, 1);
    r.real("s_max", c.s_max);
    require(c.s_max > 0.0, "s_max", "must be positive");
    r.list("n_list", c.n_list);
    if (c.n_list.empty())
        c.n_list = {c.n};
    for (int v : c.n_list)
        require(v >= 2, "n_list", "entries must be at least 2");
    r.real("threshold", c.threshold);
    require(c.threshold > 0.0 && c.threshold < 1.0, "threshold", "must lie in (0, 1)");
    r.list("ds_list", c.ds_list);
    for (double v : c.ds_list)
        require(v > 0.0 && std::isfinite(v), "ds_list", "entries must be positive");
    r.real("resolution", c.resolution);
    require(c.resolution > 0.0 && c.resolution <= 0.25, "resolution", "must lie in (0, 0.25]");
    r.real("snr_db", c.snr_db);
    r.integer("k1", c.k1, 2);
    require(c.k1 <= c.n, "k1", "must not exceed n");
    r.integer("s", c.s, 1);
    r.integer("trials", c.trials, 1);
    if (j.contains("model")) {
        std::string m;
        r.text("model", m);
        if (m == "exact")
            c.model = ChannelModel::Exact;
        else if (m == "fresnel")
            c.model = ChannelModel::Fresnel;
        else
            bad("model", "expected \"exact\" or \"fresnel\"");
    }
    r.real("theta_max", c.theta_max);
    require(c.theta_max > 0.0 && c.theta_max < 1.0, "theta_max", "must lie in (0, 1)");
    r.real("gamma", c.gamma);
    require(c.gamma >= 0.0 && c.gamma < 1.0, "gamma", "must lie in [0, 1)");
    r.integer("slots", c.slots, 1);
    r.real("speed", c.speed);
    require(c.speed >= 0.0, "speed", "must be non-negative");
    r.real("theta0", c.theta0);
    require(std::abs(c.theta0) < 1.0, "theta0", "must lie in (-1, 1)");
    r.real("r0", c.r0);
    require(c.r0 > 0.0, "r0", "must be positive");
    r.integer("paths", c.paths, 1);
    r.real("user_theta", c.user_theta);
    require(std::abs(c.user_theta) < 1.0, "user_theta", "must lie in (-1, 1)");
    r.real("user_r", c.user_r);
    require(c.user_r > 0.0, "user_r", "must be positive");
    return c;
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t i) noexcept { return base + i; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::vector<TrainTrial> train_trials(const ExperimentConfig& c) {
    const auto cfg = c.array();
    const auto book = polar_codebook(cfg);
    HierarchicalOptions opts;
    opts.k1 = c.k1;
    opts.s = c.s;
    const HierarchicalTrainer trainer(cfg, opts);
    const auto bounds = field_boundaries(cfg);
    const auto spacing = default_stencil(cfg);
    const std::uint64_t base = c.seed.value_or(0);

    std::vector<TrainTrial> out(static_cast<std::size_t>(c.trials));
    parallel_for(out.size(), [&](std::size_t i) {
        const auto seed = trial_seed(base, i);
        std::mt19937_64 rng(derive_seed(seed, 0));
        std::uniform_real_distribution<double> ut(-c.theta_max, c.theta_max);
        std::uniform_real_distribution<double> ur(std::log(bounds.fresnel), std::log(bounds.rayleigh));
        const double theta = ut(rng);
        const double range = std::exp(ur(rng));
        const auto h = steering(cfg, {range, theta}, c.model);
        const double best = exhaustive_optimum(h.span(), cfg);

        TrainTrial t{};
        t.seed = seed;
        t.theta = theta;
        t.range = range;

        MeasurementModel m1(c.snr_db, derive_seed(seed, 1));
        const auto ex = train_exhaustive(h.span(), book, cfg, m1);
        t.pilots_exhaustive = static_cast<std::size_t>(m1.draws());
        t.rho_exhaustive = ex.gain_ratio;

        MeasurementModel m2(c.snr_db, derive_seed(seed, 2));
        const auto hi = trainer.train(h.span(), m2);
        t.pilots_hierarchical = static_cast<std::size_t>(m2.draws());
        t.rho_hierarchical = hi.gain_ratio;
        const auto rb = refine_beam(h.span(), cfg, m2, hi.selected, spacing);
        t.pilots_refined = static_cast<std::size_t>(m2.draws());
        const auto w = chirp_vector(cfg, rb.estimate.theta, rb.estimate.s_hat);
        t.rho_refined = std::abs(inner(w.span(), h.span())) / best;
        out[i] = t;
    });
    return out;
}

std::vector<EstimateTrial> estimate_trials(const ExperimentConfig& c) {
    const auto cfg = c.array();
    const auto grid = c.grid();
    const auto cells = static_cast<std::uint64_t>(grid.size());
    if (static_cast<std::uint64_t>(c.paths) > cells)
        bad("paths", "exceeds the number of grid cells");
    const std::uint64_t base = c.seed.value_or(0);

    std::vector<EstimateTrial> out(static_cast<std::size_t>(c.trials));
    parallel_for(out.size(), [&](std::size_t i) {
        const auto seed = trial_seed(base, i);
        std::mt19937_64 rng(derive_seed(seed, 0));
        std::uniform_int_distribution<std::uint64_t> cell(0, cells - 1);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        std::set<GridCell> truth;
        std::vector<Atom> atoms;
        while (static_cast<int>(truth.size()) < c.paths) {
            const auto idx = cell(rng);
            const GridCell gc{static_cast<int>(idx / static_cast<std::uint64_t>(grid.angle_count())),
                              static_cast<int>(idx % static_cast<std::uint64_t>(grid.angle_count()))};
            if (!truth.insert(gc).second)
                continue;
            atoms.push_back({grid.theta(gc.angle), grid.s_hat(gc.row), std::polar(1.0, phase(rng))});
        }
        const auto ch = build_channel(cfg, atoms);
        std::mt19937_64 noise_rng(derive_seed(seed, 1));
        const auto y = add_noise(ch.h, c.snr_db, noise_rng);
        StopRule stop;
        stop.paths = c.paths;
        const auto rep = omp_estimate(y, grid, cfg, stop);
        const std::set<GridCell> found(rep.support.begin(), rep.support.end());
        out[i] = {seed, nmse(ch.h, rep.estimate), found == truth};
    });
    return out;
}

std::vector<SourceLocation> track_trajectory(const ExperimentConfig& c) {
    std::vector<SourceLocation> traj;
    const double step = c.speed * 2.0 / c.n;
    for (int t = 0; t < c.slots; ++t)
        traj.push_back({c.r0, c.theta0 + t * step});
    return traj;
}

TrackResult track_scenario(const ExperimentConfig& c) {
    const auto cfg = c.array();
    HierarchicalOptions opts;
    opts.k1 = c.k1;
    opts.s = c.s;
    const HierarchicalTrainer trainer(cfg, opts);
    MeasurementModel mm(c.snr_db, derive_seed(c.seed.value_or(0), 0));
    TrackPolicy policy;
    policy.gamma = c.gamma;
    const auto traj = track_trajectory(c);
    return track(traj, cfg, c.model, mm, policy, trainer);
}

RunOutcome run(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "config.json", c.to_json().dump(2) + "\n");

    std::ostringstream body;
    KindResult res;
    switch (c.kind) {
    case ExperimentKind::Beamspace: res = run_beamspace(c, body); break;
    case ExperimentKind::Widths: res = run_widths(c, body); break;
    case ExperimentKind::Gaussian: res = run_gaussian(c, body); break;
    case ExperimentKind::Psp: res = run_psp(c, body); break;
    case ExperimentKind::Train: res = run_train(c, body); break;
    case ExperimentKind::Track: res = run_track(c, body); break;
    case ExperimentKind::Estimate: res = run_estimate(c, body); break;
    }

    RunOutcome out;
    out.csv = out_dir / (std::string(to_string(c.kind)) + ".csv");
    write_file(out.csv, body.str());
    out.pass = res.pass;
    out.summary["version"] = NFB_VERSION;
    out.summary["kind"] = to_string(c.kind);
    out.summary["config"] = c.to_json();
    out.summary["metrics"] = res.metrics;
    out.summary["pass"] = res.pass;
    write_file(out_dir / "summary.json", out.summary.dump(2) + "\n");
    return out;
}

void write_error(const std::filesystem::path& out_dir, std::string_view code, std::string_view message) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    ojson j;
    j["error"] = std::string(code);
    j["message"] = std::string(message);
    std::ofstream f(out_dir / "error.json", std::ios::binary);
    if (f)
        f << j.dump(2) << "\n";
}

} // namespace nfb
