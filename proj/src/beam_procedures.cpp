#include "nfb/beam_procedures.hpp"

#include "nfb/error.hpp"
#include "nfb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace nfb {

namespace {

double n2(const ArrayConfig& cfg) {
    const double n = cfg.num_antennas();
    return n * n;
}

double matched_gain(const ArrayConfig& cfg, BeamCoord c, std::span<const cdouble> h) {
    const auto w = chirp_vector(cfg, c.theta, c.s_hat);
    return std::abs(inner(w.span(), h));
}

// Peak offset of a sampled Gaussian from three log gains, clamped to +-h.
double log_parabola(double gm, double g0, double gp, double h) {
    const double lm = std::log(gm);
    const double l0 = std::log(g0);
    const double lp = std::log(gp);
    const double den = 2.0 * l0 - lp - lm;
    if (!(den > 0.0))
        return 0.0;
    const double off = 0.5 * h * (lp - lm) / den;
    return std::clamp(off, -h, h);
}

} // namespace

const char* to_string(Stage stage) noexcept {
    switch (stage) {
    case Stage::Exhaustive: return "exhaustive";
    case Stage::Coarse: return "coarse";
    case Stage::Fine: return "fine";
    case Stage::Refine: return "refine";
    }
    return "unknown";
}

Codebook polar_codebook(const ArrayConfig& cfg, int angles, int rows) {
    if (angles < 1 || rows < 1)
        throw Error(ErrorCode::Configuration, "codebook needs A >= 1 and S >= 1");
    auto grid = BeamspaceGrid::uniform(angles, rows, BeamspaceGrid::default_s_max(cfg, rows));
    Codebook book;
    book.words.reserve(grid.size());
    for (int l = 0; l < grid.row_count(); ++l)
        for (int k = 0; k < grid.angle_count(); ++k) {
            const BeamCoord c{grid.theta(k), grid.s_hat(l)};
            book.words.push_back({frft_basis(cfg, c.theta, c.s_hat), c, Stage::Exhaustive});
        }
    book.lattice = std::move(grid);
    return book;
}

double coarse_offset(const ArrayConfig& cfg, int k1) {
    return cfg.angle_scale() / (static_cast<double>(k1) * cfg.num_antennas());
}

Codebook chirp_codebook(const ArrayConfig& cfg, int k1, double probe) {
    if (k1 < 2)
        throw Error(ErrorCode::Configuration, "chirp codebook needs K1 >= 2");
    if (k1 > cfg.num_antennas())
        throw Error(ErrorCode::OverResolved, "K1 = " + std::to_string(k1) + " exceeds the antenna count");
    if (!(probe >= 0.0))
        throw Error(ErrorCode::InvalidCoordinate, "probe row must be non-negative");
    const double s = probe + coarse_offset(cfg, k1);
    Codebook book;
    for (int k = 0; k < k1; ++k) {
        const BeamCoord c{-1.0 + (2.0 * k + 1.0) / k1, s};
        book.words.push_back({frft_basis(cfg, c.theta, c.s_hat), c, Stage::Coarse});
    }
    return book;
}

double exhaustive_optimum(std::span<const cdouble> h, const ArrayConfig& cfg) {
    return beamspace_fast(h, BeamspaceGrid::defaults(cfg), cfg).peak().gain;
}

TrainingResult train_exhaustive(std::span<const cdouble> h, const Codebook& book, const ArrayConfig& cfg,
                                MeasurementModel& mm) {
    if (book.words.empty())
        throw Error(ErrorCode::Configuration, "codebook is empty");
    const auto n = static_cast<std::size_t>(cfg.num_antennas());
    if (h.size() != n)
        throw Error(ErrorCode::Shape, "channel length does not match the array");

    std::vector<cdouble> clean(book.size());
    if (book.lattice) {
        const auto map = beamspace_fast(h, *book.lattice, cfg);
        std::copy(map.coefficients().begin(), map.coefficients().end(), clean.begin());
    } else {
        for (std::size_t i = 0; i < book.size(); ++i)
            clean[i] = inner(book.words[i].weights.span(), h);
    }

    TrainingResult out{};
    out.log.reserve(book.size());
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < book.size(); ++i) {
        const cdouble y = mm.observe_value(clean[i], n);
        out.log.push_back({Stage::Exhaustive, book.words[i].label, y});
        if (std::abs(y) > best_gain) {
            best_gain = std::abs(y);
            best = i;
        }
    }
    out.selected = book.words[best].label;
    out.pilots = out.log.size();
    out.gain_ratio = std::abs(clean[best]) / exhaustive_optimum(h, cfg);
    return out;
}

std::vector<FineSlot> fine_layout(int s) {
    if (s < 1)
        throw Error(ErrorCode::Configuration, "stage 2 needs S >= 1");
    static const std::vector<FineSlot> base{{-1.0, 2.0}, {1.0, 2.0}, {-1.0, 2.6}, {1.0, 2.6},
                                            {-0.5, 1.3}, {0.5, 1.3}, {0.0, 1.7}};
    std::vector<FineSlot> out;
    for (int i = 0; i < s; ++i) {
        if (i < static_cast<int>(base.size())) {
            out.push_back(base[static_cast<std::size_t>(i)]);
        } else {
            const int j = i - static_cast<int>(base.size());
            out.push_back({j % 2 == 0 ? -0.75 : 0.75, 1.0 + 0.3 * (j / 2 + 1)});
        }
    }
    return out;
}

HierarchicalTrainer::HierarchicalTrainer(const ArrayConfig& cfg, HierarchicalOptions opts)
    : cfg_(cfg), opts_(opts) {
    const int n = cfg.num_antennas();
    if (opts_.s_search <= 0.0) {
        const auto b = field_boundaries(cfg);
        const double d = cfg.spacing();
        opts_.s_search = d * d / (cfg.wavelength() * b.fresnel) + 4.0 / n2(cfg);
    }
    if (opts_.probe < 0.0)
        opts_.probe = opts_.s_search;
    coarse_ = chirp_codebook(cfg, opts_.k1, opts_.probe);

    const auto layout = fine_layout(opts_.s);
    const double ds = coarse_offset(cfg, opts_.k1);
    fine_.resize(static_cast<std::size_t>(opts_.k1));
    for (int k = 0; k < opts_.k1; ++k) {
        const double tc = coarse_.words[static_cast<std::size_t>(k)].label.theta;
        for (const auto& slot : layout) {
            const BeamCoord c{tc + slot.u / opts_.k1, slot.mult * ds};
            fine_[static_cast<std::size_t>(k)].words.push_back({chirp_vector(cfg, c.theta, c.s_hat), c, Stage::Fine});
        }
    }

    // Hypothesis lattice: 1/(4N) in angle, 1/N^2 in surrogate distance.
    const int a = 8 * n;
    std::vector<double> rows;
    for (int l = 0; l / n2(cfg) <= opts_.s_search + 1e-15; ++l)
        rows.push_back(l / n2(cfg));
    const BeamspaceGrid grid(a, std::move(rows));

    std::vector<BeamspaceMap> coarse_maps;
    coarse_maps.reserve(coarse_.size());
    for (const auto& w : coarse_.words)
        coarse_maps.push_back(beamspace_fast(w.weights.span(), grid, cfg));

    hyp_.resize(static_cast<std::size_t>(opts_.k1));
    parallel_for(static_cast<std::size_t>(opts_.k1), [&](std::size_t k) {
        std::vector<BeamspaceMap> fine_maps;
        for (const auto& w : fine_[k].words)
            fine_maps.push_back(beamspace_fast(w.weights.span(), grid, cfg));

        const double tc = coarse_.words[k].label.theta;
        // coarse lobes widen by N * probe / kappa on each side for users below the probe row
        const double reach = 1.0 / opts_.k1 + n * opts_.probe / cfg.angle_scale() + 2.0 / n;
        const double lo = tc - reach;
        const double hi = tc + reach;
        const int k_lo = std::max(0, static_cast<int>(std::ceil((lo + 1.0) * a / 2.0)));
        const int k_hi = std::min(a - 1, static_cast<int>(std::floor((hi + 1.0) * a / 2.0)));

        auto& hy = hyp_[k];
        for (int l = 0; l < grid.row_count(); ++l)
            for (int j = k_lo; j <= k_hi; ++j) {
                hy.coords.push_back({grid.theta(j), grid.s_hat(l)});
                double e = 0.0;
                // <w_i, b> is the conjugate of the map coefficient <b, w_i>
                for (const auto& m : coarse_maps) {
                    hy.response.push_back(std::conj(m.coeff(l, j)));
                    e += std::norm(m.coeff(l, j));
                }
                for (const auto& m : fine_maps) {
                    hy.response.push_back(std::conj(m.coeff(l, j)));
                    e += std::norm(m.coeff(l, j));
                }
                hy.energy.push_back(e);
            }
    });
}

TrainingResult HierarchicalTrainer::train(std::span<const cdouble> h, MeasurementModel& mm) const {
    const auto n = static_cast<std::size_t>(cfg_.num_antennas());
    if (h.size() != n)
        throw Error(ErrorCode::Shape, "channel length does not match the array");

    TrainingResult out{};
    std::vector<cdouble> y;
    std::size_t sector = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < coarse_.size(); ++k) {
        const auto& w = coarse_.words[k];
        const cdouble obs = mm.observe(w.weights.span(), h);
        out.log.push_back({Stage::Coarse, w.label, obs});
        y.push_back(obs);
        if (std::abs(obs) > best) {
            best = std::abs(obs);
            sector = k;
        }
    }
    for (const auto& w : fine_[sector].words) {
        const cdouble obs = mm.observe(w.weights.span(), h);
        out.log.push_back({Stage::Fine, w.label, obs});
        y.push_back(obs);
    }

    const auto& hy = hyp_[sector];
    const std::size_t m = y.size();
    std::size_t pick = 0;
    double score = -1.0;
    for (std::size_t p = 0; p < hy.coords.size(); ++p) {
        if (!(hy.energy[p] > 0.0))
            continue;
        cdouble z{0.0, 0.0};
        const cdouble* v = hy.response.data() + p * m;
        for (std::size_t i = 0; i < m; ++i)
            z += std::conj(v[i]) * y[i];
        const double metric = std::norm(z) / hy.energy[p];
        if (metric > score) {
            score = metric;
            pick = p;
        }
    }

    out.selected = hy.coords[pick];
    out.pilots = out.log.size();
    out.gain_ratio = matched_gain(cfg_, out.selected, h) / exhaustive_optimum(h, cfg_);
    return out;
}

TrainingResult train_hierarchical(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm, int k1,
                                  int s) {
    HierarchicalOptions opts;
    opts.k1 = k1;
    opts.s = s;
    return HierarchicalTrainer(cfg, opts).train(h, mm);
}

StencilSpacing default_stencil(const ArrayConfig& cfg) {
    return {1.0 / (cfg.num_antennas() * cfg.angle_scale()), 3.5 / n2(cfg)};
}

Estimate refine_gaussian(const Stencil& g, StencilSpacing spacing, BeamCoord center, const ArrayConfig& cfg) {
    if (!(spacing.theta > 0.0) || !(spacing.s_hat > 0.0))
        throw Error(ErrorCode::Configuration, "stencil spacing must be positive");
    for (const auto& row : g)
        for (double v : row)
            if (!(v > 0.0))
                throw Error(ErrorCode::NumericDomain, "stencil gains must be positive");
    for (const auto& row : g)
        for (double v : row)
            if (v > g[1][1])
                throw Error(ErrorCode::Stencil, "stencil center is not the maximum");

    Estimate e{};
    e.theta = center.theta + log_parabola(g[1][0], g[1][1], g[1][2], spacing.theta);
    e.s_hat = std::max(0.0, center.s_hat + log_parabola(g[0][1], g[1][1], g[2][1], spacing.s_hat));
    e.range = range_of(cfg, std::clamp(e.theta, -1.0, 1.0), e.s_hat);
    return e;
}

RefineResult refine_beam(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm, BeamCoord start,
                         StencilSpacing spacing, int max_moves, std::vector<PilotRecord>* log) {
    std::map<std::pair<int, int>, double> cache;  // (s index, theta index) -> |y|
    RefineResult out{};
    auto coord = [&](int i, int j) {
        return BeamCoord{start.theta + j * spacing.theta, start.s_hat + i * spacing.s_hat};
    };
    auto measure = [&](int i, int j) {
        const auto key = std::make_pair(i, j);
        if (auto it = cache.find(key); it != cache.end())
            return it->second;
        const auto c = coord(i, j);
        const auto w = chirp_vector(cfg, c.theta, c.s_hat);
        const cdouble y = mm.observe(w.span(), h);
        if (log)
            log->push_back({Stage::Refine, c, y});
        ++out.pilots;
        cache[key] = std::abs(y);
        return std::abs(y);
    };

    int ci = 0;
    int cj = 0;
    Stencil g{};
    for (int move = 0;; ++move) {
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                g[static_cast<std::size_t>(di + 1)][static_cast<std::size_t>(dj + 1)] = measure(ci + di, cj + dj);
        int bi = 1;
        int bj = 1;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >
                    g[static_cast<std::size_t>(bi)][static_cast<std::size_t>(bj)]) {
                    bi = i;
                    bj = j;
                }
        if ((bi == 1 && bj == 1) || move >= max_moves)
            break;
        ci += bi - 1;
        cj += bj - 1;
    }

    out.center = coord(ci, cj);
    out.best_gain = 0.0;
    for (const auto& [key, v] : cache)
        out.best_gain = std::max(out.best_gain, v);
    try {
        out.estimate = refine_gaussian(g, spacing, out.center, cfg);
        out.interpolated = true;
    } catch (const Error&) {
        // unsettled climb or a dead stencil: fall back to the best measured cell
        auto best = std::max_element(cache.begin(), cache.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
        const auto c = coord(best->first.first, best->first.second);
        const double s = std::max(0.0, c.s_hat);
        out.estimate = {c.theta, s, range_of(cfg, std::clamp(c.theta, -1.0, 1.0), s)};
        out.interpolated = false;
    }
    return out;
}

RefineResult refine_from_grid(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm,
                              BeamCoord start, StencilSpacing spacing, std::vector<PilotRecord>* log) {
    const auto wide = refine_beam(h, cfg, mm, start, {2.0 * spacing.theta, 2.0 * spacing.s_hat}, 4, log);
    auto out = refine_beam(h, cfg, mm, {wide.estimate.theta, wide.estimate.s_hat}, spacing, 4, log);
    out.pilots += wide.pilots;
    out.best_gain = std::max(out.best_gain, wide.best_gain);
    return out;
}

double TrackResult::mean_rho() const noexcept {
    if (slots.empty())
        return 0.0;
    double acc = 0.0;
    for (const auto& s : slots)
        acc += s.rho;
    return acc / static_cast<double>(slots.size());
}

TrackResult track(std::span<const SourceLocation> trajectory, const ArrayConfig& cfg, ChannelModel model,
                  MeasurementModel& mm, const TrackPolicy& policy, const HierarchicalTrainer& trainer) {
    if (!(policy.gamma >= 0.0 && policy.gamma < 1.0))
        throw Error(ErrorCode::Configuration, "gamma must lie in [0, 1)");
    TrackResult out{};
    if (trajectory.empty())
        return out;

    const auto fit = fit_high_mainlobe(cfg);
    const auto spacing = default_stencil(cfg);
    const double budget = policy.gamma > 0.0 ? -std::log(policy.gamma) : 0.0;

    auto exponent = [&](double dt, double ds) {
        return dt * dt / (2.0 * fit.sigma_theta * fit.sigma_theta) + ds * ds / (2.0 * fit.sigma_s * fit.sigma_s);
    };

    struct Fix {
        std::size_t slot;
        BeamCoord at;
    };
    std::vector<Fix> history;
    BeamCoord beam{};
    SteeringVector w;

    auto point = [&]() {
        const auto& last = history.back();
        beam = last.at;
        if (history.size() >= 2 && budget > 0.0) {
            const auto& prev = history[history.size() - 2];
            const double dt = static_cast<double>(last.slot - prev.slot);
            const double vt = (last.at.theta - prev.at.theta) / dt;
            const double vs = (last.at.s_hat - prev.at.s_hat) / dt;
            const double q1 = exponent(vt, vs);
            if (q1 > 0.0) {
                const double tau = std::sqrt(policy.lead * budget / q1);
                beam = {last.at.theta + tau * vt, std::max(0.0, last.at.s_hat + tau * vs)};
            }
        }
        w = chirp_vector(cfg, beam.theta, beam.s_hat);
    };

    auto predict = [&](std::size_t t) {
        const auto& last = history.back();
        if (history.size() < 2)
            return last.at;
        const auto& prev = history[history.size() - 2];
        const double span = static_cast<double>(last.slot - prev.slot);
        const double k = static_cast<double>(t - last.slot) / span;
        return BeamCoord{last.at.theta + k * (last.at.theta - prev.at.theta),
                         last.at.s_hat + k * (last.at.s_hat - prev.at.s_hat)};
    };

    {
        const auto h = steering(cfg, trajectory[0], model);
        const auto before = mm.draws();
        const auto tr = trainer.train(h.span(), mm);
        const auto rb = refine_beam(h.span(), cfg, mm, tr.selected, spacing);
        out.training_pilots = static_cast<std::size_t>(mm.draws() - before);
        history.push_back({0, {rb.estimate.theta, rb.estimate.s_hat}});
        point();
        out.slots.push_back({std::abs(inner(w.span(), h.span())), false});
    }

    int failures = 0;
    for (std::size_t t = 1; t < trajectory.size(); ++t) {
        const auto h = steering(cfg, trajectory[t], model);
        bool retrained = false;
        if (!out.lost) {
            const cdouble y = mm.observe(w.span(), h.span());
            ++out.monitor_pilots;
            const auto p = predict(t);
            const double predicted = std::exp(-exponent(p.theta - beam.theta, p.s_hat - beam.s_hat));
            if (std::abs(y) < policy.gamma || predicted < policy.gamma) {
                BeamCoord start = p;
                if (!(std::abs(start.theta) < 1.0))
                    start = beam;
                start.s_hat = std::max(0.0, start.s_hat);
                const auto rb = refine_beam(h.span(), cfg, mm, start, spacing);
                out.retrain_pilots += rb.pilots;
                ++out.retrainings;
                retrained = true;
                if (rb.best_gain < policy.fail_gain) {
                    if (++failures >= 2) {
                        out.lost = true;
                        out.lost_slot = t;
                    }
                } else {
                    failures = 0;
                    history.push_back({t, {rb.estimate.theta, rb.estimate.s_hat}});
                    point();
                }
            }
        }
        out.slots.push_back({std::abs(inner(w.span(), h.span())), retrained});
    }
    return out;
}

} // namespace nfb
