#pragma once

#include "nfb/array_channel.hpp"
#include "nfb/beamspace.hpp"
#include "nfb/mainlobe.hpp"
#include "nfb/measurement.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nfb {

enum class Stage { Exhaustive, Coarse, Fine, Refine };

const char* to_string(Stage stage) noexcept;

struct Codeword {
    SteeringVector weights;
    BeamCoord label;
    Stage stage;
};

struct Codebook {
    std::vector<Codeword> words;
    /// Set when the codewords are exactly the points of a beamspace lattice
    /// (row-major), which lets the sweep use the fast transform.
    std::optional<BeamspaceGrid> lattice;

    std::size_t size() const noexcept { return words.size(); }
};

/// One codeword per point of a uniform A x S grid (default grid spacing).
Codebook polar_codebook(const ArrayConfig& cfg, int angles = BeamspaceGrid::kDefaultAngles,
                        int rows = BeamspaceGrid::kDefaultRows);

/// Surrogate offset that makes a low mainlobe 2/K1 wide: kappa / (K1 N).
double coarse_offset(const ArrayConfig& cfg, int k1);

/// K1 chirps at theta_c = -1 + (2k+1)/K1 and s = probe + coarse_offset.
Codebook chirp_codebook(const ArrayConfig& cfg, int k1, double probe = 0.0);

struct PilotRecord {
    Stage stage;
    BeamCoord label;
    cdouble observation;
};

struct TrainingResult {
    BeamCoord selected;
    std::size_t pilots;
    /// |<w*, h>| over the best noiseless gain of the default exhaustive
    /// codebook. Off-lattice selections can exceed 1.
    double gain_ratio;
    std::vector<PilotRecord> log;
};

/// Best noiseless gain over the default polar codebook.
double exhaustive_optimum(std::span<const cdouble> h, const ArrayConfig& cfg);

TrainingResult train_exhaustive(std::span<const cdouble> h, const Codebook& book, const ArrayConfig& cfg,
                                MeasurementModel& mm);

struct HierarchicalOptions {
    int k1 = 8;
    int s = 7;
    /// Largest surrogate hypothesis; 0 picks the broadside value at the
    /// Fresnel distance plus a margin of 4/N^2.
    double s_search = 0.0;
    /// Row the coarse chirps are offset from; negative means s_search, so
    /// every user in range sees a low mainlobe at least 2/K1 wide.
    double probe = -1.0;
};

/// Two-stage training with K1 + S pilots.
///
/// Stage 1 sweeps the coarse chirps and keeps the strongest sector. Stage 2
/// sweeps S chirps anchored at that sector's edges and centre with larger
/// surrogate offsets, so their low mainlobes cut the sector at different
/// slants. The estimate is the maximum-likelihood (theta, s) over a lattice
/// of 1/(4N) x 1/N^2 hypotheses covering the sector plus the overlap with
/// its neighbours, using all K1 + S complex observations. The hypothesis
/// responses are precomputed once per trainer.
class HierarchicalTrainer {
public:
    HierarchicalTrainer(const ArrayConfig& cfg, HierarchicalOptions opts = {});

    TrainingResult train(std::span<const cdouble> h, MeasurementModel& mm) const;

    const Codebook& coarse() const noexcept { return coarse_; }
    /// Stage-2 codewords for sector k.
    const Codebook& fine(int sector) const { return fine_.at(static_cast<std::size_t>(sector)); }
    const HierarchicalOptions& options() const noexcept { return opts_; }

private:
    struct Hypotheses {
        std::vector<BeamCoord> coords;
        std::vector<cdouble> response;  ///< coords.size() x (K1 + S), row-major
        std::vector<double> energy;
    };

    ArrayConfig cfg_;
    HierarchicalOptions opts_;
    Codebook coarse_;
    std::vector<Codebook> fine_;
    std::vector<Hypotheses> hyp_;
};

TrainingResult train_hierarchical(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm,
                                  int k1 = 8, int s = 7);

/// (u, m): stage-2 codeword at theta_c + u / K1 with surrogate offset m / (K1 N).
struct FineSlot {
    double u;
    double mult;
};
std::vector<FineSlot> fine_layout(int s);

struct StencilSpacing {
    double theta;
    double s_hat;
};

/// Half the predicted 3 dB widths: (1/(N kappa), 3.5/N^2).
StencilSpacing default_stencil(const ArrayConfig& cfg);

struct Estimate {
    double theta;
    double s_hat;
    double range;
};

/// gains[i][j] at (center.theta + (j-1) h_theta, center.s_hat + (i-1) h_s).
using Stencil = std::array<std::array<double, 3>, 3>;

/// Log-parabolic peak interpolation on each axis independently.
Estimate refine_gaussian(const Stencil& gains, StencilSpacing spacing, BeamCoord center, const ArrayConfig& cfg);

struct RefineResult {
    Estimate estimate;
    BeamCoord center;      ///< stencil center the estimate was taken around
    double best_gain;      ///< largest measured |y|
    std::size_t pilots;
    bool interpolated;     ///< false if the climb never settled on a maximal center
};

/// Measures 3x3 stencils, re-centring on the best cell up to `max_moves`
/// times (previous measurements are reused), then interpolates.
RefineResult refine_beam(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm, BeamCoord start,
                         StencilSpacing spacing, int max_moves = 4, std::vector<PilotRecord>* log = nullptr);

/// For starts on a coarse lattice (exhaustive training): a climb at twice the
/// spacing, then refine_beam from its estimate. Between lattice rows the
/// user can sit outside the high mainlobe, where a fine stencil stalls on a
/// local maximum. Pilots of both passes are counted.
RefineResult refine_from_grid(std::span<const cdouble> h, const ArrayConfig& cfg, MeasurementModel& mm,
                              BeamCoord start, StencilSpacing spacing, std::vector<PilotRecord>* log = nullptr);

struct TrackPolicy {
    double gamma = 1.0 / 1.4142135623730951;
    /// Refinement fails when the best stencil gain is below this.
    double fail_gain = 0.5;
    /// Beam leads the dead-reckoned track so the user enters the ellipse at
    /// this fraction of the allowed Gaussian exponent.
    double lead = 0.95;
};

struct TrackSlot {
    double rho;
    bool retrained;
};

struct TrackResult {
    std::vector<TrackSlot> slots;
    std::size_t retrainings = 0;
    std::size_t training_pilots = 0;  ///< initial alignment
    std::size_t retrain_pilots = 0;
    std::size_t monitor_pilots = 0;
    bool lost = false;
    std::size_t lost_slot = 0;
    double mean_rho() const noexcept;
};

/// Initial hierarchical training plus refinement, then per slot: one monitor
/// pilot on the held beam, and a stencil re-measurement whenever the monitor
/// or the Gaussian-predicted gain at the dead-reckoned user position drops
/// below gamma. Two consecutive failed refinements mark the user lost.
TrackResult track(std::span<const SourceLocation> trajectory, const ArrayConfig& cfg, ChannelModel model,
                  MeasurementModel& mm, const TrackPolicy& policy, const HierarchicalTrainer& trainer);

} // namespace nfb
