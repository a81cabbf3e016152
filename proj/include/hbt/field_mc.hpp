#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hbt/apparatus.hpp"
#include "hbt/rng.hpp"

namespace hbt {

/// Spatial discretization and quadrature knobs for the field Monte Carlo.
struct FieldOptions {
    int emitter_density = 32;    // emitters per full groove width
    int aperture_points = 8;     // midpoint sub-points per detector aperture
    bool fresnel_phase = false;  // keep the quadratic source phase
};

/// One frozen realization of the quasi-monochromatic source: independent
/// circular complex Gaussian amplitudes on a fixed emitter grid.
struct FieldRealization {
    std::vector<double> emitter_positions;
    std::vector<std::complex<double>> amplitudes;
};

/// Sampled field in the detection plane.
struct PlaneField {
    std::vector<double> positions;  // ascending
    std::vector<std::complex<double>> amplitudes;
};

struct DetectorSample {
    double position = 0.0;
    double intensity = 0.0;
};

/// Midpoint emitter grid over the mask: pitch groove_width / density, at
/// least one emitter per interval. Deterministic in the mask alone.
std::vector<double> emitter_grid(const SlitMask& mask, int density);

/// Fill n independent circular complex Gaussian amplitudes (unit mean square
/// modulus) in split re/im form. Shared by sample_field and the bulk
/// correlation path so both draw identically from a given stream.
void draw_amplitudes(std::mt19937_64& gen, std::size_t n, double* re, double* im);

FieldRealization sample_field(const SlitMask& mask, int density, std::mt19937_64& gen);

/// Precomputed propagation kernel exp(-i 2 pi x xi / (lambda z)) for a fixed
/// emitter grid and fixed plane points; applying it to an amplitude vector is
/// the hot loop of every ensemble, so the kernel is stored split re/im.
/// An incidence angle adds the tilt phase exp(i 2 pi xi sin(theta0) / lambda);
/// fresnel keeps the quadratic phase exp(i pi xi^2 / (lambda z)).
class PropagationMatrix {
  public:
    PropagationMatrix(std::span<const double> emitters, std::span<const double> plane_points,
                      const ApparatusConfig& cfg, bool fresnel_phase);

    std::size_t rows() const { return n_points_; }
    std::size_t cols() const { return n_emitters_; }

    /// out[p] = sum_j M[p][j] * (a_re[j] + i a_im[j]); out arrays sized rows().
    void apply(const double* a_re, const double* a_im, double* out_re, double* out_im) const;

  private:
    std::size_t n_points_ = 0;
    std::size_t n_emitters_ = 0;
    std::vector<double> re_, im_;  // row-major [point][emitter]
};

/// Direct evaluation at arbitrary plane points (builds the kernel on the fly).
PlaneField propagate(const FieldRealization& field, const ApparatusConfig& cfg,
                     std::span<const double> plane_points, bool fresnel_phase = false);

/// Mean intensity over the detector aperture centered at position, from plane
/// samples. Throws if the sampled grid does not cover the aperture.
DetectorSample detect(const PlaneField& plane, const ApparatusConfig& cfg, double position);

}  // namespace hbt
