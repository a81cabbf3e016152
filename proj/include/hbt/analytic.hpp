#pragma once

#include <complex>
#include <vector>

#include "hbt/apparatus.hpp"

namespace hbt {

/// Closed-form fringe parameters for a scan of detector separation.
struct FringeLaw {
    double beta = 1.0;            // visibility degradation factor in [0, 1]
    double envelope_scale = 0.0;  // first zero of the single-slit envelope, lambda*z/b
    double fringe_period = 0.0;   // separation period of the grating comb, lambda*z/d
    int num_slits = 1;
};

FringeLaw fringe_law(const ApparatusConfig& cfg, double beta);

/// Diffraction orders of the grating: sin(theta_m) = sin(theta_0) + m*lambda/d.
/// Orders with |sin| > 1 are evanescent and omitted.
struct GratingOrder {
    int m = 0;
    double angle = 0.0;           // radians
    double plane_position = 0.0;  // z * tan(angle)
};

std::vector<GratingOrder> grating_orders(const ApparatusConfig& cfg, int max_order);

/// sin(n u) / (n sin u), continuous at the poles. Squared, this is the
/// n-slit interference comb; n = 2 reduces to cos(u).
double dirichlet_kernel(int n, double u);

/// Far-field complex degree of coherence between plane points x1 and x2:
/// the normalized Fourier transform of the transmitting mask evaluated at
/// spatial frequency (x1 - x2) / (lambda z). Depends on x1 - x2 only.
std::complex<double> mutual_coherence(const ApparatusConfig& cfg, double x1, double x2);

/// Equal-time intensity correlation for point detectors with a visibility
/// degradation factor beta: 1 + beta * |mu(x1, x2)|^2.
double g2_analytic(const ApparatusConfig& cfg, double x1, double x2, double beta);

/// Mean of |mu|^2 over the two detector apertures, each discretized with
/// m_points midpoints: the expected fringe excess of an aperture-integrating
/// estimator. m_points = 1 or zero aperture reduces to |mu(x1, x2)|^2.
double aperture_pair_factor(const ApparatusConfig& cfg, double x1, double x2, int m_points);

/// 1 + beta_scale * aperture_pair_factor: the oracle an aperture-integrating
/// Monte-Carlo estimator converges to.
double g2_aperture_averaged(const ApparatusConfig& cfg, double x1, double x2,
                            double beta_scale, int m_points);

/// Spatial visibility factor: |mu|^2 averaged over both detector apertures at
/// zero nominal separation, by 2-D composite Simpson quadrature.
double beta_spatial(const ApparatusConfig& cfg);

/// Temporal visibility factor: mean of |gamma(tau)|^2 over a coincidence
/// window of total width 2 * coincidence_window_near. Closed form per
/// lineshape; exponential gives (tau0 / Tw) * (1 - exp(-Tw / tau0)) with
/// gamma(tau) = exp(-|tau| / tau0) and Tw the full window width.
double beta_temporal(const ApparatusConfig& cfg);

}  // namespace hbt
