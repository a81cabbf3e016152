#include "hbt/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace hbt {

namespace {

/// sin(u)/u, stable near zero.
double sinc(double u) {
    if (std::abs(u) < 1e-8) return 1.0 - u * u / 6.0;
    return std::sin(u) / u;
}

}  // namespace

FringeLaw fringe_law(const ApparatusConfig& cfg, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("fringe_law: beta outside [0, 1]");
    FringeLaw law;
    law.beta = beta;
    law.envelope_scale = cfg.lambda_z() / cfg.groove_width;
    law.fringe_period = cfg.lambda_z() / cfg.groove_spacing;
    law.num_slits = cfg.num_slits;
    return law;
}

std::vector<GratingOrder> grating_orders(const ApparatusConfig& cfg, int max_order) {
    std::vector<GratingOrder> orders;
    for (int m = -max_order; m <= max_order; ++m) {
        const double s = std::sin(cfg.incidence_angle) + m * cfg.wavelength / cfg.groove_spacing;
        if (std::abs(s) > 1.0) continue;
        GratingOrder order;
        order.m = m;
        order.angle = std::asin(s);
        order.plane_position = cfg.propagation_distance * std::tan(order.angle);
        orders.push_back(order);
    }
    return orders;
}

double dirichlet_kernel(int n, double u) {
    if (n < 1) throw std::invalid_argument("dirichlet_kernel: n >= 1");
    const double s = std::sin(u);
    // Near a pole u = k*pi both sines vanish; expand around it.
    if (std::abs(s) < 1e-9) {
        const double k = std::round(u / M_PI);
        const double d = u - k * M_PI;
        const double sign = (static_cast<long long>(k) * (n - 1)) % 2 == 0 ? 1.0 : -1.0;
        // sin(n(k pi + d)) / (n sin(k pi + d)) -> sign * (1 - (n^2 - 1) d^2 / 6)
        return sign * (1.0 - (static_cast<double>(n) * n - 1.0) * d * d / 6.0);
    }
    return std::sin(n * u) / (n * s);
}

std::complex<double> mutual_coherence(const ApparatusConfig& cfg, double x1, double x2) {
    const SlitMask mask = slit_mask(cfg);
    const double nu = (x1 - x2) / cfg.lambda_z();  // spatial frequency probed
    std::complex<double> acc{0.0, 0.0};
    double total = 0.0;
    for (const auto& [l, r] : mask.intervals) {
        const double w = r - l;
        const double c = 0.5 * (l + r);
        const double phase = -2.0 * M_PI * c * nu;
        acc += w * sinc(M_PI * w * nu) * std::complex<double>(std::cos(phase), std::sin(phase));
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("mutual_coherence: empty slit mask");
    return acc / total;
}

double g2_analytic(const ApparatusConfig& cfg, double x1, double x2, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("g2_analytic: beta outside [0, 1]");
    return 1.0 + beta * std::norm(mutual_coherence(cfg, x1, x2));
}

double aperture_pair_factor(const ApparatusConfig& cfg, double x1, double x2, int m_points) {
    if (m_points < 1) throw std::invalid_argument("aperture_pair_factor: m_points >= 1");
    const double d = cfg.detector_aperture;
    if (m_points == 1 || d <= 0.0) return std::norm(mutual_coherence(cfg, x1, x2));
    double acc = 0.0;
    for (int i = 0; i < m_points; ++i) {
        const double u1 = -d / 2.0 + (i + 0.5) * d / m_points;
        for (int j = 0; j < m_points; ++j) {
            const double u2 = -d / 2.0 + (j + 0.5) * d / m_points;
            acc += std::norm(mutual_coherence(cfg, x1 + u1, x2 + u2));
        }
    }
    return acc / (static_cast<double>(m_points) * m_points);
}

double g2_aperture_averaged(const ApparatusConfig& cfg, double x1, double x2, double beta_scale,
                            int m_points) {
    if (!(beta_scale >= 0.0 && beta_scale <= 1.0))
        throw std::invalid_argument("g2_aperture_averaged: beta_scale outside [0, 1]");
    return 1.0 + beta_scale * aperture_pair_factor(cfg, x1, x2, m_points);
}

double beta_spatial(const ApparatusConfig& cfg) {
    // Composite Simpson on a (2k+1)^2 grid over both apertures; |mu|^2 is
    // smooth on this scale so 129 nodes per axis are plenty.
    constexpr int kNodes = 129;
    const double d = cfg.detector_aperture;
    if (d <= 0.0) return std::norm(mutual_coherence(cfg, 0.0, 0.0));
    const double h = d / (kNodes - 1);
    auto weight = [](int i) { return i == 0 || i == kNodes - 1 ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
    double acc = 0.0;
    double wsum = 0.0;
    for (int i = 0; i < kNodes; ++i) {
        const double u1 = -d / 2.0 + i * h;
        for (int j = 0; j < kNodes; ++j) {
            const double u2 = -d / 2.0 + j * h;
            const double w = weight(i) * weight(j);
            acc += w * std::norm(mutual_coherence(cfg, u1, u2));
            wsum += w;
        }
    }
    return acc / wsum;
}

double beta_temporal(const ApparatusConfig& cfg) {
    const double tau0 = cfg.coherence_time;
    const double tw = 2.0 * cfg.coincidence_window_near;  // full window width
    if (tw <= 0.0) return 1.0;
    switch (cfg.lineshape) {
        case Lineshape::Exponential:
            return tau0 / tw * (1.0 - std::exp(-tw / tau0));
        case Lineshape::Gaussian:
            // |gamma|^2 = exp(-pi tau^2 / tau0^2); mean over [-tw/2, tw/2].
            return tau0 / tw * std::erf(std::sqrt(M_PI) * tw / (2.0 * tau0));
    }
    throw std::logic_error("beta_temporal: unhandled lineshape");
}

}  // namespace hbt
