#include "hbt/field_mc.hpp"

#include <cmath>
#include <stdexcept>

namespace hbt {

std::vector<double> emitter_grid(const SlitMask& mask, int density) {
    if (density < 1) throw std::invalid_argument("emitter_grid: density >= 1");
    if (mask.intervals.empty()) throw std::invalid_argument("emitter_grid: empty slit mask");
    if (!(mask.groove_width > 0.0)) throw std::invalid_argument("emitter_grid: groove_width > 0");
    const double pitch = mask.groove_width / density;
    std::vector<double> grid;
    for (const auto& [l, r] : mask.intervals) {
        const double w = r - l;
        const int n = std::max(1, static_cast<int>(std::lround(w / pitch)));
        for (int i = 0; i < n; ++i) grid.push_back(l + (i + 0.5) * w / n);
    }
    return grid;
}

void draw_amplitudes(std::mt19937_64& gen, std::size_t n, double* re, double* im) {
    NormalGen ng(gen);
    for (std::size_t i = 0; i < n; ++i) {
        re[i] = ng() * M_SQRT1_2;
        im[i] = ng() * M_SQRT1_2;
    }
}

FieldRealization sample_field(const SlitMask& mask, int density, std::mt19937_64& gen) {
    FieldRealization field;
    field.emitter_positions = emitter_grid(mask, density);
    const std::size_t n = field.emitter_positions.size();
    std::vector<double> re(n), im(n);
    draw_amplitudes(gen, n, re.data(), im.data());
    field.amplitudes.resize(n);
    for (std::size_t i = 0; i < n; ++i) field.amplitudes[i] = {re[i], im[i]};
    return field;
}

PropagationMatrix::PropagationMatrix(std::span<const double> emitters,
                                     std::span<const double> plane_points,
                                     const ApparatusConfig& cfg, bool fresnel_phase)
    : n_points_(plane_points.size()), n_emitters_(emitters.size()) {
    re_.resize(n_points_ * n_emitters_);
    im_.resize(n_points_ * n_emitters_);
    const double inv_lz = 1.0 / cfg.lambda_z();
    const double tilt = 2.0 * M_PI * std::sin(cfg.incidence_angle) / cfg.wavelength;
    for (std::size_t p = 0; p < n_points_; ++p) {
        const double x = plane_points[p];
        double* row_re = re_.data() + p * n_emitters_;
        double* row_im = im_.data() + p * n_emitters_;
        for (std::size_t j = 0; j < n_emitters_; ++j) {
            const double xi = emitters[j];
            double phase = -2.0 * M_PI * x * xi * inv_lz + tilt * xi;
            if (fresnel_phase) phase += M_PI * xi * xi * inv_lz;
            row_re[j] = std::cos(phase);
            row_im[j] = std::sin(phase);
        }
    }
}

void PropagationMatrix::apply(const double* a_re, const double* a_im, double* out_re,
                              double* out_im) const {
    for (std::size_t p = 0; p < n_points_; ++p) {
        const double* row_re = re_.data() + p * n_emitters_;
        const double* row_im = im_.data() + p * n_emitters_;
        double acc_re = 0.0;
        double acc_im = 0.0;
        for (std::size_t j = 0; j < n_emitters_; ++j) {
            acc_re += row_re[j] * a_re[j] - row_im[j] * a_im[j];
            acc_im += row_re[j] * a_im[j] + row_im[j] * a_re[j];
        }
        out_re[p] = acc_re;
        out_im[p] = acc_im;
    }
}

PlaneField propagate(const FieldRealization& field, const ApparatusConfig& cfg,
                     std::span<const double> plane_points, bool fresnel_phase) {
    const std::size_t n = field.amplitudes.size();
    if (n != field.emitter_positions.size())
        throw std::invalid_argument("propagate: emitter/amplitude size mismatch");
    PropagationMatrix kernel(field.emitter_positions, plane_points, cfg, fresnel_phase);
    std::vector<double> a_re(n), a_im(n);
    for (std::size_t i = 0; i < n; ++i) {
        a_re[i] = field.amplitudes[i].real();
        a_im[i] = field.amplitudes[i].imag();
    }
    PlaneField plane;
    plane.positions.assign(plane_points.begin(), plane_points.end());
    std::vector<double> out_re(plane_points.size()), out_im(plane_points.size());
    kernel.apply(a_re.data(), a_im.data(), out_re.data(), out_im.data());
    plane.amplitudes.resize(plane_points.size());
    for (std::size_t p = 0; p < plane_points.size(); ++p)
        plane.amplitudes[p] = {out_re[p], out_im[p]};
    return plane;
}

DetectorSample detect(const PlaneField& plane, const ApparatusConfig& cfg, double position) {
    if (plane.positions.empty()) throw std::invalid_argument("detect: empty plane field");
    const double half = cfg.detector_aperture / 2.0;
    const double lo = position - half;
    const double hi = position + half;
    const double spacing =
        plane.positions.size() > 1 ? plane.positions[1] - plane.positions[0] : 0.0;
    const double tol = 1e-9 * (cfg.detector_aperture + spacing + std::abs(position)) + 1e-300;
    if (plane.positions.front() - spacing / 2.0 > lo + tol ||
        plane.positions.back() + spacing / 2.0 < hi - tol)
        throw std::runtime_error("detect: sampled plane does not cover the detector aperture");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < plane.positions.size(); ++i) {
        const double x = plane.positions[i];
        if (x < lo - tol || x > hi + tol) continue;
        acc += std::norm(plane.amplitudes[i]);
        ++count;
    }
    if (count == 0) throw std::runtime_error("detect: no plane samples inside the aperture");
    return {position, acc / static_cast<double>(count)};
}

}  // namespace hbt
