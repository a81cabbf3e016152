#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "hbt/analytic.hpp"
#include "hbt/correlation.hpp"
#include "hbt/field_mc.hpp"
#include "hbt/runner.hpp"
#include "helpers.hpp"

using hbt::ApparatusConfig;

TEST_CASE("emitter grid covers the mask at the requested density") {
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);

    SUBCASE("32 per full slit") {
        const auto grid = hbt::emitter_grid(mask, 32);
        REQUIRE(grid.size() == 5 * 32);
        for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
        // Midpoints of the first slit [-0.44, -0.36] mm at a 2.5 um pitch.
        CHECK(grid[0] == doctest::Approx(-0.44e-3 + 1.25e-6).epsilon(1e-10));
        for (const double x : grid) {
            bool inside = false;
            for (const auto& [l, r] : mask.intervals) inside |= (x >= l && x <= r);
            CHECK(inside);
        }
    }

    SUBCASE("clipped intervals get proportionally fewer emitters") {
        cfg.illum_diameter = 0.4e-3;  // outer slits clipped to 0.04 mm
        const auto grid = hbt::emitter_grid(hbt::slit_mask(cfg), 32);
        CHECK(grid.size() == 16 + 32 + 16);
    }

    SUBCASE("at least one emitter per interval") {
        const auto grid = hbt::emitter_grid(mask, 1);
        CHECK(grid.size() == 5);
    }

    CHECK_THROWS_AS(hbt::emitter_grid(mask, 0), std::invalid_argument);
}

TEST_CASE("sampled amplitudes are circular complex Gaussians") {
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    const std::size_t reps = 2000;

    std::complex<double> mean{0.0, 0.0};
    std::complex<double> pseudo{0.0, 0.0};  // E[a^2], zero iff phase-circular
    double power = 0.0;
    double fourth = 0.0;
    std::size_t n_total = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        std::mt19937_64 gen = hbt::make_stream(4242, r);
        const hbt::FieldRealization field = hbt::sample_field(mask, 32, gen);
        REQUIRE(field.amplitudes.size() == 160);
        for (const auto& a : field.amplitudes) {
            mean += a;
            pseudo += a * a;
            power += std::norm(a);
            fourth += std::norm(a) * std::norm(a);
            ++n_total;
        }
    }
    const double n = static_cast<double>(n_total);
    // Unit mean square modulus, zero mean, zero pseudo-variance, and a
    // thermal fourth moment E|a|^4 = 2 E|a|^2 squared.
    CHECK(std::abs(mean) / n <= 4.0 / std::sqrt(n) * M_SQRT1_2);
    CHECK(std::abs(pseudo) / n <= 4.0 / std::sqrt(n));
    CHECK(power / n == doctest::Approx(1.0).epsilon(4.0 / std::sqrt(n)));
    CHECK(fourth / n == doctest::Approx(2.0).epsilon(10.0 / std::sqrt(n)));
}

TEST_CASE("streams are deterministic and distinct") {
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    std::mt19937_64 g1 = hbt::make_stream(99, 7);
    std::mt19937_64 g2 = hbt::make_stream(99, 7);
    std::mt19937_64 g3 = hbt::make_stream(99, 8);
    const auto a = hbt::sample_field(mask, 8, g1);
    const auto b = hbt::sample_field(mask, 8, g2);
    const auto c = hbt::sample_field(mask, 8, g3);
    REQUIRE(a.amplitudes.size() == b.amplitudes.size());
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
        CHECK(a.amplitudes[i] == b.amplitudes[i]);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
        any_diff |= (a.amplitudes[i] != c.amplitudes[i]);
    CHECK(any_diff);
}

TEST_CASE("propagate matches a direct transform") {
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    std::mt19937_64 gen = hbt::make_stream(11, 0);
    const hbt::FieldRealization field = hbt::sample_field(mask, 4, gen);
    const std::vector<double> points = {-8e-3, -1.1e-3, 0.0, 0.4e-3, 5e-3, 9.7e-3};

    for (const bool fresnel : {false, true}) {
        const hbt::PlaneField plane = hbt::propagate(field, cfg, points, fresnel);
        REQUIRE(plane.amplitudes.size() == points.size());
        for (std::size_t p = 0; p < points.size(); ++p) {
            std::complex<double> want{0.0, 0.0};
            for (std::size_t j = 0; j < field.amplitudes.size(); ++j) {
                double phase = -2.0 * M_PI * points[p] * field.emitter_positions[j] /
                               cfg.lambda_z();
                if (fresnel)
                    phase += M_PI * field.emitter_positions[j] * field.emitter_positions[j] /
                             cfg.lambda_z();
                want += field.amplitudes[j] *
                        std::complex<double>(std::cos(phase), std::sin(phase));
            }
            CHECK(plane.amplitudes[p].real() == doctest::Approx(want.real()).epsilon(1e-12));
            CHECK(plane.amplitudes[p].imag() == doctest::Approx(want.imag()).epsilon(1e-12));
        }
    }
}

TEST_CASE("propagation kernel equals propagate") {
    ApparatusConfig cfg;
    cfg.incidence_angle = 0.002;  // exercise the tilt phase
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    std::mt19937_64 gen = hbt::make_stream(12, 3);
    const hbt::FieldRealization field = hbt::sample_field(mask, 8, gen);
    const std::vector<double> points = {-2e-3, 0.0, 1e-3, 6.3e-3};

    const hbt::PropagationMatrix kernel(field.emitter_positions, points, cfg, false);
    const std::size_t n = field.amplitudes.size();
    std::vector<double> a_re(n), a_im(n), out_re(points.size()), out_im(points.size());
    for (std::size_t i = 0; i < n; ++i) {
        a_re[i] = field.amplitudes[i].real();
        a_im[i] = field.amplitudes[i].imag();
    }
    kernel.apply(a_re.data(), a_im.data(), out_re.data(), out_im.data());
    const hbt::PlaneField plane = hbt::propagate(field, cfg, points, false);
    for (std::size_t p = 0; p < points.size(); ++p) {
        CHECK(out_re[p] == doctest::Approx(plane.amplitudes[p].real()).epsilon(1e-13));
        CHECK(out_im[p] == doctest::Approx(plane.amplitudes[p].imag()).epsilon(1e-13));
    }
}

TEST_CASE("detect averages the aperture and polices coverage") {
    ApparatusConfig cfg;
    hbt::PlaneField plane;
    for (int i = -60; i <= 60; ++i) {
        const double x = i * 25e-6;
        plane.positions.push_back(x);
        plane.amplitudes.emplace_back(std::sin(x * 3000.0), std::cos(x * 1000.0));
    }

    SUBCASE("mean of the covered samples") {
        const hbt::DetectorSample sample = hbt::detect(plane, cfg, 0.2e-3);
        double want = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < plane.positions.size(); ++i) {
            if (plane.positions[i] < 0.2e-3 - 1e-3 || plane.positions[i] > 0.2e-3 + 1e-3) continue;
            want += std::norm(plane.amplitudes[i]);
            ++n;
        }
        CHECK(n == 81);
        CHECK(sample.intensity == doctest::Approx(want / n).epsilon(1e-14));
        CHECK(sample.position == 0.2e-3);
    }

    SUBCASE("aperture sticking out of the sampled plane throws") {
        CHECK_THROWS_AS(hbt::detect(plane, cfg, 1.2e-3), std::runtime_error);
        CHECK_THROWS_AS(hbt::detect(plane, cfg, -1.2e-3), std::runtime_error);
    }

    SUBCASE("vanishing aperture picks the point sample") {
        cfg.detector_aperture = 1e-30;
        const hbt::DetectorSample sample = hbt::detect(plane, cfg, 0.5e-3);
        CHECK(sample.intensity ==
              doctest::Approx(std::norm(plane.amplitudes[80])).epsilon(1e-14));
    }
}

TEST_CASE("ensemble coherence converges to the mask transform") {
    // The far-field degree of coherence of the delta-correlated emitters must
    // reproduce the normalized mask transform; this pins the whole spatial
    // model against the closed form.
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    const std::vector<double> grid = hbt::emitter_grid(mask, 32);
    const std::vector<double> seps = {0.5e-3, 1.58e-3, 3.16e-3, 6.32e-3, 9.5e-3};
    std::vector<double> points = {0.0};
    for (const double s : seps) points.push_back(s);

    const hbt::PropagationMatrix kernel(grid, points, cfg, false);
    const std::size_t n_em = grid.size();
    const std::size_t reps = 10000;
    std::vector<double> a_re(n_em), a_im(n_em), e_re(points.size()), e_im(points.size());
    std::vector<double> sum_re(seps.size(), 0.0), sq_re(seps.size(), 0.0);
    std::vector<double> sum_im(seps.size(), 0.0), sq_im(seps.size(), 0.0);
    double i0_sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        std::mt19937_64 gen = hbt::make_stream(31337, r);
        hbt::draw_amplitudes(gen, n_em, a_re.data(), a_im.data());
        kernel.apply(a_re.data(), a_im.data(), e_re.data(), e_im.data());
        const std::complex<double> e0{e_re[0], e_im[0]};
        i0_sum += std::norm(e0);
        for (std::size_t s = 0; s < seps.size(); ++s) {
            const std::complex<double> es{e_re[s + 1], e_im[s + 1]};
            const std::complex<double> v = e0 * std::conj(es);
            sum_re[s] += v.real();
            sq_re[s] += v.real() * v.real();
            sum_im[s] += v.imag();
            sq_im[s] += v.imag() * v.imag();
        }
    }
    const double n = static_cast<double>(n_em);
    CHECK(i0_sum / reps / n == doctest::Approx(1.0).epsilon(0.05));
    for (std::size_t s = 0; s < seps.size(); ++s) {
        const double mean_re = sum_re[s] / reps;
        const double mean_im = sum_im[s] / reps;
        const double sem_re = std::sqrt((sq_re[s] / reps - mean_re * mean_re) / reps);
        const double sem_im = std::sqrt((sq_im[s] / reps - mean_im * mean_im) / reps);
        const std::complex<double> want = hbt::mutual_coherence(cfg, 0.0, seps[s]) * n;
        CHECK(std::abs(mean_re - want.real()) <= 3.5 * sem_re);
        CHECK(std::abs(mean_im - want.imag()) <= 3.5 * sem_im);
    }
}

TEST_CASE("ensemble intensity is fringe-free and Parseval-flat") {
    ApparatusConfig cfg;
    const hbt::SlitMask mask = hbt::slit_mask(cfg);
    const std::vector<double> grid = hbt::emitter_grid(mask, 32);
    std::vector<double> points;
    for (int i = -20; i <= 20; ++i) points.push_back(i * 0.5e-3);

    const hbt::PropagationMatrix kernel(grid, points, cfg, false);
    const std::size_t n_em = grid.size();
    const std::size_t reps = 4000;
    std::vector<double> a_re(n_em), a_im(n_em), e_re(points.size()), e_im(points.size());
    std::vector<double> mean_i(points.size(), 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
        std::mt19937_64 gen = hbt::make_stream(2024, r);
        hbt::draw_amplitudes(gen, n_em, a_re.data(), a_im.data());
        kernel.apply(a_re.data(), a_im.data(), e_re.data(), e_im.data());
        for (std::size_t p = 0; p < points.size(); ++p)
            mean_i[p] += e_re[p] * e_re[p] + e_im[p] * e_im[p];
    }
    for (double& v : mean_i) v /= static_cast<double>(reps);

    // No first-order fringe at the comb frequency d / (lambda z).
    const double freq = cfg.groove_spacing / cfg.lambda_z();
    CHECK(hbt::fringe_frequency_ratio(points, mean_i, freq) <= 5.0);

    // Mean plane intensity equals the total source power at every point;
    // grid average within a few standard errors.
    double avg = 0.0;
    for (const double v : mean_i) avg += v;
    avg /= static_cast<double>(mean_i.size());
    CHECK(avg / static_cast<double>(n_em) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dropping the quadratic source phase is benign at this geometry") {
    // Same draws with and without the quadratic phase; the systematic shift
    // at the fringe extrema must stay within the Monte-Carlo resolution.
    ApparatusConfig cfg;
    hbt::ScanSpec spec;
    spec.mode = hbt::ScanMode::FixedD1;
    spec.positions = {1.26e-3, 6.27e-3};  // comb minimum and principal peak
    spec.ensemble_size = 4000;
    hbt::EstimatorOptions opt;
    opt.point_detectors = true;
    hbt::EstimatorOptions opt_f = opt;
    opt_f.field.fresnel_phase = true;
    const hbt::CorrelationResult plain = hbt::estimate_g2(cfg, spec, 555, opt);
    const hbt::CorrelationResult fresnel = hbt::estimate_g2(cfg, spec, 555, opt_f);
    for (std::size_t i = 0; i < spec.positions.size(); ++i) {
        const double tol =
            3.0 * std::hypot(plain.stderr_g2[i], fresnel.stderr_g2[i]);
        CHECK(std::abs(plain.g2[i] - fresnel.g2[i]) <= tol);
    }
}
