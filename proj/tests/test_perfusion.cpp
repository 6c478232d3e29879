#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "perfdecon/error.hpp"
#include "perfdecon/perfusion.hpp"

using namespace perfdecon;
using namespace perfdecon::perfusion;

namespace {

ForwardModelConfig model(double k, double q, double cbf_rho) {
  ForwardModelConfig cfg;
  cfg.cbf_rho = cbf_rho;
  cfg.impulse = GammaParams(k, q);
  return cfg;
}

double rel(double value, double truth) { return std::abs(value - truth) / std::abs(truth); }

}  // namespace

TEST_CASE("synthesize builds consistent noiseless curves") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  CHECK(s.r[0] == 1.0);
  CHECK(s.k.max() == 1.0);
  CHECK(s.c_a.size() == 801);
  CHECK(oracle::rel_l2(s.c_t.values(), spectral::convolve_direct(s.c_a, s.r).values()) <= 1e-10);
  CHECK(oracle::rel_l2(s.c_ven.values(), spectral::convolve_direct(s.c_a, s.h).values()) <= 1e-10);

  const SyntheticCurves s2 = synthesize(model(10.0, 0.5, 2.5));
  CHECK(s2.k.max() == 2.5);

  ForwardModelConfig bad;
  bad.cbf_rho = 0.0;
  CHECK_THROWS_AS(synthesize(bad), InvalidArgument);
}

TEST_CASE("forward_cven") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeGrid& g = s.c_a.grid();
  std::vector<double> d(g.size(), 0.0);
  d[0] = 1.0 / g.dt();
  CHECK(oracle::max_abs_diff(forward_cven(s.c_a, TimeSeries(g, d)).values(), s.c_a.values()) <=
        1e-10 * s.c_a.max());

  // Mass conservation and smoothing.
  CHECK(std::abs(signals::integrate(s.c_ven) - signals::integrate(s.c_a)) <= 1e-6);
  CHECK(s.c_ven.max() <= s.c_a.max());
  const auto argmax = [](const TimeSeries& ts) {
    const auto v = ts.values();
    return std::max_element(v.begin(), v.end()) - v.begin();
  };
  CHECK(argmax(s.c_ven) > argmax(s.c_a));
}

TEST_CASE("forward_ct") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeGrid& g = s.c_a.grid();
  const TimeSeries ones(g, std::vector<double>(g.size(), 1.0));
  const TimeSeries step = forward_ct(s.c_a, ones, 2.0);
  double running = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    running += s.c_a[j] * g.dt();
    CHECK(std::abs(step[j] - 2.0 * running) <= 1e-12 + 1e-10 * 2.0 * running);
    if (j > 0 && s.c_a[j] > 0.0) CHECK(step[j] >= step[j - 1] - 1e-12);
  }
  CHECK(forward_ct(s.c_a, s.r, 0.0).max_abs() == 0.0);
  CHECK_THROWS_AS(forward_ct(s.c_a, s.r, -1.0), InvalidArgument);

  // Delayed and lower-peaked relative to the arterial curve.
  CHECK(s.c_t.max() < s.c_a.max());
}

TEST_CASE("recover_k") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  CHECK(oracle::rel_l2(recover_k(s.c_a, s.c_t, 0.0).values(), s.k.values()) <= 1e-8);

  const TimeSeries self = recover_k(s.c_a, s.c_a, 0.0);
  std::vector<double> delta(self.size(), 0.0);
  delta[0] = 1.0 / self.grid().dt();
  CHECK(oracle::rel_l2(self.values(), delta) <= 1e-8);
}

TEST_CASE("property: recover_k inverts forward_ct for random impulse responses") {
  oracle::Gen gen(41);
  for (int trial = 0; trial < 25; ++trial) {
    const auto [k, q] = gen.decaying_gamma(1.0, 20.0, 0.1, 2.0, 40.0);
    const double cbf_rho = gen.uniform(0.1, 5.0);
    const SyntheticCurves s = synthesize(model(k, q, cbf_rho));
    INFO("K = " << k << ", Q = " << q << ", cbf_rho = " << cbf_rho);
    CHECK(oracle::rel_l2(recover_k(s.c_a, s.c_t, 0.0).values(), s.k.values()) <= 1e-8);
  }
}

TEST_CASE("cbf_from_k") {
  const TimeGrid g(0.0, 0.05, 801);
  const TimeSeries r = signals::gamma_survival(GammaParams(10.0, 0.5), g);
  CHECK(std::abs(cbf_from_k(signals::scale_by(r, 3.7)) - 3.7) <= 1e-9);

  const SyntheticCurves s = synthesize(model(10.0, 0.5, 2.0));
  CHECK(rel(cbf_from_k(recover_k(s.c_a, s.c_t, 0.0)), 2.0) <= 0.01);

  CHECK_THROWS_AS(cbf_from_k(signals::scale_by(r, -1.0)), NumericalError);
  CHECK_THROWS_AS(cbf_from_k(TimeSeries(g)), NumericalError);
}

TEST_CASE("mtt_from_k and tth_from_k on analytic residues") {
  const TimeGrid g(0.0, 0.05, 801);
  SUBCASE("exponential transit times") {
    const TimeSeries k = signals::scale_by(signals::gamma_survival(GammaParams(1.0, 2.0), g), 1.5);
    const double cbf = cbf_from_k(k);
    const double mtt = mtt_from_k(k, cbf);
    CHECK(rel(mtt, 2.0) <= 0.01);
    CHECK(rel(tth_from_k(k, cbf, mtt), 4.0) <= 0.02);
  }
  SUBCASE("narrowing spike drives TTH to zero") {
    const TimeGrid fine(0.0, 0.0005, 20001);
    double previous = INFINITY;
    for (const auto& [kk, qq] : {std::pair{400.0, 0.01}, {1600.0, 0.0025}, {6400.0, 0.000625}}) {
      const TimeSeries k = signals::gamma_survival(GammaParams(kk, qq), fine);
      const double mtt = mtt_from_k(k, 1.0);
      const double tth = tth_from_k(k, 1.0, mtt);
      INFO("K = " << kk << ", Q = " << qq);
      CHECK(rel(mtt, 4.0) <= 1e-3);
      CHECK(tth == doctest::Approx(kk * qq * qq).epsilon(0.02));
      CHECK(tth < previous);
      previous = tth;
    }
  }
  SUBCASE("undecayed tail is rejected") {
    const TimeSeries k = signals::gamma_survival(GammaParams(10.0, 5.0), g);
    try {
      (void)mtt_from_k(k, 1.0);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("longer grid") != std::string::npos);
    }
    CHECK_THROWS_AS(tth_from_k(k, 1.0, 10.0), NumericalError);
    CHECK_NOTHROW(mtt_from_k(k, 1.0, 0.9));
  }
  SUBCASE("inconsistent inputs") {
    const TimeSeries k = signals::gamma_survival(GammaParams(10.0, 0.5), g);
    CHECK_THROWS_AS(tth_from_k(k, 1.0, 10.0), NumericalError);
    CHECK_THROWS_AS(mtt_from_k(k, 0.0), InvalidArgument);
  }
}

TEST_CASE("noiseless pipeline metrics for K = 10, Q = 0.5") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeSeries k = recover_k(s.c_a, s.c_t, 0.0);
  const double cbf = cbf_from_k(k);
  const double mtt = mtt_from_k(k, cbf);
  const double tth = tth_from_k(k, cbf, mtt);
  CHECK(rel(cbf, 1.0) <= 0.01);
  CHECK(rel(mtt, 5.0) <= 0.01);
  CHECK(rel(tth, 2.5) <= 0.02);

  // Oracle independent of the trapezoid rule: Simpson quadrature of the
  // analytic survival function on a fine grid.
  const double mtt_ref = oracle::simpson([](double t) { return boost::math::gamma_q(10.0, t / 0.5); },
                                         0.0, 40.0, 80000);
  const double m1_ref = oracle::simpson(
      [](double t) { return t * boost::math::gamma_q(10.0, t / 0.5); }, 0.0, 40.0, 80000);
  CHECK(rel(mtt_ref, 5.0) <= 1e-10);
  CHECK(rel(2.0 * m1_ref - mtt_ref * mtt_ref, 2.5) <= 1e-10);
  CHECK(rel(mtt, mtt_ref) <= 1e-6);
}

TEST_CASE("property: end-to-end noiseless identity over the parameter sweep") {
  for (double k : {5.0, 10.0}) {
    for (double q : {0.25, 0.5}) {
      for (double cbf_rho : {1.0, 2.0}) {
        const SyntheticCurves s = synthesize(model(k, q, cbf_rho));
        const TimeSeries kk = recover_k(s.c_a, s.c_t, 0.0);
        const double cbf = cbf_from_k(kk);
        const double mtt = mtt_from_k(kk, cbf);
        const double tth = tth_from_k(kk, cbf, mtt);
        INFO("K = " << k << ", Q = " << q << ", cbf_rho = " << cbf_rho);
        CHECK(rel(cbf, cbf_rho) <= 0.01);
        CHECK(rel(mtt, k * q) <= 0.01);
        CHECK(rel(tth, k * q * q) <= 0.02);
      }
    }
  }
}

TEST_CASE("scale equivariance of the metrics") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeSeries k1 = recover_k(s.c_a, s.c_t, 0.0);
  const double cbf1 = cbf_from_k(k1);
  const double mtt1 = mtt_from_k(k1, cbf1);
  const double tth1 = tth_from_k(k1, cbf1, mtt1);
  for (double lambda : {0.3, 2.0, 17.0}) {
    const TimeSeries k2 = recover_k(s.c_a, signals::scale_by(s.c_t, lambda), 0.0);
    const double cbf2 = cbf_from_k(k2);
    const double mtt2 = mtt_from_k(k2, cbf2);
    CHECK(rel(cbf2, lambda * cbf1) <= 1e-6);
    CHECK(rel(mtt2, mtt1) <= 1e-6);
    CHECK(rel(tth_from_k(k2, cbf2, mtt2), tth1) <= 1e-6);
  }
  // Doubling cbf_rho in synthesis leaves MTT unchanged.
  const SyntheticCurves s2 = synthesize(model(10.0, 0.5, 2.0));
  const TimeSeries k2 = recover_k(s2.c_a, s2.c_t, 0.0);
  CHECK(rel(mtt_from_k(k2, cbf_from_k(k2)), mtt1) <= 1e-6);
}

TEST_CASE("recover_h") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeSeries k = recover_k(s.c_a, s.c_t, 0.0);
  const double cbf = cbf_from_k(k);
  const TimeSeries h = recover_h(k, cbf, std::nullopt);
  CHECK(oracle::rel_l2(h.values(), s.h.values()) <= 1e-6);
  CHECK(std::abs(signals::integrate(h) - 1.0) <= 1e-3);
  CHECK(h.min() >= -1e-3 * h.max());

  // Metric consistency: the mean of h equals MTT.
  CHECK(rel(signals::raw_moment(h, 1), mtt_from_k(k, cbf)) <= 0.01);

  const TimeSeries periodic = recover_h(k, cbf, std::nullopt, ExtensionMode::None);
  CHECK(oracle::rel_l2(periodic.values(), s.h.values()) > 1.0);
  CHECK_THROWS_AS(recover_h(k, 0.0, std::nullopt), InvalidArgument);
}

TEST_CASE("property: recover_h is nonnegative up to 1e-3 undershoot on noiseless input") {
  oracle::Gen gen(43);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [kk, qq] = gen.decaying_gamma(2.0, 20.0, 0.1, 1.5, 30.0);
    const SyntheticCurves s = synthesize(model(kk, qq, 1.0));
    const TimeSeries k = recover_k(s.c_a, s.c_t, 0.0);
    const TimeSeries h = recover_h(k, cbf_from_k(k), std::nullopt);
    INFO("K = " << kk << ", Q = " << qq);
    CHECK(h.min() >= -1e-3 * h.max());
  }
}

TEST_CASE("fit_gamma_variate on clean densities") {
  const TimeGrid g(0.0, 0.05, 801);
  for (const auto& [k, q] : {std::pair{10.0, 0.5}, {2.0, 1.0}, {5.0, 0.25}, {20.0, 0.3}}) {
    const GammaParams fit = fit_gamma_variate(signals::gamma_pdf(GammaParams(k, q), g));
    INFO("K = " << k << ", Q = " << q);
    CHECK(rel(fit.shape_k, k) <= 0.02);
    CHECK(rel(fit.scale_q, q) <= 0.02);
  }
  // Scaling h does not change the shape parameters.
  const GammaParams scaled =
      fit_gamma_variate(signals::scale_by(signals::gamma_pdf(GammaParams(10.0, 0.5), g), 7.0));
  CHECK(rel(scaled.shape_k, 10.0) <= 0.02);

  const TimeSeries decreasing = signals::gamma_survival(GammaParams(2.0, 1.0), g);
  CHECK_THROWS_AS(fit_gamma_variate(decreasing), NumericalError);
  CHECK_THROWS_AS(fit_gamma_variate(TimeSeries(g)), NumericalError);
}

TEST_CASE("roughness") {
  const TimeGrid g(0.0, 0.05, 801);
  CHECK(roughness(signals::gamma_survival(GammaParams(10.0, 0.5), g)) == doctest::Approx(1.0));
  CHECK(roughness(signals::gamma_pdf(GammaParams(10.0, 0.5), g)) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(roughness(TimeSeries(g)) == 1.0);
}

TEST_CASE("analyze: noiseless input") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const Analysis a = analyze(s.c_a, s.c_t, DeconvConfig{});
  REQUIRE(a.metrics);
  REQUIRE(a.fit);
  CHECK(rel(a.cbf, 1.0) <= 1e-9);
  CHECK(rel(a.metrics->mtt, 5.0) <= 0.01);
  CHECK(rel(a.metrics->tth, 2.5) <= 0.02);
  REQUIRE(a.metrics->raw_moments);
  CHECK(rel((*a.metrics->raw_moments)[0], 10.0 * 11.0 * 12.0 * 0.125) <= 1e-3);
  CHECK(rel(a.fit->shape_k, 10.0) <= 0.02);
  const Diagnostics& d = a.curves.diagnostics;
  CHECK(d.reconstruction_ok);
  CHECK(d.reconvolution_residual <= 1e-10);
  CHECK(d.imag_residue <= spectral::kImagResidueTolerance);
  CHECK(d.metrics_error.empty());
  CHECK(d.fit_error.empty());
  CHECK(a.curves.r[0] == doctest::Approx(1.0));
}

TEST_CASE("analyze: noisy input without a filter is flagged") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  const TimeSeries c_a = signals::add_noise(s.c_a, {0.01, 100});
  const TimeSeries c_t = signals::add_noise(s.c_t, {0.01, 101});
  const Analysis a = analyze(c_a, c_t, DeconvConfig{});
  CHECK_FALSE(a.curves.diagnostics.reconstruction_ok);
  CHECK(a.curves.diagnostics.k_roughness > kDefaultRoughnessThreshold);
  CHECK_FALSE(a.metrics);
  CHECK_FALSE(a.curves.diagnostics.metrics_error.empty());
}

TEST_CASE("analyze: noisy input with regularization and low-pass filter") {
  const SyntheticCurves s = synthesize(ForwardModelConfig{});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TimeSeries c_a = signals::add_noise(s.c_a, {0.01, 2 * seed});
    const TimeSeries c_t = signals::add_noise(s.c_t, {0.01, 2 * seed + 1});
    DeconvConfig cfg;
    cfg.reg = 1e-2;
    cfg.filter = FilterSpec(0.05);
    const Analysis a = analyze(c_a, c_t, cfg);
    INFO("seed = " << seed);
    CHECK(a.curves.diagnostics.reconstruction_ok);
    CHECK(a.curves.diagnostics.cutoff_fraction == 0.05);
    REQUIRE(a.fit);
    CHECK(rel(a.fit->shape_k, 10.0) <= 0.10);
    CHECK(rel(a.fit->scale_q, 0.5) <= 0.10);
    CHECK(rel(a.cbf, 1.0) <= 0.05);
  }
}
