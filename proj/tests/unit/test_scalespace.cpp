#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "volkey/error.hpp"
#include "volkey/scalespace.hpp"

using namespace volkey;
using namespace volkey::testing;

namespace {

Volume impulse(const Dims& d) {
  Volume v(d);
  v.at(d.nx / 2, d.ny / 2, d.nz / 2) = 1.0f;
  return v;
}

Volume block_mean_oracle(const Volume& v) {
  const Dims d = v.dims();
  Volume out(Dims{d.nx / 2, d.ny / 2, d.nz / 2});
  for (int z = 0; z < d.nz / 2; ++z)
    for (int y = 0; y < d.ny / 2; ++y)
      for (int x = 0; x < d.nx / 2; ++x) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k)
          for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) s += v.at(2 * x + i, 2 * y + j, 2 * z + k);
        out.at(x, y, z) = static_cast<float>(s / 8.0);
      }
  return out;
}

bool bit_identical(const Volume& a, const Volume& b) {
  return a.dims() == b.dims() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_SUITE("scalespace") {

TEST_CASE("gaussian_kernel") {
  SUBCASE("radius one, normalised") {
    const auto k = gaussian_kernel(0.3);
    CHECK(k.radius == 1);
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("symmetric and positive for any sigma") {
    for (double sigma : {0.1, 0.8, 1.6, 2.4, 5.7}) {
      const auto k = gaussian_kernel(sigma);
      CHECK(k.radius == static_cast<int>(std::ceil(3 * sigma)));
      CHECK(k.weights.size() == static_cast<std::size_t>(2 * k.radius + 1));
      for (int i = 0; i <= k.radius; ++i) {
        CHECK(k.weights[k.radius - i] == k.weights[k.radius + i]);
        CHECK(k.weights[k.radius + i] > 0.0);
      }
    }
  }
  SUBCASE("sigma 1 matches direct evaluation of the Gaussian") {
    const auto k = gaussian_kernel(1.0);
    double norm = 0.0;
    for (int i = -3; i <= 3; ++i) norm += std::exp(-0.5 * i * i);
    for (int i = -3; i <= 3; ++i) CHECK(k.weights[i + 3] == doctest::Approx(std::exp(-0.5 * i * i) / norm).epsilon(1e-12));
    CHECK(k.weights[3] / k.weights[4] == doctest::Approx(std::exp(0.5)));
  }
  SUBCASE("non-positive sigma is a parameter error") {
    for (double sigma : {0.0, -1.0}) {
      try {
        gaussian_kernel(sigma);
        FAIL("no error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parameter);
      }
    }
  }
}

TEST_CASE("convolve_separable") {
  SUBCASE("constant in, constant out") {
    const Volume c(Dims{9, 6, 7}, {}, 3.5f);
    const Volume out = convolve_separable(c, gaussian_kernel(1.6));
    CHECK(max_abs_diff(out, c) < 1e-5);
  }
  SUBCASE("impulse response is the separable kernel product") {
    const Dims d{21, 21, 21};
    const auto k = gaussian_kernel(1.3);
    const Volume out = convolve_separable(impulse(d), k);
    for (int z = -k.radius; z <= k.radius; ++z)
      for (int y = -k.radius; y <= k.radius; ++y)
        for (int x = -k.radius; x <= k.radius; ++x) {
          const double expected = k.weights[x + k.radius] * k.weights[y + k.radius] * k.weights[z + k.radius];
          CHECK(out.at(10 + x, 10 + y, 10 + z) == doctest::Approx(expected).epsilon(1e-5));
        }
  }
  SUBCASE("random volumes match dense 3D convolution") {
    int seed = 0;
    for (double sigma : {0.8, 1.6, 2.4}) {
      const Volume v = random_volume(Dims{12, 10, 11}, ++seed, -1.0, 1.0);
      CHECK(max_abs_diff(convolve_separable(v, gaussian_kernel(sigma)), dense_gaussian(v, sigma)) < 1e-4);
    }
  }
  SUBCASE("bit identical for every worker count and chunk size") {
    const Volume v = random_volume(Dims{23, 17, 19}, 5);
    const auto k = gaussian_kernel(2.0);
    const Volume reference = convolve_separable(v, k, {1, 10});
    for (int workers : {2, 4})
      for (int chunk : {1, 2, 5, 9, 10}) CHECK(bit_identical(convolve_separable(v, k, {workers, chunk}), reference));
  }
}

TEST_CASE("semigroup: two blurs equal one of the combined width") {
  const Volume v = convolve_separable(random_volume(Dims{32, 32, 32}, 9), gaussian_kernel(1.5));
  const double a = 1.2, b = 1.6;
  const Volume twice = convolve_separable(convolve_separable(v, gaussian_kernel(a)), gaussian_kernel(b));
  const Volume once = convolve_separable(v, gaussian_kernel(std::hypot(a, b)));
  CHECK(max_abs_diff(twice, once, 8) < 2e-3);
}

TEST_CASE("subsample_half") {
  SUBCASE("2x2x2 of 0..7 averages to 3.5") {
    const Volume v(Dims{2, 2, 2}, {}, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7});
    const Volume s = subsample_half(v);
    CHECK(s.dims() == Dims{1, 1, 1});
    CHECK(s.at(0, 0, 0) == 3.5f);
  }
  SUBCASE("constant stays constant, spacing doubles") {
    const Volume v(Dims{4, 4, 4}, Spacing{1, 2, 3}, 2.25f);
    const Volume s = subsample_half(v);
    CHECK(s.dims() == Dims{2, 2, 2});
    CHECK(s.spacing() == Spacing{2, 4, 6});
    for (float x : s.data()) CHECK(x == 2.25f);
  }
  SUBCASE("ramp and random volumes match the direct block mean") {
    Volume ramp(Dims{4, 4, 4});
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) ramp.at(x, y, z) = static_cast<float>(x);
    CHECK(max_abs_diff(subsample_half(ramp), block_mean_oracle(ramp)) < 1e-6);
    const Volume odd = random_volume(Dims{9, 6, 7}, 21);
    const Volume s = subsample_half(odd);
    CHECK(s.dims() == Dims{4, 3, 3});
    CHECK(max_abs_diff(s, block_mean_oracle(odd)) < 1e-6);
  }
  SUBCASE("a dim below two is a size error") {
    try {
      subsample_half(Volume(Dims{4, 1, 4}));
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::size);
    }
  }
}

TEST_CASE("gaussian pyramid structure") {
  SUBCASE("sigma schedule, octave dims and hand-off") {
    const Volume v = random_volume(Dims{40, 36, 48}, 2);
    PyramidOptions opts;
    opts.num_octaves = 3;
    const auto pyr = build_gaussian_pyramid(v, opts);
    REQUIRE(pyr.octave_count() == 2);  // 20x18x24 is the last octave with every dim >= 16
    const double kappa = std::pow(2.0, 1.0 / 3.0);
    CHECK(opts.kappa() == doctest::Approx(kappa));
    for (int o = 0; o < pyr.octave_count(); ++o) {
      const auto& oct = pyr.octaves[o];
      REQUIRE(oct.levels.size() == 6);
      for (int i = 0; i < 6; ++i) {
        CHECK(oct.sigmas[i] == doctest::Approx(1.6 * std::pow(kappa, i) * std::pow(2.0, o)));
        CHECK(oct.levels[i].dims() == oct.dims);
        CHECK(pyr.local_sigma(o, i) == doctest::Approx(1.6 * std::pow(kappa, i)));
      }
      CHECK(oct.sigmas[3] == doctest::Approx(2 * oct.sigmas[0]));
    }
    CHECK(pyr.octaves[1].dims == Dims{20, 18, 24});
    CHECK(bit_identical(pyr.octaves[1].levels[0], subsample_half(pyr.octaves[0].levels[3])));
  }
  SUBCASE("one octave of a constant volume stays constant") {
    const Volume c(Dims{20, 20, 20}, {}, 4.0f);
    PyramidOptions opts;
    opts.num_octaves = 1;
    const auto pyr = build_gaussian_pyramid(c, opts);
    REQUIRE(pyr.octave_count() == 1);
    for (const auto& level : pyr.octaves[0].levels) CHECK(max_abs_diff(level, c) < 1e-5);
  }
  SUBCASE("impulse: second octave base equals block mean of the 2 sigma blur") {
    const Dims d{32, 32, 32};
    PyramidOptions opts;
    opts.num_octaves = 2;
    const auto pyr = build_gaussian_pyramid(impulse(d), opts);
    REQUIRE(pyr.octave_count() == 2);
    const Volume oracle = block_mean_oracle(dense_gaussian(impulse(d), 2 * 1.6));
    const double peak = *std::max_element(oracle.data().begin(), oracle.data().end());
    CHECK(max_abs_diff(pyr.octaves[1].levels[0], oracle) < 0.01 * peak);
  }
  SUBCASE("monotone smoothing within an octave") {
    const Volume v = random_volume(Dims{24, 24, 24}, 77, -5, 5);
    PyramidOptions opts;
    opts.num_octaves = 1;
    const auto pyr = build_gaussian_pyramid(v, opts);
    float prev_max = 1e9f, prev_min = -1e9f;
    for (const auto& level : pyr.octaves[0].levels) {
      const auto [lo, hi] = std::minmax_element(level.data().begin(), level.data().end());
      CHECK(*hi <= prev_max);
      CHECK(*lo >= prev_min);
      prev_max = *hi;
      prev_min = *lo;
    }
  }
  SUBCASE("145x174x145 gives six octaves of six levels once small octaves are allowed") {
    Volume v(Dims{145, 174, 145});
    PyramidOptions opts;
    opts.min_octave_dim = 4;
    const auto pyr = build_gaussian_pyramid(v, opts, {1, 10});
    REQUIRE(pyr.octave_count() == 6);
    Dims expected{145, 174, 145};
    for (const auto& oct : pyr.octaves) {
      CHECK(oct.dims == expected);
      CHECK(oct.levels.size() == 6);
      expected = Dims{expected.nx / 2, expected.ny / 2, expected.nz / 2};
    }
    // With the default floor of 16 the same request is truncated.
    CHECK(build_gaussian_pyramid(Volume(Dims{145, 174, 145}), PyramidOptions{}).octave_count() == 4);
  }
  SUBCASE("invalid options") {
    PyramidOptions bad;
    bad.levels_per_octave = 3;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = {};
    bad.num_octaves = 0;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = {};
    bad.base_sigma = 0.0;
    CHECK_THROWS_AS(validate(bad), Error);
  }
}

TEST_CASE("difference of Gaussians") {
  SUBCASE("constant input gives zero DoG, five levels per octave") {
    const Volume c(Dims{20, 20, 20}, {}, 1.0f);
    PyramidOptions opts;
    opts.num_octaves = 1;
    const auto dog = build_dog_pyramid(build_gaussian_pyramid(c, opts));
    REQUIRE(dog.octaves[0].levels.size() == 5);
    for (const auto& level : dog.octaves[0].levels) {
      for (float x : level.data()) CHECK(std::fabs(x) < 1e-5f);
    }
  }
  SUBCASE("level i is Gaussian level i minus level i+1") {
    const Volume v = random_volume(Dims{18, 18, 18}, 4);
    PyramidOptions opts;
    opts.num_octaves = 1;
    const auto pyr = build_gaussian_pyramid(v, opts);
    const auto dog = build_dog_pyramid(pyr);
    for (int i = 0; i < 5; ++i) {
      const auto& g = pyr.octaves[0].levels;
      CHECK(dog.octaves[0].levels[i].at(3, 4, 5) == g[i].at(3, 4, 5) - g[i + 1].at(3, 4, 5));
      CHECK(dog.scale(0, i) == doctest::Approx(pyr.octaves[0].sigmas[i] * std::sqrt(opts.kappa())));
    }
  }
  SUBCASE("impulse: DoG centre equals the difference of kernel centre products") {
    const Dims d{25, 25, 25};
    PyramidOptions opts;
    opts.num_octaves = 1;
    const auto dog = build_dog_pyramid(build_gaussian_pyramid(impulse(d), opts));
    const auto a = gaussian_taps(1.6);
    const double inc = 1.6 * std::sqrt(opts.kappa() * opts.kappa() - 1.0);
    const auto b = gaussian_taps(inc);
    // Centre of the 1D composition a * b.
    const int ra = static_cast<int>(a.size() / 2), rb = static_cast<int>(b.size() / 2);
    double centre_ab = 0.0;
    for (int k = -std::min(ra, rb); k <= std::min(ra, rb); ++k) centre_ab += a[ra + k] * b[rb - k];
    const double expected = std::pow(a[ra], 3) - std::pow(centre_ab, 3);
    CHECK(dog.octaves[0].levels[0].at(12, 12, 12) == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("dump_pyramid writes one raw volume per level") {
  TempDir dir("dump");
  PyramidOptions opts;
  opts.num_octaves = 1;
  const auto pyr = build_gaussian_pyramid(random_volume(Dims{16, 16, 16}, 1), opts);
  dump_pyramid(pyr, dir.path());
  CHECK(std::filesystem::exists(dir / "oct0_lvl0_sigma1.600.f32"));
  const Volume back = load_raw(dir / "oct0_lvl5_sigma5.080.f32");
  CHECK(bit_identical(back, pyr.octaves[0].levels[5]));
}

}  // TEST_SUITE
