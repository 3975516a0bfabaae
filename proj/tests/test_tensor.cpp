#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sci/data_cube.hpp"

using namespace sci;

TEST_CASE("storage order is column-major within a frame, frames stacked") {
  // frame 0 laid out as at(i1,i2): [[1,2],[3,4]]
  DataCube c(2, 2, 1, 16.0, {1, 3, 2, 4});
  CHECK(c.at(0, 0, 0) == 1);
  CHECK(c.at(1, 0, 0) == 3);
  CHECK(c.at(0, 1, 0) == 2);
  CHECK(c.at(1, 1, 0) == 4);
  CHECK(vectorize(c) == std::vector<double>{1, 3, 2, 4});
}

TEST_CASE("index is (b*n2 + i2)*n1 + i1") {
  DataCube c = DataCube::zeros(3, 4, 2, 1.0);
  CHECK(c.index(0, 0, 0) == 0);
  CHECK(c.index(2, 0, 0) == 2);
  CHECK(c.index(0, 1, 0) == 3);
  CHECK(c.index(0, 0, 1) == 12);
  CHECK(c.index(2, 3, 1) == 23);
}

TEST_CASE("devectorize round-trips") {
  DataCube c(2, 3, 2, 4.0, {1, -1, 2, 0, 1, 1, -2, 0, 1, 2, -1, 0});
  DataCube back = devectorize(vectorize(c), 2, 3, 2, 4.0);
  CHECK(back.values() == c.values());
  CHECK(back.n1() == 2);
  CHECK(back.n2() == 3);
  CHECK(back.frames() == 2);
}

TEST_CASE("amplitude outside [-rho/2, rho/2] is rejected") {
  CHECK_THROWS_AS(DataCube(1, 1, 1, 1.0, {0.6}), std::invalid_argument);
  CHECK_NOTHROW(DataCube(1, 1, 1, 1.0, {0.5}));
  CHECK_THROWS_AS(DataCube(0, 1, 1, 1.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(DataCube(1, 1, 1, -1.0, {0.0}), std::invalid_argument);
}

TEST_CASE("mean_frame averages across frames") {
  DataCube c(1, 2, 2, 16.0, {1, 2, 3, 6});
  FrameImage m = mean_frame(c);
  CHECK(m.values == std::vector<double>{2, 4});
}

TEST_CASE("psnr of a unit error against peak 255") {
  DataCube ref = DataCube::zeros(4, 4, 1, 512.0);
  std::vector<double> v(16, 1.0);
  DataCube est(4, 4, 1, 512.0, v);
  QualityReport q = psnr(ref, est, 255.0);
  CHECK(q.mse == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(q.psnr_db == Catch::Approx(48.1308036086791).epsilon(1e-12));
}

TEST_CASE("psnr of an exact match is infinite") {
  DataCube ref = DataCube::zeros(2, 2, 1, 1.0);
  QualityReport q = psnr(ref, ref);
  CHECK(std::isinf(q.psnr_db));
  CHECK(q.mse == 0.0);
}

TEST_CASE("synthetic videos shift two columns per frame on a torus") {
  for (SynthKind kind : {SynthKind::moving_square, SynthKind::moving_gaussian}) {
    DataCube c = synth_video(kind, 12, 12, 4, 9, 1.0);
    bool any_nonzero = false;
    for (int b = 1; b < 4; ++b)
      for (int i1 = 0; i1 < 12; ++i1)
        for (int i2 = 0; i2 < 12; ++i2) {
          CHECK(c.at(i1, (i2 + 2 * b) % 12, b) == c.at(i1, i2, 0));
          any_nonzero = any_nonzero || c.at(i1, i2, 0) != 0.0;
        }
    CHECK(any_nonzero);
  }
}

TEST_CASE("synthetic video respects the amplitude budget") {
  DataCube c = synth_video(SynthKind::moving_gaussian, 8, 8, 2, 5, 3.0);
  double peak = 0.0;
  for (double v : c.values()) peak = std::max(peak, std::fabs(v));
  CHECK(peak <= 1.5);
  CHECK(peak > 0.0);
}

TEST_CASE("same seed reproduces the same scene") {
  DataCube a = synth_video(SynthKind::moving_square, 16, 16, 3, 7, 1.0);
  DataCube b = synth_video(SynthKind::moving_square, 16, 16, 3, 7, 1.0);
  DataCube c = synth_video(SynthKind::moving_square, 16, 16, 3, 8, 1.0);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
}
