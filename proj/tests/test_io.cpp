#include "ledsim/image_io.hpp"
#include "ledsim/preprocess.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

using namespace ledsim;
using testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

DepthMap random_depth(Rng& rng, int w, int h) {
  ImageD img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i)
    img.data()[i] = rng.uniform() < 0.1 ? 0.0 : double(float(rng.uniform(0.5, 99.0)));
  return DepthMap::from_values(img);
}

}  // namespace

TEST_CASE("depth format from extension") {
  CHECK(depth_format_for("a/b.pfm") == DepthFormat::pfm);
  CHECK(depth_format_for("b.png") == DepthFormat::png16);
  CHECK_THROWS_AS(depth_format_for("b.exr"), ContractError);
}

TEST_CASE("pfm round trip is bit-identical") {
  const fs::path dir = scratch_dir("io_pfm");
  Rng rng(1);
  ImageF img(7, 5);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = float(rng.normal() * 1e3);
  write_pfm(dir / "a.pfm", img);
  const ImageF back = read_pfm(dir / "a.pfm");
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 5);
  CHECK(std::memcmp(back.data(), img.data(), sizeof(float) * img.size()) == 0);
  CHECK(slurp(dir / "a.pfm").substr(0, 3) == "Pf\n");

  // Big-endian files (positive scale) are read too.
  spit(dir / "be.pfm", std::string("Pf\n1 1\n1.0\n") + std::string("\x40\x20\x00\x00", 4));
  CHECK(read_pfm(dir / "be.pfm")(0, 0) == 2.5f);

  const DepthMap d = random_depth(rng, 33, 17);
  write_depth(dir / "d.pfm", d);
  const DepthMap e = read_depth(dir / "d.pfm");
  CHECK((e.valid == d.valid).all());
  CHECK((d.valid.select(d.values, 0.0) == e.valid.select(e.values, 0.0)).all());
  write_depth(dir / "d2.pfm", e);
  CHECK(slurp(dir / "d.pfm") == slurp(dir / "d2.pfm"));
}

TEST_CASE("pfm stores the bottom row first") {
  const fs::path dir = scratch_dir("io_pfm_order");
  ImageF img(2, 1);
  img << 1.0f, 2.0f;
  write_pfm(dir / "o.pfm", img);
  const std::string bytes = slurp(dir / "o.pfm");
  float first;
  std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
  CHECK(first == 2.0f);
}

TEST_CASE("malformed pfm files are format errors") {
  const fs::path dir = scratch_dir("io_pfm_bad");
  spit(dir / "magic.pfm", "P5\n1 1\n-1\n    ");
  spit(dir / "dims.pfm", "Pf\nx 1\n-1\n    ");
  spit(dir / "short.pfm", "Pf\n4 4\n-1\n1234");
  spit(dir / "scale.pfm", "Pf\n1 1\n0\n    ");
  for (std::string name : {"magic.pfm", "dims.pfm", "short.pfm", "scale.pfm"}) {
    INFO(name);
    CHECK_THROWS_AS(read_pfm(dir / name), FormatError);
  }
  CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), IoError);
}

TEST_CASE("png16 depth uses centimeters") {
  const fs::path dir = scratch_dir("io_png16");
  ImageD raw(1, 3);
  raw << 100.0, 0.0, 12.345;
  const DepthMap d = DepthMap::from_values(raw);
  const auto cm = encode_depth_cm(d);
  CHECK(cm == std::vector<std::uint16_t>{10000, 0, 1235});
  write_depth(dir / "d.png", d, DepthFormat::png16);
  const DepthMap back = read_depth(dir / "d.png");
  CHECK(back.values(0, 0) == 100.0);
  CHECK_FALSE(back.valid(0, 1));
  CHECK(std::abs(back.values(0, 2) - 12.345) <= 0.005);

  ImageD far(1, 1);
  far << 655.36;
  CHECK_THROWS_AS(encode_depth_cm(DepthMap::from_values(far)), DomainError);
  far << 655.35;
  CHECK(encode_depth_cm(DepthMap::from_values(far))[0] == 65535);

  Rng rng(2);
  const DepthMap r = random_depth(rng, 20, 11);
  write_depth(dir / "r.png", r, DepthFormat::png16);
  const DepthMap rb = read_depth(dir / "r.png", DepthFormat::png16);
  CHECK((rb.valid == r.valid).all());
  CHECK((r.valid.select((rb.values - r.values).abs(), 0.0) <= 0.005).all());
}

TEST_CASE("normals round trip") {
  const fs::path dir = scratch_dir("io_normals");
  NormalMap n(4, 3);
  Rng rng(3);
  for (auto& v : n.data) {
    const Vec3d d = Vec3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    for (int k = 0; k < 3; ++k) v[k] = double(float(d[k]));
  }
  write_normals(dir / "n.pfm", n);
  const NormalMap back = read_normals(dir / "n.pfm");
  REQUIRE(back.width == 4);
  REQUIRE(back.height == 3);
  for (std::size_t i = 0; i < n.data.size(); ++i) CHECK((back.data[i] - n.data[i]).norm() == 0.0);
  CHECK(slurp(dir / "n.pfm").substr(0, 3) == "PF\n");
  CHECK_THROWS_AS(read_depth(dir / "n.pfm"), FormatError);
}

TEST_CASE("8-bit png round trip and errors") {
  const fs::path dir = scratch_dir("io_png8");
  Png8 img{3, 2, 3, {}};
  for (int i = 0; i < 18; ++i) img.pixels.push_back(std::uint8_t(i * 13));
  write_png(dir / "c.png", img);
  const Png8 back = read_png8(dir / "c.png");
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.channels == 3);
  CHECK(back.pixels == img.pixels);

  ImageD gray(2, 2);
  gray << 0.0, 1.0, 0.5, 2.0;
  write_gray_png(dir / "g.png", gray);
  const Png8 g = read_png8(dir / "g.png");
  CHECK(g.channels == 1);
  CHECK(g.pixels == std::vector<std::uint8_t>{0, 255, 128, 255});

  spit(dir / "bad.png", "not a png at all");
  CHECK_THROWS_AS(read_png8(dir / "bad.png"), FormatError);
  std::string truncated = slurp(dir / "c.png");
  truncated.resize(truncated.size() / 2);
  spit(dir / "trunc.png", truncated);
  CHECK_THROWS_AS(read_png8(dir / "trunc.png"), FormatError);
  CHECK_THROWS_AS(write_png(dir / "no" / "such" / "dir.png", img), IoError);
}

TEST_CASE("pattern exports") {
  const fs::path dir = scratch_dir("io_pattern");
  const Pattern p = make_pattern(PatternKind::checkerboard, 0.5, ProjectorModel{});
  write_control_png(dir / "control.png", p, 2);
  const Png8 c = read_png8(dir / "control.png");
  CHECK(c.width == 264);
  CHECK(c.height == 56);
  // Top-left of the image is the top (highest) control row.
  CHECK(c.pixels[0] == (p.control(27, 0) > 0.5 ? 255 : 0));
  const ImageD ph = photometry_image(apply_photometry(p), 70, 14);
  CHECK(ph.minCoeff() >= 0.0);
  CHECK(ph.maxCoeff() <= 1.0);
}

TEST_CASE("center crop window") {
  const CropWindow w = crop_window(1920, 1080, {});
  CHECK(w.x0 == 640);
  CHECK(w.y0 == 220);
  CHECK(w.size == 640);
  CHECK_THROWS_AS(crop_window(600, 1080, {}), ContractError);
  CHECK_THROWS_AS((PreprocessSpec{640, 0}.validate()), ContractError);
}

TEST_CASE("crop equal to output size is a plain crop") {
  Rng rng(4);
  ImageD img(40, 50);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  const PreprocessSpec spec{30, 30};
  const ImageD out = center_crop_resize(img, spec);
  CHECK((out.array() == img.block(5, 10, 30, 30).array()).all());
  const DepthMap d = random_depth(rng, 50, 40);
  const DepthMap dc = center_crop_resize(d, spec);
  CHECK((dc.values.array() == d.values.block(5, 10, 30, 30).array()).all());
  CHECK((dc.valid.array() == d.valid.block(5, 10, 30, 30).array()).all());
}

TEST_CASE("nearest resampling keeps the depth value set") {
  ImageD raw(1080, 1920);
  raw.leftCols(960).setConstant(7.5);
  raw.rightCols(960).setConstant(42.0);
  raw(540, 961) = 0.0;
  const DepthMap out = center_crop_resize(DepthMap::from_values(raw), {});
  CHECK(out.width() == 320);
  std::set<double> values;
  for (int v = 0; v < 320; ++v)
    for (int u = 0; u < 320; ++u)
      if (out.valid(v, u)) values.insert(out.values(v, u));
  CHECK(values == std::set<double>{7.5, 42.0});
}

TEST_CASE("bilinear resize of a linear ramp stays linear") {
  ImageD img(640, 640);
  for (int v = 0; v < 640; ++v)
    for (int u = 0; u < 640; ++u) img(v, u) = 0.001 * u + 0.002 * v;
  const ImageD out = center_crop_resize(img, PreprocessSpec{640, 320});
  // Output pixel i covers source pixels 2i and 2i+1.
  for (int v = 0; v < 320; v += 37)
    for (int u = 0; u < 320; u += 41)
      CHECK(out(v, u) == doctest::Approx(0.001 * (2 * u + 0.5) + 0.002 * (2 * v + 0.5)).epsilon(1e-12).scale(0));
}

TEST_CASE("preprocessed full-resolution camera equals the default camera") {
  const Camera c = center_crop_resize(full_resolution_camera(), PreprocessSpec{});
  const Camera d = default_camera();
  CHECK(c.width == 320);
  CHECK(c.fx == doctest::Approx(d.fx).epsilon(1e-12).scale(0));
  CHECK(c.cx == doctest::Approx(d.cx).epsilon(1e-12).scale(0));
  CHECK(c.cy == doctest::Approx(d.cy).epsilon(1e-12).scale(0));

  // A point seen at the full resolution lands at the scaled pixel after preprocessing.
  const Vec3d p(0.7, -0.3, 12.0);
  const Vec2d full = project(p, full_resolution_camera());
  const Vec2d small = project(p, c);
  CHECK(small.x() == doctest::Approx((full.x() - 640 + 0.5) / 2 - 0.5).epsilon(1e-12).scale(0));
}
