#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pupilnet/io/image_io.hpp"
#include "pupilnet/io/manifest.hpp"

using namespace pupilnet;
using namespace pupilnet::io;
namespace fs = std::filesystem;

namespace {

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "pupilnet_manifest_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    save_pgm(GrayImage(384, 288, 100), dir_ / "0001.pgm");
    save_pgm(GrayImage(384, 288, 120), dir_ / "0002.pgm");
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  std::size_t error_line(const fs::path& p) {
    try {
      load_manifest(p);
    } catch (const ManifestError& e) {
      return e.line();
    }
    ADD_FAILURE() << "expected a manifest error";
    return 9999;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(ManifestTest, ParsesLabels) {
  const auto m = load_manifest(write("set_a.csv", "image,x,y\n0001.pgm,192.5,144.0\n0002.pgm,10,20\n"));
  EXPECT_EQ(m.dataset_id, "set_a");
  ASSERT_EQ(m.frames.size(), 2u);
  EXPECT_EQ(m.frames[0], (ManifestEntry{"0001.pgm", 192.5, 144.0}));
  EXPECT_EQ(m.frames[1].y, 20.0);

  const auto ds = load_dataset(m);
  EXPECT_EQ(ds.id, "set_a");
  ASSERT_EQ(ds.frames.size(), 2u);
  EXPECT_EQ(ds.frames[1].image.pixels[0], 120);
  EXPECT_EQ(ds.frames[1].frame_index, 1u);
  EXPECT_EQ(ds.frames[0].pupil, (Point2{192.5, 144.0}));
}

TEST_F(ManifestTest, OutOfBoundsLabelNamesLine) {
  EXPECT_EQ(error_line(write("oob.csv", "image,x,y\n0001.pgm,1,1\n0002.pgm,500,10\n")), 3u);
  EXPECT_EQ(error_line(write("neg.csv", "image,x,y\n0001.pgm,-0.5,1\n")), 2u);
}

TEST_F(ManifestTest, RejectsBadContent) {
  EXPECT_EQ(error_line(write("nan.csv", "image,x,y\n0001.pgm,abc,1\n")), 2u);
  EXPECT_EQ(error_line(write("fields.csv", "image,x,y\n0001.pgm,1\n")), 2u);
  EXPECT_EQ(error_line(write("missing.csv", "image,x,y\n0001.pgm,1,1\nnope.pgm,1,1\n")), 3u);
  try {
    load_manifest(write("empty.csv", "image,x,y\n"));
    FAIL() << "empty manifest accepted";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("empty manifest"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_manifest(dir_ / "absent.csv"), ManifestError);
}

TEST_F(ManifestTest, WriteThenReloadIsEqual) {
  DatasetManifest m;
  m.dataset_id = "round";
  m.root = dir_;
  m.frames = {{"0001.pgm", 0.1 + 0.2, 287.0}, {"0002.pgm", 383.0, 1.0 / 3.0}};
  write_manifest(m, dir_ / "round.csv");
  EXPECT_EQ(load_manifest(dir_ / "round.csv"), m);
}

TEST(Manifest, DatasetIdFromPath) {
  EXPECT_EQ(dataset_id_for("/data/set_b.csv"), "set_b");
  EXPECT_EQ(dataset_id_for("/data/eyes07/manifest.csv"), "eyes07");
}
