#include <fstream>
#include <string>

#include "livo/config.hpp"
#include "livo/error.hpp"
#include "test_support.hpp"

using namespace livo;

namespace {

std::string parse_error_of(const std::string& text) {
  try {
    parse_pipeline_config(KeyValueFile::parse(text, "run.cfg"));
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(KeyValueFile, CommentsBlanksAndLastWins) {
  const KeyValueFile f = KeyValueFile::parse("# header\n\n a = 1 # trailing\nb=two words\na = 3\n");
  EXPECT_EQ(f.get_int("a", 0), 3);
  EXPECT_EQ(f.get_string("b"), "two words");
  EXPECT_EQ(f.all("a").size(), 2u);
  EXPECT_EQ(f.find("a")->line, 5);
  EXPECT_FALSE(f.has("c"));
  EXPECT_DOUBLE_EQ(f.get_double("c", 2.5), 2.5);
}

TEST(KeyValueFile, MissingEqualsNamesLine) {
  try {
    KeyValueFile::parse("a = 1\nthis line is wrong\n", "x.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(KeyValueFile, TypedGettersNameLine) {
  const KeyValueFile f = KeyValueFile::parse("x = 1\ny = abc\nz = maybe\nv = 1 2\n", "t.cfg");
  try {
    f.get_double("y", 0.0);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("t.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(f.get_bool("z", false), ParseError);
  EXPECT_THROW(f.get_doubles("v", 3), ParseError);
  EXPECT_THROW(f.get_int("y", 0), ParseError);
  ASSERT_TRUE(f.get_doubles("v", 2));
  EXPECT_EQ((*f.get_doubles("v"))[1], 2.0);
}

TEST(PipelineConfig, Defaults) {
  const PipelineConfig pc = parse_pipeline_config(KeyValueFile::parse("camera.enabled = false\n"));
  EXPECT_FALSE(pc.use_camera);
  EXPECT_DOUBLE_EQ(pc.stream.min_fraction, 0.5);
  EXPECT_GT(pc.lio.map.voxel_size, 0.0);
  EXPECT_GT(pc.vision.filter.max_time_offset, 0.0);
  EXPECT_TRUE(pc.dataset_dir.empty());
}

TEST(PipelineConfig, CameraNeedsIntrinsics) {
  EXPECT_FALSE(parse_error_of("").empty());
  EXPECT_TRUE(parse_error_of("camera.intrinsics = 250 250 160 120\n").empty());
}

TEST(PipelineConfig, ValuesAreRead) {
  const PipelineConfig pc = parse_pipeline_config(KeyValueFile::parse(
      "stream.camera_hz = 30\nlio.voxel_size = 0.8\ncamera.intrinsics = 300 310 150 100\n"
      "camera_to_imu.translation = 0.1 0.2 0.3\ncamera_to_imu.rpy_deg = 0 0 90\ncamera.enabled = false\n"
      "vision.pnp = off\n"));
  EXPECT_DOUBLE_EQ(pc.stream.camera_hz, 30.0);
  EXPECT_DOUBLE_EQ(pc.lio.map.voxel_size, 0.8);
  EXPECT_DOUBLE_EQ(pc.camera_initial.intrinsics.fy, 310.0);
  EXPECT_VEC_NEAR(pc.camera_initial.extrinsic.translation, Vec3(0.1, 0.2, 0.3), 0.0);
  EXPECT_VEC_NEAR(pc.camera_initial.extrinsic.rotation * Vec3::UnitX(), Vec3::UnitY(), 1e-12);
  EXPECT_FALSE(pc.use_camera);
  EXPECT_FALSE(pc.vision.enable_pnp);
}

TEST(PipelineConfig, UnknownKeyNamesLine) {
  const std::string msg = parse_error_of("lio.voxel_size = 0.5\nlio.voxel_sise = 0.5\n");
  EXPECT_NE(msg.find("run.cfg:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
  EXPECT_FALSE(parse_error_of("bogus = 1\n").empty());
}

TEST(PipelineConfig, InvalidValues) {
  EXPECT_NE(parse_error_of("lio.voxel_size = -1\n").find("run.cfg:1"), std::string::npos);
  EXPECT_FALSE(parse_error_of("camera.distortion = 1 2 3\n").empty());
  EXPECT_FALSE(parse_error_of("camera_to_imu.rotation = 1 0 0 0 1 0 0 0 2\n").empty());
  EXPECT_FALSE(parse_error_of("vision.initial_p_diag = 1 1 1\n").empty());
}

TEST(PipelineConfig, CalibrationFallback) {
  const auto dir = livo::test::scratch_dir("config_calib");
  std::filesystem::create_directories(dir / "data");
  write_file(dir / "data" / "calib.txt",
             "camera.intrinsics = 111 112 113 114\nstream.camera_hz = 4\nlidar_to_imu.translation = 0 0 0.25\n");
  write_file(dir / "run.cfg", "input.dataset = data\nstream.camera_hz = 20\noutput.dir = out\n");
  const PipelineConfig pc = load_pipeline_config(dir / "run.cfg");
  EXPECT_EQ(pc.dataset_dir, dir / "data");
  EXPECT_EQ(pc.output_dir, dir / "out");
  // calibration fills the gaps, the run file wins on conflicts
  EXPECT_DOUBLE_EQ(pc.camera_initial.intrinsics.fx, 111.0);
  EXPECT_DOUBLE_EQ(pc.stream.camera_hz, 20.0);
  EXPECT_VEC_NEAR(pc.lio.lidar_to_imu.translation, Vec3(0, 0, 0.25), 0.0);
}

TEST(SceneConfig, PatchesBoxesAndPresets) {
  const sim::SimulationConfig sc = parse_scene_config(KeyValueFile::parse(
      "patch = 5 0 0  -1 0 0  0 1 0  3 2  120 checker 0.5 30\n"
      "box = 1 1 -1  2 2 1  80\n"
      "trajectory.preset = loop\ntrajectory.duration = 12\nrig.imu_hz = 400\nnoise.range = 0.02\nseed = 42\n"));
  ASSERT_EQ(sc.scene.patches().size(), 1u);
  ASSERT_EQ(sc.scene.boxes().size(), 1u);
  EXPECT_EQ(sc.scene.patches()[0].material.texture, sim::Texture::kChecker);
  ASSERT_TRUE(sc.trajectory);
  EXPECT_NEAR(sc.trajectory->duration(), 12.0, 1e-12);
  EXPECT_DOUBLE_EQ(sc.rig.imu_hz, 400.0);
  EXPECT_DOUBLE_EQ(sc.noise.range_sigma, 0.02);
  EXPECT_EQ(sc.seed, 42u);

  const sim::SimulationConfig room = parse_scene_config(KeyValueFile::parse("preset = room\n"));
  EXPECT_FALSE(room.scene.empty());
  EXPECT_FALSE(room.trajectory);
}

TEST(SceneConfig, Errors) {
  auto bad = [](const std::string& text) {
    try {
      parse_scene_config(KeyValueFile::parse(text, "scene.cfg"));
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(bad("seed = 1\npatch = 1 2 3\n").find("scene.cfg:2"), std::string::npos);
  EXPECT_NE(bad("preset = castle\n").find("scene.cfg:1"), std::string::npos);
  EXPECT_FALSE(bad("box = 0 0 0 1 1 1 50 marble 1 2\n").empty());
  EXPECT_FALSE(bad("noise.range = -1\n").empty());
  EXPECT_FALSE(bad("rig.beam = 16\n").empty());
  EXPECT_FALSE(bad("patch = 0 0 0  0 0 0  1 0 0  1 1  50\n").empty());
}

TEST(SceneConfig, ShippedConfigsParse) {
  const std::filesystem::path root = LIVO_SOURCE_DIR;
  EXPECT_NO_THROW(load_scene_config(root / "configs" / "room_scene.cfg"));
  const KeyValueFile run = KeyValueFile::load(root / "configs" / "room_run.cfg");
  const KeyValueFile calib = KeyValueFile::parse("camera.intrinsics = 250 250 160 120\n", "calib.txt");
  EXPECT_NO_THROW(parse_pipeline_config(run, &calib));
}
