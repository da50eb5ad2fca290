// livo command line: run, simulate, eval, export-ply.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "livo/config.hpp"
#include "livo/error.hpp"
#include "livo/io.hpp"
#include "livo/metrics.hpp"
#include "livo/pipeline.hpp"
#include "livo/sim.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const fs::path& config_path) {
  livo::PipelineConfig cfg = livo::load_pipeline_config(config_path);
  if (cfg.output_dir.empty()) cfg.output_dir = config_path.parent_path() / "run";
  livo::TrajectoryRecord gt;
  const livo::PipelineResult r = livo::run_pipeline(cfg, &gt);
  livo::write_outputs(cfg.output_dir, r);

  const livo::TimingSummary t = livo::summarize_timing(r.timing);
  std::printf("mode %s: %zu packets (%zu with image, %zu lidar-only), %zu degenerate, %zu images dropped\n",
              std::string(livo::to_string(r.stats.mode)).c_str(), r.stats.packets, r.stats.image_packets,
              r.stats.lidar_only_packets, r.stats.degenerate_packets, r.stats.dropped_images);
  std::printf("timing per sweep [ms]: vision %.2f  lidar %.2f  total %.2f\n", t.vision_ms, t.lidar_ms, t.total_ms);
  if (!r.camera_history.empty()) {
    const livo::CameraParams& p = r.camera_history.back().params;
    std::printf("camera: time_offset %.6f s  fx %.3f fy %.3f cx %.3f cy %.3f\n", p.time_offset, p.intrinsics.fx,
                p.intrinsics.fy, p.intrinsics.cx, p.intrinsics.cy);
  }
  if (gt.size() >= 3 && r.trajectory.size() >= 3) {
    const livo::AteResult ate = livo::compute_ate(r.trajectory, gt);
    std::printf("ATE RMSE %.4f m over %zu poses, end-to-end %.4f m\n", ate.rmse, ate.associations,
                livo::end_to_end_error(r.trajectory));
  }
  std::printf("outputs written to %s\n", cfg.output_dir.string().c_str());
  return 0;
}

int cmd_simulate(const fs::path& scene_path, const fs::path& out_dir) {
  const livo::sim::SimulationConfig sc = livo::load_scene_config(scene_path);
  const livo::sim::Dataset d = livo::sim::simulate(sc);
  livo::write_dataset(out_dir, d, sc.rig);
  std::size_t points = 0;
  for (const auto& s : d.sweeps) points += s.points.size();
  std::printf("wrote %zu IMU samples, %zu sweeps (%zu points), %zu images to %s\n", d.imu.size(), d.sweeps.size(),
              points, d.images.size(), out_dir.string().c_str());
  return 0;
}

int cmd_export_ply(const fs::path& run_dir) {
  const std::vector<livo::MapPoint> points = livo::read_map(run_dir / "map.bin");
  livo::VoxelMap map;
  for (const livo::MapPoint& p : points) map.insert_raw(p);
  const std::vector<livo::ColoredPoint> colored = livo::colored_points(map);
  livo::write_ply(run_dir / "map.ply", colored);
  std::printf("wrote %zu points to %s\n", colored.size(), (run_dir / "map.ply").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-inertial-visual odometry toolkit"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the odometry pipeline");
  run->add_option("config", run_config, "Pipeline configuration file")->required();

  std::string scene_config;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->add_option("scene", scene_config, "Scene configuration file")->required();
  simulate->add_option("-o,--output", sim_out, "Dataset directory")->required();

  auto* eval = app.add_subcommand("eval", "Trajectory metrics");
  eval->require_subcommand(1);
  std::string ate_traj, ate_gt, e2e_traj;
  double gate = 0.01;
  auto* ate = eval->add_subcommand("ate", "Absolute trajectory error (RMSE, rigid alignment)");
  ate->add_option("trajectory", ate_traj)->required();
  ate->add_option("groundtruth", ate_gt)->required();
  ate->add_option("--gate", gate, "Association gate in seconds")->capture_default_str();
  auto* e2e = eval->add_subcommand("e2e", "Distance between first and last pose");
  e2e->add_option("trajectory", e2e_traj)->required();

  std::string run_dir;
  auto* export_ply = app.add_subcommand("export-ply", "Write map.ply from a run directory");
  export_ply->add_option("run_dir", run_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error usage: %s\n", e.what());
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_config);
    if (simulate->parsed()) return cmd_simulate(scene_config, sim_out);
    if (ate->parsed()) {
      const livo::AteResult r = livo::compute_ate(livo::read_trajectory(ate_traj), livo::read_trajectory(ate_gt), gate);
      std::printf("%.9f\n", r.rmse);
      return 0;
    }
    if (e2e->parsed()) {
      std::printf("%.9f\n", livo::end_to_end_error(livo::read_trajectory(e2e_traj)));
      return 0;
    }
    if (export_ply->parsed()) return cmd_export_ply(run_dir);
  } catch (const livo::Error& e) {
    std::fprintf(stderr, "error %s: %s\n", e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error internal: %s\n", e.what());
    return 1;
  }
  return 1;
}
