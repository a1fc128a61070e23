#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ptzloc/config.hpp"

using namespace ptzloc;
using Catch::Approx;
namespace fs = std::filesystem;

TEST_CASE("defaults carry the published constants") {
  const AppConfig c;
  CHECK(c.camera.zoom_table_deg ==
        std::vector<double>{54.0, 45.01, 37.87, 30.67, 24.21, 18.11, 12.99, 8.59});
  CHECK(c.filter.n_particles == 2000);
  CHECK(c.filter.lambda == 15.0);
  CHECK(c.filter.sigma_rbf_min == 0.5);
  CHECK(c.filter.sigma_rho == 0.3);
  CHECK(c.filter.sigma_rho_dot == 0.1);
  CHECK(c.roi.window_px == 448);
  CHECK(c.roi.overlap_px == 50);
  CHECK(c.marker.diameter_m == 0.30);
  CHECK(c.camera.width_px == 1920);
  CHECK(c.camera.height_px == 1080);
  CHECK(c.camera.latency_s == 0.13);
  CHECK(c.camera.pan_tilt_step_deg == 0.02);
  CHECK(c.control.scale == 4.0);
  CHECK(c.control.threshold_deg == 1.0);
  CHECK(c.control.zoom_interval_s == 1.0);
  CHECK(c.smoothing.hfov_order == 3);
  CHECK(c.smoothing.hfov_f_crit_hz == 0.6);
  CHECK(c.smoothing.angle_order == 1);
  CHECK(c.smoothing.angle_f_crit_hz == 2.0);
  CHECK(c.dataset.total == 9000);
  CHECK(c.dataset.positives == 4500);
  CHECK(c.dataset.canvas_px == 299);
  CHECK(c.sim.dt_s == 0.125);

  const LossWeights w;
  CHECK(w.mu1 == 0.1);
  CHECK(w.mu2 == 10.0);
  CHECK(w.mu3 == 10.0);
  CHECK(w.mu4 == 5.0);
  CHECK(w.mu5 == 1.0);

  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config round trip: load, serialise, load again") {
  AppConfig c;
  c.seed = 123;
  c.scenario_name = "square-outdoor";
  c.noise.phi_coupling = 0.8;
  c.camera.initial_pan_deg = 12.5;

  const nlohmann::ordered_json first = config_to_json(c);
  const AppConfig reloaded = config_from_json(first);
  const nlohmann::ordered_json second = config_to_json(reloaded);
  CHECK(first.dump() == second.dump());
}

TEST_CASE("validation reports the offending field path") {
  const auto expect_mention = [](AppConfig c, const std::string& needle) {
    try {
      c.validate();
      FAIL("expected ConfigError mentioning " + needle);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  AppConfig bad_zoom;
  bad_zoom.camera.zoom_table_deg = {54.0, 60.0};
  expect_mention(bad_zoom, "camera.zoom_table_deg");

  AppConfig bad_roi;
  bad_roi.roi.overlap_px = 500;
  expect_mention(bad_roi, "roi.window_px");

  AppConfig bad_coupling;
  bad_coupling.noise.phi_coupling = -0.4;
  expect_mention(bad_coupling, "noise.phi_coupling");

  AppConfig bad_outlier;
  bad_outlier.noise.outlier_rate = 1.4;
  expect_mention(bad_outlier, "noise.outlier_rate");

  AppConfig bad_positives;
  bad_positives.dataset.positives = 10000;
  expect_mention(bad_positives, "dataset.positives");

  AppConfig bad_variant;
  bad_variant.filter.variant = "median";
  expect_mention(bad_variant, "filter.variant");
}

TEST_CASE("dotted overrides reach nested fields") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "noise.phi_coupling=0.75");
  apply_override(j, "filter.variant=pf-fixed:3.0");
  apply_override(j, "camera.zoom_table_deg=[54, 30, 20]");
  const AppConfig c = config_from_json(j);
  CHECK(c.noise.phi_coupling == 0.75);
  CHECK(c.filter.variant == "pf-fixed:3.0");
  CHECK(c.camera.zoom_table_deg == std::vector<double>{54.0, 30.0, 20.0});
  CHECK_THROWS_AS(apply_override(j, "no-equals-sign"), ConfigError);
}

TEST_CASE("load_config applies overrides over the file") {
  const fs::path dir = fs::temp_directory_path() / "ptzloc_cfgtest";
  fs::create_directories(dir);
  const fs::path path = dir / "cfg.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 9, "noise": {"sigma_center_px": 3.5}})";
  }
  const AppConfig c = load_config(path.string(), {"noise.sigma_center_px=1.25"});
  CHECK(c.seed == 9);
  CHECK(c.noise.sigma_center_px == 1.25);

  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{not json";
  }
  CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("to_run_config merges scenario presets with explicit camera settings") {
  AppConfig c;
  c.scenario_name = "s-path";
  c.seed = 77;
  RunConfig auto_aimed = c.to_run_config();
  CHECK(auto_aimed.name == "s-path");
  CHECK(auto_aimed.seed == 77);
  CHECK(auto_aimed.initial_tilt_rad < 0.0);  // looking up at the face

  c.camera.initial_pan_deg = 5.0;
  c.camera.initial_tilt_deg = -10.0;
  c.camera.initial_zoom_state = 2;
  const RunConfig explicit_aim = c.to_run_config();
  CHECK(explicit_aim.initial_pan_rad == Approx(deg2rad(5.0)));
  CHECK(explicit_aim.initial_tilt_rad == Approx(deg2rad(-10.0)));
  CHECK(explicit_aim.initial_zoom_state == 2);
}

TEST_CASE("custom waypoints build a custom trajectory") {
  AppConfig c;
  c.waypoints = {{0.0, -2.0, 0.0, 8.0}, {4.0, -2.0, 3.0, 8.0}};
  const RunConfig cfg = c.to_run_config();
  CHECK(cfg.name == "custom");
  REQUIRE(cfg.trajectory.waypoints.size() == 2);
  CHECK(cfg.trajectory.waypoints[1].t == 4.0);
  CHECK(cfg.trajectory.waypoints[1].p.y_m == 3.0);
  // Auto-aim points at the first waypoint.
  CHECK(cfg.initial_tilt_rad < 0.0);
  CHECK(cfg.initial_pan_rad == Approx(0.0).margin(1e-12));
}

TEST_CASE("dataset manifest derives its paths from the config") {
  AppConfig c;
  c.dataset.out_dir = "/tmp/somewhere";
  c.seed = 5;
  const DatasetManifest m = c.to_dataset_manifest();
  CHECK(m.total == 9000);
  CHECK(m.positives == 4500);
  CHECK(m.image_dir == "/tmp/somewhere/images");
  CHECK(m.label_file == "/tmp/somewhere/labels.jsonl");
  CHECK(m.seed == 5);
}
