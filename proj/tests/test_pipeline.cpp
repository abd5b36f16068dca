#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "pivotfit/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace pivotfit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pivotfit-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Synthetic experiment: the reference backbone driven through a 3-amplitude protocol, written
// at an irregular raw sampling so that resampling has work to do.
fs::path write_raw_record(const fs::path& dir) {
  const auto b = oracle::reference_backbone();
  const PivotParams truth{19.82, 16.11, 0.73, 0.80, 147.4};
  const auto d = oracle::cyclic_protocol({10.0, 20.0, 30.0}, 2, 0.25);
  const auto f = simulate(b, truth, d);
  std::ofstream out(dir / "raw.csv");
  out << "time,displacement,load\n";
  for (Eigen::Index i = 0; i < d.size(); ++i) out << i << ',' << format_number(d[i], 12) << ',' << format_number(f[i], 12) << '\n';
  return dir / "raw.csv";
}

PipelineConfig base_config(const fs::path& dir) {
  PipelineConfig c;
  c.input = write_raw_record(dir);
  c.format.displacement_column = 1;
  c.format.load_column = 2;
  c.outdir = dir / "out";
  c.step.m = 2;
  c.scale.scale = 20;
  c.ga.population_size = 16;
  c.ga.max_generations = 15;
  return c;
}

}  // namespace

TEST_CASE("config JSON round-trips and overlays only present keys") {
  PipelineConfig c;
  c.ga.rng_seed = 99;
  c.ga.bounds.upper[4] = 600.0;
  c.displacement_unit = "mm";
  PipelineConfig d;
  apply_json(to_json(c), d);
  CHECK(to_json(d) == to_json(c));

  PipelineConfig e;
  apply_json(nlohmann::json::parse(R"({"scale": 50, "ga": {"bounds": {"beta1": [0.2, 0.6]}}})"), e);
  CHECK(e.scale.scale == 50);
  CHECK(e.step.m == 1);
  CHECK(e.ga.bounds.lower[2] == 0.2);
  CHECK(e.ga.bounds.upper[2] == 0.6);
  CHECK(e.ga.bounds.upper[0] == 100.0);

  CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"ga": {"bounds": {"gamma": [0, 1]}}})"), e), ValidationError);
  CHECK_THROWS_AS(apply_json(nlohmann::json::parse(R"({"scale": "many"})"), e), ValidationError);
}

TEST_CASE("bound overrides") {
  ParamBounds b;
  apply_bound_override("eta=10:500", b);
  CHECK(b.lower[4] == 10.0);
  CHECK(b.upper[4] == 500.0);
  CHECK_THROWS_AS(apply_bound_override("eta=10", b), ValidationError);
  CHECK_THROWS_AS(apply_bound_override("zeta=1:2", b), ValidationError);
  CHECK_THROWS_AS(apply_bound_override("alpha1=1:x", b), ValidationError);
}

TEST_CASE("params files round-trip and reject malformed entries") {
  const auto dir = scratch("params");
  const PivotParams p{19.82, 16.11, 0.73, 0.8, 147.4};
  write_params(dir / "p.txt", p);
  CHECK(read_params(dir / "p.txt") == p);
  CHECK(slurp(dir / "p.txt") == "alpha1 = 19.82\nalpha2 = 16.11\nbeta1 = 0.73\nbeta2 = 0.8\neta = 147.4\n");

  std::ofstream(dir / "commented.txt") << "# fitted\nalpha1 = 2 # note\nalpha2=3\n\nbeta1 = 0.5\nbeta2 = 0.5\neta = 0\n";
  CHECK(read_params(dir / "commented.txt") == PivotParams{2, 3, 0.5, 0.5, 0});
  std::ofstream(dir / "missing.txt") << "alpha1 = 2\n";
  CHECK_THROWS_AS(read_params(dir / "missing.txt"), ValidationError);
  std::ofstream(dir / "bad.txt") << "alpha1 = two\n";
  CHECK_THROWS_AS(read_params(dir / "bad.txt"), ValidationError);
  CHECK_THROWS_AS(read_params(dir / "absent.txt"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("fnv1a digest") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("pipeline writes every artifact; stages rerun alone give identical bytes") {
  const auto dir = scratch("pipeline");
  const auto c = base_config(dir);
  const auto report = run_pipeline(c);
  for (const char* name : {"reduced.csv", "resampled.csv", "envelope.csv", "idealized.csv", "convergence.csv",
                           "best_params.txt", "response.csv"})
    CHECK(fs::exists(c.outdir / name));

  // Grid uniformity of the emitted file.
  const auto resampled = load_record(c.outdir / "resampled.csv");
  for (Eigen::Index i = 1; i < resampled.size(); ++i)
    CHECK(std::abs(std::round((resampled.displacement[i] - resampled.displacement[i - 1]) * 20.0)) == 1.0);

  // Idealized table: 7 rows, origin in row 4.
  const auto idealized = load_record(c.outdir / "idealized.csv");
  REQUIRE(idealized.size() == 7);
  CHECK(idealized.displacement[3] == 0.0);
  CHECK(idealized.load[3] == 0.0);
  CHECK(slurp(c.outdir / "idealized.csv").find("\n0,0\n") != std::string::npos);

  // Envelope file agrees with the brute-force oracle on the resampled record.
  const auto envelope = load_record(c.outdir / "envelope.csv");
  std::vector<double> d(resampled.displacement.data(), resampled.displacement.data() + resampled.size());
  std::vector<double> l(resampled.load.data(), resampled.load.data() + resampled.size());
  const auto ref = oracle::envelope(d, l);
  REQUIRE(static_cast<std::size_t>(envelope.size()) == ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(envelope.load[static_cast<Eigen::Index>(k)] == ref[k].load);

  const auto convergence = slurp(c.outdir / "convergence.csv");
  CHECK(std::count(convergence.begin(), convergence.end(), '\n') <= c.ga.max_generations + 1);

  std::map<std::string, std::string> first;
  for (const auto& entry : fs::directory_iterator(c.outdir)) first[entry.path().filename().string()] = slurp(entry.path());

  // Each stage on its own, from the files of the previous one.
  run_resample(c);
  run_backbone(c);
  run_fit(c);
  for (const auto& [name, bytes] : first) {
    CAPTURE(name);
    CHECK(slurp(c.outdir / name) == bytes);
  }
  // And simulate from the written parameters reproduces response.csv.
  run_simulate(c);
  CHECK(slurp(c.outdir / "response.csv") == first["response.csv"]);

  // A full rerun is byte-identical, manifests included.
  write_manifest(c, "pipeline", report);
  const auto manifest = slurp(c.outdir / "manifest-pipeline.json");
  run_pipeline(c);
  write_manifest(c, "pipeline", report);
  CHECK(slurp(c.outdir / "manifest-pipeline.json") == manifest);
  const auto m = nlohmann::json::parse(manifest);
  CHECK(m.at("command") == "pipeline");
  CHECK(m.at("config_hash") == fnv1a_hex(to_json(c).dump()));
  CHECK(m.at("inputs").at("record").at("bytes").get<std::uintmax_t>() == fs::file_size(c.input));
  fs::remove_all(dir);
}

TEST_CASE("simulate with the generating parameters matches the experimental column") {
  const auto dir = scratch("simulate");
  auto c = base_config(dir);
  fs::create_directories(c.outdir);
  const auto b = oracle::reference_backbone();
  const PivotParams truth{19.82, 16.11, 0.73, 0.80, 147.4};
  SignalPair r;
  r.displacement = oracle::cyclic_protocol({10.0, 20.0, 30.0}, 1, 0.5);
  r.load = simulate(b, truth, r.displacement);
  write_record(c.outdir / "resampled.csv", r, TableFormat{17});
  write_record(c.outdir / "idealized.csv", to_pair(b));
  write_params(c.outdir / "best_params.txt", truth);
  run_simulate(c);
  const auto response = slurp(c.outdir / "response.csv");
  std::istringstream in(response);
  std::string line;
  std::getline(in, line);
  CHECK(line == "displacement,simulated_load,experimental_load");
  while (std::getline(in, line)) {
    double x = 0, sim = 0, exp = 0;
    char comma = 0;
    std::istringstream row(line);
    row >> x >> comma >> sim >> comma >> exp;
    CHECK(std::abs(sim - exp) <= 1e-9 * std::max(1.0, std::abs(exp)));
  }

  // Parameters at the bounds still simulate.
  write_params(c.outdir / "best_params.txt", PivotParams{100, 1, 0, 1, 1000});
  CHECK_NOTHROW(run_simulate(c));
  write_params(c.outdir / "best_params.txt", PivotParams{0.5, 1, 0, 1, 1000});
  CHECK_THROWS_AS(run_simulate(c), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("stage errors name the stage and keep their kind") {
  const auto dir = scratch("errors");
  PipelineConfig c;
  c.input = dir / "empty.csv";
  std::ofstream(c.input).close();
  c.outdir = dir / "out";
  try {
    run_pipeline(c);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.rfind("resample: ", 0) == 0);
    CHECK(what.find("line 1") != std::string::npos);
  }
  c.input = dir / "nope.csv";
  CHECK_THROWS_AS(run_resample(c), IoError);
  c.outdir = "/proc/pivotfit-cannot-write";
  std::ofstream(dir / "ok.csv") << "0,0\n1,1\n";
  c.input = dir / "ok.csv";
  try {
    run_resample(c);
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/proc/pivotfit-cannot-write") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("interrupted fit writes partial history and throws") {
  const auto dir = scratch("interrupt");
  const auto c = base_config(dir);
  run_resample(c);
  run_backbone(c);
  int calls = 0;
  RunControl control;
  control.should_stop = [&] { return ++calls > 3; };
  CHECK_THROWS_AS(run_fit(c, control), Interrupted);
  const auto convergence = slurp(c.outdir / "convergence.csv");
  CHECK(std::count(convergence.begin(), convergence.end(), '\n') == 1 + 4);
  CHECK(fs::exists(c.outdir / "best_params.txt"));
  fs::remove_all(dir);
}
