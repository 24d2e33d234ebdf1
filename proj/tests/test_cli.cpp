#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#ifndef NERSIM_BINARY
#error "NERSIM_BINARY must point at the built executable"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const std::string cmd =
      std::string(NERSIM_BINARY) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

fs::path write_config(const fs::path& scratch, const std::string& text) {
  const fs::path p = scratch / "config.txt";
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

const char* kGoodConfig = R"(
nucleus.spin = 3/2
nucleus.q_moment_m2 = 1e-28
nucleus.gamma_rad_s_T = 1e7
field.b0_T = 1e-3
field.e_amp_V_m = 6.2e-5
field.omega_rad_s = auto
efg.mode = given
efg.a_per_m = 8e19
efg.c_V_m2 = 7.9e16
pulse.angle_rad = 3.141592653589793
integrator.tol = 1e-8
output.samples = 9
)";

struct Scratch {
  fs::path dir;
  explicit Scratch(const char* name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("simulate subcommand writes trajectory and summary", "[cli]") {
  Scratch scratch("ner_cli_sim");
  const fs::path conf = write_config(scratch.dir, kGoodConfig);
  const fs::path out = scratch.dir / "run";
  const auto r = run_cli("simulate --config " + conf.string() + " --out " + out.string(), scratch.dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "summary.json"));

  std::ifstream csv(out / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t_s,p_m3/2,p_m1/2,p_m-1/2,p_m-3/2,fidelity,leakage");

  std::ifstream sj(out / "summary.json");
  const auto summary = nlohmann::json::parse(sj);
  CHECK(summary["final"]["populations"][1].get<double>() > 1.0 - 1e-5);
}

TEST_CASE("format flag selects the trajectory encoding", "[cli]") {
  Scratch scratch("ner_cli_fmt");
  const fs::path conf = write_config(scratch.dir, kGoodConfig);
  const fs::path out = scratch.dir / "run";
  const auto r = run_cli(
      "simulate --config " + conf.string() + " --out " + out.string() + " --format json",
      scratch.dir);
  CHECK(r.exit_code == 0);
  CHECK_FALSE(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "trajectory.json"));
}

TEST_CASE("config errors exit with the parse code and a JSON envelope", "[cli]") {
  Scratch scratch("ner_cli_badconf");
  const fs::path conf = write_config(scratch.dir, "nucleus.made_up = 12\n");
  const auto r = run_cli("simulate --config " + conf.string() + " --out " +
                             (scratch.dir / "x").string(),
                         scratch.dir);
  CHECK(r.exit_code == 2);
  const auto envelope = nlohmann::json::parse(r.stdout_text);
  CHECK(envelope["error"]["code"] == "config_parse");
  CHECK(envelope["error"]["message"].get<std::string>().find("made_up") != std::string::npos);
}

TEST_CASE("physics domain errors exit with the domain code", "[cli]") {
  Scratch scratch("ner_cli_domain");
  const std::string conf_text =
      "nucleus.spin = 1/2\n"
      "nucleus.q_moment_m2 = 0\n"
      "nucleus.gamma_rad_s_T = 1e7\n"
      "field.b0_T = 1e-3\n"
      "field.e_amp_V_m = 1e-4\n"
      "efg.mode = given\n"
      "efg.a_per_m = 8e19\n"
      "pulse.angle_rad = 3.14159\n";
  const fs::path conf = write_config(scratch.dir, conf_text);
  const auto r = run_cli(
      "gate --config " + conf.string() + " --out " + (scratch.dir / "x").string(), scratch.dir);
  CHECK(r.exit_code == 3);
  const auto envelope = nlohmann::json::parse(r.stdout_text);
  CHECK(envelope["error"]["code"] == "domain");
}

TEST_CASE("integrator stiffness exits with the numerical code", "[cli]") {
  Scratch scratch("ner_cli_numerical");
  const std::string conf_text =
      "nucleus.spin = 3/2\n"
      "nucleus.q_moment_m2 = 1e-28\n"
      "nucleus.gamma_rad_s_T = 1e7\n"
      "field.b0_T = 1e-3\n"
      "field.e_amp_V_m = 1e3\n"
      "field.omega_rad_s = 1e26\n"
      "efg.mode = given\n"
      "efg.a_per_m = 8e19\n"
      "efg.c_V_m2 = 7.9e16\n"
      "pulse.duration_s = 1e-3\n"
      "output.samples = 2\n";
  const fs::path conf = write_config(scratch.dir, conf_text);
  const auto r = run_cli(
      "simulate --config " + conf.string() + " --out " + (scratch.dir / "x").string(),
      scratch.dir);
  CHECK(r.exit_code == 4);
  const auto envelope = nlohmann::json::parse(r.stdout_text);
  CHECK(envelope["error"]["code"] == "numerical");
}

TEST_CASE("perf subcommand needs no config and prints the table", "[cli]") {
  Scratch scratch("ner_cli_perf");
  const auto r = run_cli("perf --out " + (scratch.dir / "perf").string(), scratch.dir);
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("12589.28") != std::string::npos);
  CHECK(r.stdout_text.find("11.57") != std::string::npos);
  CHECK(r.stdout_text.find("4.85") != std::string::npos);
  CHECK(fs::exists(scratch.dir / "perf" / "perf.json"));
}

TEST_CASE("gate subcommand reports schedule and fidelity files", "[cli]") {
  Scratch scratch("ner_cli_gate");
  const fs::path conf = write_config(scratch.dir, kGoodConfig);
  const fs::path out = scratch.dir / "gate";
  const auto r = run_cli("gate --config " + conf.string() + " --out " + out.string(), scratch.dir);
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(out / "schedule.json"));
  REQUIRE(fs::exists(out / "fidelity.json"));
  std::ifstream fj(out / "fidelity.json");
  const auto fidelity = nlohmann::json::parse(fj);
  CHECK(fidelity["fidelity"].get<double>() > 1.0 - 1e-5);
}

TEST_CASE("sweep subcommand writes one row per grid point", "[cli]") {
  Scratch scratch("ner_cli_sweep");
  std::string conf_text(kGoodConfig);
  conf_text += "sweep.field.e_amp_V_m = 3.1e-5, 6.2e-5\n";
  const fs::path conf = write_config(scratch.dir, conf_text);
  const fs::path out = scratch.dir / "sweep";
  const auto r = run_cli("sweep --config " + conf.string() + " --out " + out.string(), scratch.dir);
  CHECK(r.exit_code == 0);
  std::ifstream csv(out / "sweep.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 3);  // header + 2 rows
}

TEST_CASE("seedless flag is accepted bare and rejected with a value", "[cli]") {
  Scratch scratch("ner_cli_seedless");
  const auto ok = run_cli("perf --seedless --out " + (scratch.dir / "a").string(), scratch.dir);
  CHECK(ok.exit_code == 0);
  const auto bad =
      run_cli("perf --seedless=yes --out " + (scratch.dir / "b").string(), scratch.dir);
  CHECK(bad.exit_code != 0);
}

TEST_CASE("missing config is a parse error", "[cli]") {
  Scratch scratch("ner_cli_noconf");
  const auto r = run_cli("simulate --out " + (scratch.dir / "x").string(), scratch.dir);
  CHECK(r.exit_code == 2);
}
