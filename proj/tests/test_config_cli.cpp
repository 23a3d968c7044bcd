#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynolearn/cli.hpp"
#include "dynolearn/config.hpp"
#include "dynolearn/csv.hpp"
#include "dynolearn/errors.hpp"

using namespace dynolearn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dynolearn_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const char* kNoiseless = R"(seed = 7
[system]
kind = "lds"
A = [[0.5]]
C = [[1]]
noise = "none"
init = "fixed"
x0 = [1]
)";

const char* kSmallRisk = R"(seed = 3
[harness]
t_grid = [10, 40, 120]
n_traj = 20
[system]
points = 2
)";

}  // namespace

TEST_CASE("config values parse") {
  CHECK(parse_config_value("12").as_count() == 12);
  CHECK(parse_config_value("18446744073709551615").as_u64() == 18446744073709551615ull);
  CHECK(parse_config_value("-2.5e-3").as_double() == -2.5e-3);
  CHECK(parse_config_value("\"lds\"").as_string() == "lds");
  CHECK(parse_config_value("true").as_bool());
  CHECK(parse_config_value("[[1, 2], [3, 4]]").as_matrix() == Matrix{{1, 2}, {3, 4}});
  CHECK(parse_config_value("[0.1, 0.2]").as_doubles() == Vector{0.1, 0.2});
  CHECK_THROWS_AS(parse_config_value("[1, 2").as_doubles(), ConfigError);
  CHECK_THROWS_AS(parse_config_value("\"x\"").as_double(), ConfigError);
  CHECK_THROWS_AS(parse_config_value("1.5").as_count(), ConfigError);
}

TEST_CASE("config round-trips losslessly") {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.seed = 0xFFFFFFFFFFFFFFF1ull;
  auto& lds = std::get<LdsSpec>(c.system);
  lds.A = Matrix{{0.1 / 3.0}};
  c.epsilons = {0.05, 1.0 / 7.0};
  c.baselines = {PredictorConfig::ar(3), PredictorConfig::of(PredictorKind::zero)};
  const std::string text = render_config(c);
  const ExperimentConfig back = build_config(ConfigDocument::parse(text));
  CHECK(render_config(back) == text);
  CHECK(back.seed == c.seed);
  CHECK(std::get<LdsSpec>(back.system).A(0, 0) == 0.1 / 3.0);
  CHECK(back.epsilons == c.epsilons);
  CHECK(config_digest(back) == config_digest(c));

  ExperimentConfig lz = ExperimentConfig::defaults();
  LorenzSpec spec;
  spec.obs_coords = {0, 2};
  lz.system = spec;
  lz.oracle = OracleKind::truth;
  const std::string lz_text = render_config(lz);
  CHECK(render_config(build_config(ConfigDocument::parse(lz_text))) == lz_text);
}

TEST_CASE("overrides and bad configs") {
  ConfigDocument doc = ConfigDocument::parse("[harness]\nn_traj = 10\n");
  doc.apply_override("harness.n_traj=500");
  doc.apply_override("predictor.m=4");
  const ExperimentConfig c = build_config(doc);
  CHECK(c.harness.n_traj == 500);
  CHECK(c.predictor.m == 4);
  CHECK_THROWS_AS(doc.apply_override("n_traj=5"), ConfigError);

  CHECK_THROWS_AS(ConfigDocument::parse("[system\nA = 1\n"), ConfigError);
  CHECK_THROWS_AS(ConfigDocument::parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(build_config(ConfigDocument::parse("[system]\nkind = \"pendulum\"\n")), ConfigError);
  CHECK_THROWS_AS(build_config(ConfigDocument::parse("[predictor]\nkind = \"oracle9000\"\n")), ConfigError);
  CHECK_THROWS_AS(build_config(ConfigDocument::parse("[system]\nA = [[1.5]]\n")), InvariantViolation);
  CHECK(parse_baseline("ar:5").ar_order == 5);
  CHECK(baseline_name(PredictorConfig::ar(5)) == "ar:5");
}

TEST_CASE("simulate writes the geometric column and is deterministic") {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = write_file(dir / "noiseless.ini", kNoiseless);
  const Run r = run({"simulate", "-c", cfg.string(), "-o", (dir / "a").string(), "--horizon", "20"});
  REQUIRE(r.code == 0);
  CHECK(r.out == "rows=20 seed=7\n");
  std::istringstream csv(slurp(dir / "a" / "trajectory.csv"));
  const CsvTable table = read_csv(csv);
  REQUIRE(table.rows.size() == 20);
  for (std::size_t t = 0; t < 20; ++t) CHECK(table.rows[t][1] == std::ldexp(1.0, -static_cast<int>(t)));

  REQUIRE(run({"simulate", "-c", cfg.string(), "-o", (dir / "b").string(), "--horizon", "20"}).code == 0);
  CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
  const std::string manifest = slurp(dir / "a" / "manifest.txt");
  CHECK(manifest.find("seed=7") != std::string::npos);
  CHECK(manifest.find("config_digest=") != std::string::npos);
  CHECK(manifest.find("version=" + std::string(cli::kVersion)) != std::string::npos);
}

TEST_CASE("manifest config reruns bit-identically") {
  const fs::path dir = scratch("rerun");
  const fs::path cfg = write_file(dir / "small.ini", kSmallRisk);
  REQUIRE(run({"risk", "-c", cfg.string(), "-o", (dir / "first").string(), "--threads", "2"}).code == 0);
  const fs::path saved = dir / "first" / "config.ini";
  REQUIRE(run({"risk", "-c", saved.string(), "-o", (dir / "second").string(), "--threads", "1"}).code == 0);
  CHECK(slurp(dir / "first" / "risk.csv") == slurp(dir / "second" / "risk.csv"));
  auto without_output = [](std::string text) {
    const auto at = text.find("output = ");
    return text.erase(at, text.find('\n', at) - at);
  };
  CHECK(without_output(slurp(dir / "first" / "config.ini")) == without_output(slurp(dir / "second" / "config.ini")));
}

TEST_CASE("filters subcommand") {
  const fs::path dir = scratch("filters");
  Run r = run({"filters", "--window", "2", "--m", "2", "-o", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream spec(slurp(dir / "spectrum.csv"));
  const CsvTable t = read_csv(spec);
  CHECK(t.rows[0][1] == doctest::Approx((4.0 + std::sqrt(13.0)) / 6.0).epsilon(1e-14));
  CHECK(t.rows[1][1] == doctest::Approx((4.0 - std::sqrt(13.0)) / 6.0).epsilon(1e-12));

  r = run({"filters", "--window", "256", "--m", "20", "-o", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream big(slurp(dir / "spectrum.csv"));
  const CsvTable b = read_csv(big);
  for (std::size_t i = 1; i < b.rows.size(); ++i) CHECK(b.rows[i][1] < b.rows[i - 1][1]);

  r = run({"filters", "--window", "100", "--m", "40", "-o", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("cap 20") != std::string::npos);
  CHECK(r.err.find("\"exit_code\":2") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run({"simulate", "-c", (dir / "missing.ini").string()}).code == 1);
  const fs::path bad = write_file(dir / "bad.ini", "[harness]\nn_traj = many things\n");
  const Run parse = run({"risk", "-c", bad.string(), "-o", dir.string()});
  CHECK(parse.code == 1);
  CHECK(parse.err.find("\"error\"") != std::string::npos);
  CHECK(run({"risk", "--harness.n_traj=1", "-o", dir.string()}).code == 2);

  const Run pairing = run({"risk", "--oracle.kind=truth", "--harness.n_traj=2", "-o", dir.string()});
  CHECK(pairing.code == 3);
  CHECK(pairing.err.find("zero") != std::string::npos);
  const Run raw = run({"risk", "--oracle.kind=zero", "--harness.n_traj=2", "--harness.t_grid=[10]", "-o", dir.string()});
  CHECK(raw.code == 0);
  CHECK(raw.out.find("mode=raw") != std::string::npos);

  const Run blow = run({"simulate", "--system.kind=lorenz", "--system.x0=[1e150, 1e150, 1e150]", "--system.dt=0.05",
                        "--horizon=50", "-o", dir.string()});
  CHECK(blow.code == 4);
  CHECK(run({}).code == 1);
  CHECK(run({"unknown"}).code == 1);
}

TEST_CASE("risk with the oracle as algorithm has zero excess") {
  const fs::path dir = scratch("self");
  const fs::path cfg = write_file(dir / "small.ini", kSmallRisk);
  const Run r = run({"risk", "-c", cfg.string(), "--predictor.kind=kalman", "-o", dir.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "risk.csv"));
  for (const auto& row : read_csv(csv).rows) CHECK(std::abs(row[1]) <= row[2] + 1e-15);
}

TEST_CASE("burnin from a curve file") {
  const fs::path dir = scratch("burnin");
  const fs::path curve = write_file(dir / "curve.csv",
                                    "t,excess_mean,excess_ci,raw_alg,raw_oracle\n10,0.5,0,0.5,0\n50,0.2,0,0.2,0\n"
                                    "100,0.08,0,0.08,0\n500,0.04,0,0.04,0\n1000,0.03,0,0.03,0\n");
  const Run r = run({"burnin", "--curve", curve.string(), "--epsilon", "0.05", "-o", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("t_star=500") != std::string::npos);
  CHECK(slurp(dir / "burnin.csv") == "epsilon,t_star,uniform_checked_to\n0.050000000000000003,500,1000\n");
  CHECK(run({"burnin", "--curve", curve.string(), "-o", dir.string()}).code == 1);
}

TEST_CASE("remaining subcommands write their artifacts") {
  const fs::path dir = scratch("others");
  const fs::path cfg = write_file(dir / "small.ini", kSmallRisk);
  REQUIRE(run({"burnin", "-c", cfg.string(), "-o", (dir / "burnin").string()}).code == 0);
  CHECK(fs::exists(dir / "burnin" / "burnin.csv"));
  REQUIRE(run({"mstar", "-c", cfg.string(), "--mstar.m_values=[1, 4]", "-o", (dir / "mstar").string()}).code == 0);
  CHECK(slurp(dir / "mstar" / "mstar.csv").rfind("m,terminal_excess,excess_ci,achieved\n", 0) == 0);
  REQUIRE(run({"agnostic", "-c", cfg.string(), "-o", (dir / "agnostic").string()}).code == 0);
  CHECK(fs::exists(dir / "agnostic" / "agnostic.csv"));
  REQUIRE(run({"biasvar", "-c", cfg.string(), "--biasvar.reference_multiplier=2", "-o", (dir / "biasvar").string()}).code == 0);
  CHECK(slurp(dir / "biasvar" / "biasvar.csv").rfind("t,bias,bias_ci,variance,variance_ci\n", 0) == 0);
  for (const char* sub : {"burnin", "mstar", "agnostic", "biasvar"})
    CHECK(slurp(dir / sub / "manifest.txt").find(std::string("subcommand=") + sub) != std::string::npos);
}

TEST_CASE("thread count from the environment") {
  const fs::path dir = scratch("env");
  ::setenv("DYNOLEARN_THREADS", "abc", 1);
  CHECK(run({"risk", "--harness.n_traj=2", "--harness.t_grid=[10]", "-o", dir.string()}).code == 1);
  ::setenv("DYNOLEARN_THREADS", "2", 1);
  CHECK(run({"risk", "--harness.n_traj=2", "--harness.t_grid=[10]", "-o", dir.string()}).code == 0);
  ::unsetenv("DYNOLEARN_THREADS");
}
