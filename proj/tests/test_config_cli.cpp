#include "modalray/config.hpp"
#include "modalray/errors.hpp"
#include "modalray/export.hpp"
#include "modalray/run.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace modalray;
namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = std::string(MODALRAY_SOURCE_DIR) + "/configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("modalray_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults carry the reference scenario") {
    const RunConfig cfg = parse_config("{}");
    CHECK(cfg.medium.c == 1500);
    CHECK(cfg.medium.c_bot == 1700);
    CHECK(cfg.medium.h0 == 10);
    CHECK(cfg.medium.grad_h == Vec2(1e-3, 0));
    CHECK(cfg.source.freq0 == 300);
    CHECK(cfg.source.dfreq == 50);
    CHECK(cfg.source.shell_mode == ShellMode::strict);
    CHECK(cfg.mode.l == 1);
  }

  TEST_CASE("canonical form round-trips") {
    for (const char* name : {"paper_fig2.json", "paper_fig3.json", "paper_fig45_sector.json"}) {
      const RunConfig cfg = load_config(kConfigDir + "/" + name);
      const std::string once = canonical_string(cfg);
      CHECK(canonical_string(config_from_json(canonical_json(cfg))) == once);
      CHECK(canonical_string(parse_config(once)) == once);
    }
    const RunConfig sector = load_config(kConfigDir + "/paper_fig45_sector.json");
    CHECK(sector.source.mu2.min == doctest::Approx(5 * std::numbers::pi / 12));
    CHECK(sector.source.mu2.endpoint);
  }

  TEST_CASE("validation names the offending key") {
    try {
      parse_config(R"({"medium": {"alpha": 1.5}})");
      FAIL("accepted alpha = 1.5");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("medium.alpha") != std::string::npos);
    }
    try {
      parse_config(R"({"source": {"radious": 2}})");
      FAIL("accepted an unknown key");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("source.radious") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(R"({"medium": {"h0": -1}})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"source": {"shell_mode": "loose"}})"), ValidationError);
    CHECK_THROWS_AS(parse_config("{ not json"), ParseError);
    CHECK_THROWS_AS(load_config(kConfigDir + "/missing.json"), ParseError);
  }

  TEST_CASE("overrides") {
    nlohmann::json doc = nlohmann::json::object();
    apply_override(doc, "medium.alpha=[0, 1]");
    apply_override(doc, "source.shell_mode=literal");
    apply_override(doc, "run.tau_end=2.5");
    apply_override(doc, "run.checkpoints=[1]");
    const RunConfig cfg = config_from_json(doc);
    CHECK(cfg.medium.alpha == std::vector<double>{0, 1});
    CHECK(cfg.source.shell_mode == ShellMode::literal);
    CHECK(cfg.run.tau_end == 2.5);
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ValidationError);
    CHECK_THROWS_AS(apply_override(doc, "medium..c=1"), ValidationError);
  }

  TEST_CASE("config hash") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }
}

TEST_SUITE("cli") {
  TEST_CASE("trace output is deterministic and uses the fixed header") {
    const std::vector<std::string> ov{"source.mu2.count=6", "run.tau_end=2", "run.checkpoints=[1]",
                                      "output.csv=t.csv", "output.svg=t.svg"};
    std::ostringstream err;
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(run_command("trace", kConfigDir + "/paper_fig2.json", ov, {a.string(), 1}, err) == 0);
    REQUIRE(run_command("trace", kConfigDir + "/paper_fig2.json", ov, {b.string(), 2}, err) == 0);
    for (const char* f : {"t.csv", "t.svg", "manifest_trace.json"}) CHECK(slurp(a / f) == slurp(b / f));
    const auto rows = read_csv(a / "t.csv");
    REQUIRE(!rows.empty());
    std::string header;
    for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
    CHECK(header == kTraceHeader);
    // 3 alphas x 6 rays x samples {0, 1, 2}.
    CHECK(rows.size() == 1 + 3 * 6 * 3);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest_trace.json"));
    CHECK(manifest["command"] == "trace");
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  }

  TEST_CASE("flat bottom traces straight radial rays") {
    const fs::path dir = scratch("flat");
    std::ostringstream err;
    REQUIRE(run_command("trace", kConfigDir + "/paper_fig2.json",
                        {"medium.grad_h=[0, 0]", "source.mu2.count=5", "run.tau_end=3", "run.checkpoints=[1, 2]",
                         "output.csv=flat.csv"},
                        {dir.string(), 1}, err) == 0);
    const auto rows = read_csv(dir / "flat.csv");
    REQUIRE(rows.size() > 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double mu2 = std::stod(rows[i][3]), x = std::stod(rows[i][6]), y = std::stod(rows[i][7]);
      CHECK(std::abs(x * std::sin(mu2) - y * std::cos(mu2)) < 1e-12);
      CHECK(x * std::cos(mu2) + y * std::sin(mu2) >= 1.0 - 1e-12);
    }
  }

  TEST_CASE("modes table lists every trapped mode") {
    const fs::path dir = scratch("modes");
    std::ostringstream err;
    REQUIRE(run_command("modes", kConfigDir + "/paper_fig2.json", {"source.mu2.count=4", "output.csv=m.csv"},
                        {dir.string(), 1}, err) == 0);
    const auto rows = read_csv(dir / "m.csv");
    // 3 alphas x 4 nodes x modes l = 0, 1.
    CHECK(rows.size() == 1 + 3 * 4 * 2);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i].back()) < 1e-10);
  }

  TEST_CASE("exit codes follow the error class") {
    const fs::path dir = scratch("codes");
    std::ostringstream err;
    CHECK(run_command("modes", kConfigDir + "/paper_fig2.json", {"medium.alpha=1.5"}, {dir.string(), 1}, err) == 2);
    CHECK(err.str().find("medium.alpha") != std::string::npos);
    CHECK(run_command("modes", kConfigDir + "/missing.json", {}, {dir.string(), 1}, err) == 2);
    // Depth turns negative inside the fan: a spectral failure.
    CHECK(run_command("trace", kConfigDir + "/paper_fig2.json", {"medium.grad_h=[20, 0]", "source.mu2.count=4"},
                      {dir.string(), 1}, err) == 3);
  }
}
