#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "photostat/io.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PHOTOSTAT_CLI) + " " + args + " 2>/dev/null";
  Run r;
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

// Rows of the table called `name` in multi-table stdout output.
std::string section(const std::string& text, const std::string& name) {
  const std::string marker = "# " + name + "\n";
  const auto start = text.find(marker);
  if (start == std::string::npos) return {};
  const auto body = start + marker.size();
  const auto end = text.find("\n# ", body);
  return text.substr(body, end == std::string::npos ? std::string::npos : end + 1 - body);
}

const std::string kConfig = std::string("--config ") + PHOTOSTAT_CONFIG;

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("state --kind squeezed").status == 2);
  CHECK(run("state").status == 2);
  CHECK(run("--no-such-flag state --kind ts").status == 2);
  CHECK(run("--config /nonexistent.json state --kind ts").status == 2);
  CHECK(run("--format xml state --kind ts").status == 2);
  CHECK(run("state --kind psts --cbar 0 --t 1.5").status == 2);

  const auto dir = std::filesystem::temp_directory_path() / "photostat_cli_badcfg";
  std::filesystem::create_directories(dir);
  const auto bad = dir / "bad.json";
  std::FILE* f = std::fopen(bad.c_str(), "w");
  std::fputs("{\"t\": 0.5, \"bogus\": true}", f);
  std::fclose(f);
  CHECK(run("--config " + bad.string() + " state --kind ts").status == 2);
  std::filesystem::remove_all(dir);

  // Input far outside the convergence region of the quasi series.
  CHECK(run(kConfig + " quasi --kind ts --s 0.95 --points 16").status == 3);
}

TEST_CASE("subtraction at full transmission returns the thermal marginal") {
  const auto ts = run(kConfig + " state --kind ts");
  const auto ps = run(kConfig + " --t 1.0 state --kind psts --cbar 0");
  REQUIRE(ts.status == 0);
  REQUIRE(ps.status == 0);
  const auto a = csv_rows(ts.out);
  const auto b = csv_rows(ps.out);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) worst = std::max(worst, std::abs(std::stod(a[k][1]) - std::stod(b[k][1])));
  CHECK(worst < 1e-13);
}

TEST_CASE("identical config and seed give byte-identical output") {
  const std::string rec = kConfig + " --seed 7 reconstruct --kind ts --samples 20000";
  const auto first = run(rec);
  const auto second = run(rec);
  REQUIRE(first.status == 0);
  CHECK(first.out == second.out);
  CHECK(run(kConfig + " --seed 8 reconstruct --kind ts --samples 20000").out != first.out);
  CHECK(run(kConfig + " metrics --kind pssps").out == run(kConfig + " metrics --kind pssps").out);
}

TEST_CASE("files written with --out re-ingest as normalized distributions") {
  const auto dir = std::filesystem::temp_directory_path() / "photostat_cli_out";
  std::filesystem::remove_all(dir);
  for (const char* kind : {"ts", "sps", "psts", "pats", "pssps", "pasps", "patssc", "paspssc"}) {
    REQUIRE(run(kConfig + " --out " + dir.string() + " state --cbar 1 --kind " + kind).status == 0);
  }
  REQUIRE(run(kConfig + " --out " + dir.string() + " state --cbar 1 --kind pstwb").status == 0);
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.find("TWB") != std::string::npos) {
      CHECK(photostat::read_joint_csv(entry.path().string()).total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    } else {
      CHECK(photostat::read_distribution_csv(entry.path().string()).total_mass() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
    ++files;
  }
  CHECK(files == 9);
  std::filesystem::remove_all(dir);
}

TEST_CASE("JSON output") {
  const auto r = run(kConfig + " --format json metrics --kind psts --cbar 1");
  REQUIRE(r.status == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["records"].size() == 1);
  CHECK(doc["records"][0]["cbar"] == 1);
}

TEST_CASE("thermal Fano map is flat in the photocount number") {
  const auto r = run(kConfig + " sweep fig-s1 --panel a");
  REQUIRE(r.status == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() > 1);
  const auto& header = rows[0];
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const std::size_t im = col("M_th");
  const std::size_t it = col("t");
  const std::size_t ifano = col("fano");
  REQUIRE(ifano < header.size());
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> range;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double f = std::stod(rows[k][ifano]);
    auto [itr, fresh] = range.try_emplace({rows[k][im], rows[k][it]}, f, f);
    if (!fresh) {
      itr->second.first = std::min(itr->second.first, f);
      itr->second.second = std::max(itr->second.second, f);
    }
  }
  double worst = 0.0;
  for (const auto& [key, mm] : range) worst = std::max(worst, mm.second - mm.first);
  CHECK(worst < 1e-6);
}

TEST_CASE("success-probability table lists every conditioned single-beam state") {
  const auto r = run(kConfig + " table s2");
  REQUIRE(r.status == 0);
  const auto rows = csv_rows(section(r.out, "table_s2"));
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"state", "cbar", "model_percent", "paper_percent", "abs_dev"});
  std::map<std::string, int> per_state;
  for (std::size_t k = 1; k < rows.size(); ++k) ++per_state[rows[k][0]];
  for (const char* s : {"PSTS", "PATS", "PSSPS", "PASPS"}) CHECK(per_state[s] == 4);
  // No reference value for three sc-added photons.
  for (const char* s : {"PATSsc", "PASPSsc"}) CHECK(per_state[s] == 3);
  CHECK_FALSE(section(r.out, "table_s2_sensitivity_summary").empty());
}
