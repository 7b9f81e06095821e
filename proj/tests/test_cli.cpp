#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autoten/cli.hpp"
#include "autoten/corcondia.hpp"
#include "autoten/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace autoten;

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

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("autoten_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  const auto help = run({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("decompose") != std::string::npos);

  const auto missing = run({"decompose", "--loss", "fro", "--rank", "2"});
  CHECK(missing.code == cli::kUsage);
  CHECK(missing.err.find("--input") != std::string::npos);
  CHECK(run({"decompose", "--input", "/nonexistent.coo", "--loss", "fro", "--rank", "2"}).code == cli::kUsage);
}

TEST_CASE("decompose") {
  TempDir dir("decompose");
  save_coo_file(dir / "t.coo", oracle::random_tensor({4, 3, 5}, 0.5, 1, true));

  SUBCASE("writes five files") {
    const auto r = run({"decompose", "--input", dir / "t.coo", "--loss", "fro", "--rank", "2", "--output", dir / "out"});
    REQUIRE(r.code == cli::kOk);
    for (const auto* f : {"A.csv", "B.csv", "C.csv", "weights.csv", "result.json"}) CHECK(fs::exists(dir / (std::string("out/") + f)));
    const auto j = read_json(dir / "out/result.json");
    CHECK(j["loss"] == "fro");
    CHECK(j["rank"] == 2);
    CHECK(j.contains("fit"));
    CHECK(j.contains("iterations"));
    CHECK(j.contains("seed"));
    CHECK(j["invocation"]["args"][0] == "decompose");
    CHECK(r.out.rfind("loss=fro rank=2 fit=", 0) == 0);
    CHECK(load_matrix_csv_file(dir / "out/A.csv").rows() == 4);
    CHECK(load_matrix_csv_file(dir / "out/weights.csv").cols() == 1);
  }
  SUBCASE("kl loss") {
    CHECK(run({"decompose", "--input", dir / "t.coo", "--loss", "kl", "--rank", "2", "--output", dir / "kl"}).code == cli::kOk);
    CHECK(read_json(dir / "kl/result.json")["loss"] == "kl");
  }
  SUBCASE("bad rank and loss") {
    const auto r = run({"decompose", "--input", dir / "t.coo", "--loss", "fro", "--rank", "0"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("rank must be ≥ 1") != std::string::npos);
    CHECK(run({"decompose", "--input", dir / "t.coo", "--loss", "l1", "--rank", "2"}).code == cli::kUsage);
    CHECK(run({"decompose", "--input", dir / "t.coo", "--loss", "fro", "--rank", "2", "--restarts", "0"}).code == cli::kUsage);
  }
  SUBCASE("malformed input") {
    std::ofstream(dir / "bad.coo") << "0 0 x 1\n";
    CHECK(run({"decompose", "--input", dir / "bad.coo", "--loss", "fro", "--rank", "1"}).code == cli::kUsage);
  }
}

TEST_CASE("corcondia") {
  TempDir dir("corcondia");
  const SparseTensor3::Dims d{5, 4, 6};
  const auto truth = oracle::random_positive_factors(d, 2, 3);
  const auto t = oracle::exact_tensor(truth, d);
  save_coo_file(dir / "t.coo", t);
  fs::create_directories(dir / "f");
  save_matrix_csv_file(dir / "f/A.csv", truth.a);
  save_matrix_csv_file(dir / "f/B.csv", truth.b);
  save_matrix_csv_file(dir / "f/C.csv", truth.c);

  SUBCASE("exact model with its own factors") {
    const auto r = run({"corcondia", "--input", dir / "t.coo", "--loss", "fro", "--factors", dir / "f", "--output", dir / "o"});
    REQUIRE(r.code == cli::kOk);
    CHECK(std::abs(std::stod(r.out) - 100.0) <= 1e-4);
    CHECK(r.out.find('.') != std::string::npos);
    const auto j = read_json(dir / "o/diagnostic.json");
    CHECK(j["c"].get<double>() == corcondia_fro(t, truth).c);
    CHECK(load_matrix_csv_file(dir / "o/core.csv").rows() == 4);
  }
  SUBCASE("random instance matches the library value exactly") {
    const auto rt = oracle::random_tensor(d, 0.6, 8);
    save_coo_file(dir / "r.coo", rt);
    REQUIRE(run({"corcondia", "--input", dir / "r.coo", "--loss", "fro", "--factors", dir / "f", "--output", dir / "r"}).code == cli::kOk);
    CHECK(read_json(dir / "r/diagnostic.json")["c"].get<double>() == corcondia_fro(rt, truth).c);
  }
  SUBCASE("kl loss from a fitted model") {
    const auto r = run({"corcondia", "--input", dir / "t.coo", "--loss", "kl", "--rank", "2", "--output", dir / "k"});
    REQUIRE(r.code == cli::kOk);
    CHECK(read_json(dir / "k/diagnostic.json")["iterations"].get<int>() > 0);
  }
  SUBCASE("missing factor file") {
    fs::remove(dir / "f/C.csv");
    CHECK(run({"corcondia", "--input", dir / "t.coo", "--loss", "fro", "--factors", dir / "f"}).code == cli::kUsage);
  }
  SUBCASE("rank-deficient factors") {
    DenseMatrix flat(6, 2, 1.0);
    save_matrix_csv_file(dir / "f/C.csv", flat);
    const auto r = run({"corcondia", "--input", dir / "t.coo", "--loss", "fro", "--factors", dir / "f", "--output", dir / "s"});
    CHECK(r.code == cli::kNumerical);
    CHECK(r.err.find("rank") != std::string::npos);
  }
  SUBCASE("exactly one source of factors") {
    CHECK(run({"corcondia", "--input", dir / "t.coo", "--loss", "fro"}).code == cli::kUsage);
    CHECK(run({"corcondia", "--input", dir / "t.coo", "--loss", "fro", "--rank", "2", "--factors", dir / "f"}).code == cli::kUsage);
  }
}

TEST_CASE("synth and autoten") {
  TempDir dir("autoten");
  const auto s = run({"synth", "--rank", "2", "--seed", "3", "--output", dir / "t.coo"});
  REQUIRE(s.code == cli::kOk);
  CHECK(s.out.rfind("nnz=", 0) == 0);
  CHECK(fs::exists(dir / "t_truth/A.csv"));
  CHECK(load_coo_file(dir / "t.coo").dims() == SparseTensor3::Dims{50, 50, 50});

  const auto a = run({"autoten", "--input", dir / "t.coo", "--fmax", "4", "--seed", "3", "--output", dir / "j1"});
  REQUIRE(a.code == cli::kOk);
  const auto sel = read_json(dir / "j1/selection.json");
  CHECK(sel["f_star"] == 2);
  CHECK(sel["strategy"] == "maxf");
  CHECK(sel["warnings"].is_array());
  CHECK(sel["invocation"]["args"].size() == 9);
  CHECK(a.out.find("F*=2") != std::string::npos);
  CHECK(fs::exists(dir / "j1/A.csv"));

  const auto curves = slurp(dir / "j1/curves.csv");
  CHECK(curves.rfind("rank,c_fro,c_kl\n2,", 0) == 0);
  CHECK(curves.find("\n3,") != std::string::npos);
  CHECK(curves.find("\n4,") != std::string::npos);

  REQUIRE(run({"autoten", "--input", dir / "t.coo", "--fmax", "4", "--seed", "3", "--jobs", "8", "--output", dir / "j8"}).code == cli::kOk);
  CHECK(slurp(dir / "j8/curves.csv") == curves);

  const auto bad = run({"autoten", "--input", dir / "t.coo", "--fmax", "1"});
  CHECK(bad.code == cli::kUsage);
  CHECK(bad.err.find("fmax must be ≥ 2") != std::string::npos);
  CHECK(run({"autoten", "--input", dir / "t.coo", "--fmax", "3", "--strategy", "best"}).code == cli::kUsage);
  CHECK(run({"synth", "--mode", "tall", "--output", dir / "x.coo"}).code == cli::kUsage);
  CHECK(run({"synth", "--dims", "5,5", "--output", dir / "x.coo"}).code == cli::kUsage);
}

TEST_CASE("autoten on an all-zero tensor") {
  TempDir dir("zero");
  std::ofstream(dir / "z.coo") << "%dims 4 4 4\n";
  const auto r = run({"autoten", "--input", dir / "z.coo", "--fmax", "3", "--output", dir / "o"});
  CHECK(r.code == cli::kOk);
  const auto j = read_json(dir / "o/selection.json");
  CHECK(j["no_structure"] == true);
  CHECK(j["warnings"].back().get<std::string>().find("no good structure") != std::string::npos);
}

TEST_CASE("bench") {
  TempDir dir("bench");
  const auto r = run({"bench", "--trials", "1", "--cells", "sparse:gauss:2,sparse:none:2", "--seed", "5", "--output", dir / "b"});
  REQUIRE(r.code == cli::kOk);
  const auto j = read_json(dir / "b/report.json");
  REQUIRE(j["cells"].size() == 2);
  for (const auto& c : j["cells"]) {
    CHECK(c["per_method"].size() == 3);
    CHECK(c.contains("p_vs_baseline2"));
    CHECK(c.contains("p_vs_baseline3"));
  }
  CHECK(j.contains("invocation"));
  CHECK(fs::exists(dir / "b/report.csv"));
  CHECK(run({"bench", "--trials", "0", "--output", dir / "c"}).code == cli::kUsage);
  CHECK(run({"bench", "--cells", "sparse:gauss", "--output", dir / "c"}).code == cli::kUsage);
}
