#include "commands.hpp"
#include "ncpd/dataio.hpp"
#include "ncpd/problems.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using ncpd::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "ncpd");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<double> csv_values(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(cell == "inf" ? INFINITY : std::stod(cell));
  return v;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ncpd_test_cli" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"denoise", "--sigma", "abc"}).code == 2);
  CHECK(call({"prox-check", "--reg", "scad", "--gamma", "2"}).code == 2);
  CHECK(call({"prox-check", "--reg", "l1", "--lambda", "-1"}).code == 2);
  CHECK(call({"lasso", "--estimator", "spider"}).code == 2);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"denoise", "--help"}).code == 0);
}

TEST_CASE("help lists the published defaults") {
  const auto h = call({"denoise", "--help"});
  for (const char* flag : {"--lambda", "--c1", "--c2", "--sigma", "--boundary", "--timing"})
    CHECK(h.out.find(flag) != std::string::npos);
  CHECK(h.out.find("0.1") != std::string::npos);
  const auto l = call({"lasso", "--help"});
  for (const char* flag : {"--lambda", "--p", "--r", "--estimator", "--batch", "--seeds"})
    CHECK(l.out.find(flag) != std::string::npos);
}

TEST_CASE("runtime errors exit 1") {
  const auto r = call({"denoise", "--input", "/nonexistent_ncpd/img.pgm", "--out",
                       fresh_dir("missing").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("prox-check") {
  const auto l1 = call({"prox-check", "--reg", "l1", "--lambda", "2"});
  CHECK(l1.code == 0);
  const auto kv = key_values(l1.out);
  CHECK(std::stod(kv.at("max_deviation")) <= 1e-4);
  CHECK(kv.at("result") == "pass");

  const auto scad = call({"prox-check", "--reg", "scad", "--lambda", "1", "--gamma", "3", "--r", "0.5"});
  CHECK(scad.code == 0);
  CHECK(key_values(scad.out).at("result") == "pass");

  for (const char* reg : {"l0", "lp"}) CHECK(call({"prox-check", "--reg", reg, "--points", "200"}).code == 0);
}

TEST_CASE("spectra") {
  const auto id = key_values(call({"spectra", "--op", "identity", "--n", "4"}).out);
  CHECK(std::stod(id.at("op_norm")) == 1.0);
  CHECK(std::stod(id.at("hat_lambda")) == 1.0);
  CHECK(id.at("surjective") == "yes");

  const auto g = call({"spectra", "--op", "gradient", "--shape", "8x8"});
  const auto gk = key_values(g.out);
  CHECK(std::stod(gk.at("hat_lambda")) == 0.0);
  CHECK(gk.at("surjective") == "no");
  CHECK(g.out.find("note:") != std::string::npos);

  const auto st = key_values(call({"spectra", "--op", "stacked", "--n", "3"}).out);
  CHECK(std::abs(std::stod(st.at("min_eig_gram"))) <= 1e-12);
  CHECK(st.at("surjective") == "no");
}

TEST_CASE("denoise without iterations returns the noisy image") {
  const fs::path dir = fresh_dir("zero");
  const auto r = call({"denoise", "--synthetic", "16x16", "--max-iters", "0", "--timing", "off",
                       "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(ncpd::read_file((dir / "denoised.pgm").string()) == ncpd::read_file((dir / "noisy.pgm").string()));
  std::istringstream lines(r.out);
  std::string header, values;
  std::getline(lines, header);
  std::getline(lines, values);
  CHECK(header == "psnr_in,psnr_out,iters,seconds");
  const auto v = csv_values(values);
  CHECK(v[0] == v[1]);
  CHECK(v[2] == 0.0);
}

TEST_CASE("noiseless denoise reports an infinite input PSNR") {
  const fs::path dir = fresh_dir("sigma0");
  const auto r = call({"denoise", "--synthetic", "16x16", "--sigma", "0", "--max-iters", "200",
                       "--timing", "off", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const std::string line = r.out.substr(r.out.find('\n') + 1);
  CHECK(std::isinf(csv_values(line)[0]));
  CHECK(csv_values(line)[2] > 0.0);
  const std::string trace = ncpd::read_file((dir / "trace.csv").string());
  CHECK(trace.rfind("# denoise", 0) == 0);
  CHECK(trace.find(ncpd::kTraceHeader) != std::string::npos);
}

TEST_CASE("noiseless denoise has a nonincreasing objective trace") {
  const fs::path dir = fresh_dir("sigma0_trace");
  REQUIRE(call({"denoise", "--synthetic", "16x16", "--sigma", "0", "--max-iters", "200",
                "--timing", "off", "--out", dir.string()})
              .code == 0);
  std::istringstream rows(ncpd::read_file((dir / "trace.csv").string()));
  std::string row;
  std::getline(rows, row);
  std::getline(rows, row);
  long increases = 0;
  double prev = INFINITY;
  while (std::getline(rows, row)) {
    const double obj = csv_values(row)[2];
    if (obj > prev) ++increases;
    prev = obj;
  }
  CHECK(increases == 0);
}

TEST_CASE("denoise is byte-identical across runs") {
  std::vector<std::string> files;
  for (const char* name : {"det_a", "det_b"}) {
    const fs::path dir = fresh_dir(name);
    REQUIRE(call({"denoise", "--synthetic", "24x24", "--max-iters", "300", "--timing", "off",
                  "--out", dir.string()})
                .code == 0);
    files.push_back(ncpd::read_file((dir / "trace.csv").string()) +
                    ncpd::read_file((dir / "denoised.pgm").string()) +
                    ncpd::read_file((dir / "summary.txt").string()));
  }
  CHECK(files[0] == files[1]);
}

TEST_CASE("denoise reads a PGM file") {
  const fs::path dir = fresh_dir("input");
  fs::create_directories(dir);
  ncpd::ImageBuffer img{12, 10, ncpd::synthetic_piecewise_image(12, 10)};
  ncpd::write_pgm((dir / "in.pgm").string(), img);
  const auto r = call({"denoise", "--input", (dir / "in.pgm").string(), "--max-iters", "20",
                       "--out", (dir / "run").string()});
  CHECK(r.code == 0);
  CHECK(ncpd::read_pgm((dir / "run" / "denoised.pgm").string()).width == 10);
}

TEST_CASE("lasso full-batch svrg equals the full estimator") {
  std::vector<std::string> traces;
  for (auto [name, est, batch] : {std::tuple{"full", "full", "40"}, std::tuple{"svrgN", "svrg", "40"}}) {
    const fs::path dir = fresh_dir(name);
    REQUIRE(call({"lasso", "--synthetic", "40,6", "--estimator", est, "--batch", batch,
                  "--max-iters", "60", "--timing", "off", "--out", dir.string()})
                .code == 0);
    const std::string t = ncpd::read_file((dir / "trace_seed1.csv").string());
    traces.push_back(t.substr(t.find('\n') + 1));  // drop the flag echo
  }
  CHECK(traces[0] == traces[1]);
}

TEST_CASE("lasso writes per-seed traces and an aggregate") {
  const fs::path dir = fresh_dir("seeds");
  const auto r = call({"lasso", "--synthetic", "60,5", "--normalize-rows", "--seeds", "3",
                       "--max-epochs", "3", "--timing", "off", "--out", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"trace_seed1.csv", "trace_seed2.csv", "trace_seed3.csv", "aggregate.csv", "summary.txt"})
    CHECK(fs::exists(dir / f));
  const auto kv = key_values(ncpd::read_file((dir / "summary.txt").string()));
  CHECK(kv.at("seeds_ok") == "3");
  CHECK(kv.count("mean_objective_projected") == 1);
  const std::string agg = ncpd::read_file((dir / "aggregate.csv").string());
  CHECK(agg.find(ncpd::kAggregateHeader) != std::string::npos);
}

TEST_CASE("lasso reads LIBSVM input") {
  const fs::path dir = fresh_dir("libsvm");
  fs::create_directories(dir);
  ncpd::write_file((dir / "d.svm").string(),
                   "1 1:0.5 2:1\n-1 1:-0.5 3:0.2\n1 2:0.3 3:1\n-1 1:-1 2:-0.2\n");
  const auto r = call({"lasso", "--input", (dir / "d.svm").string(), "--max-epochs", "2", "--out",
                       (dir / "run").string()});
  CHECK(r.code == 0);
  const auto bad = call({"lasso", "--input", (dir / "missing.svm").string(), "--out", (dir / "run2").string()});
  CHECK(bad.code == 1);
}
